#include "depthstitch/robust.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

#include "depthstitch/rng.hpp"

namespace depthstitch {

namespace {

constexpr int kMinSample = 6;

// Similarity that moves the given points to zero centroid and sqrt(2) RMS
// radius (identity when the points are coincident).
Eigen::Matrix3d normalizing_transform(const std::vector<MatchRecord>& records,
                                      bool target_side) {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const MatchRecord& r : records) mean += target_side ? r.p : r.q;
  mean /= static_cast<double>(records.size());
  double rms = 0.0;
  for (const MatchRecord& r : records)
    rms += ((target_side ? r.p : r.q) - mean).squaredNorm();
  rms = std::sqrt(rms / static_cast<double>(records.size()));
  const double scale = rms > 1e-12 ? std::sqrt(2.0) / rms : 1.0;
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  t(0, 0) = t(1, 1) = scale;
  t(0, 2) = -scale * mean.x();
  t(1, 2) = -scale * mean.y();
  return t;
}

// Mapping error that reports +inf instead of throwing, for hot loops.
double safe_mapping_error(const EpipolarModel& model, const MatchRecord& rec) {
  const Eigen::Vector3d v =
      model.h_inf * homogeneous(rec.p) + rec.inv_depth * model.epipole;
  if (std::abs(v.z()) < 1e-12) return std::numeric_limits<double>::infinity();
  const double dx = v.x() / v.z() - rec.q.x();
  const double dy = v.y() / v.z() - rec.q.y();
  const double e2 = dx * dx + dy * dy;
  return std::isfinite(e2) ? std::sqrt(e2)
                           : std::numeric_limits<double>::infinity();
}

std::vector<int> inliers_below(const EpipolarModel& model,
                               const std::vector<MatchRecord>& records,
                               double threshold) {
  std::vector<int> result;
  for (size_t i = 0; i < records.size(); ++i)
    if (safe_mapping_error(model, records[i]) < threshold)
      result.push_back(static_cast<int>(i));
  return result;
}

double mean_error_over(const EpipolarModel& model,
                       const std::vector<MatchRecord>& records,
                       const std::vector<int>& indices) {
  if (indices.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (int i : indices) sum += safe_mapping_error(model, records[i]);
  return sum / static_cast<double>(indices.size());
}

std::vector<MatchRecord> gather(const std::vector<MatchRecord>& records,
                                const std::vector<int>& indices) {
  std::vector<MatchRecord> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(records[i]);
  return out;
}

// Standard-form adaptive RANSAC bound: iterations needed so that an
// all-inlier sample is drawn with the configured confidence.
int adaptive_iterations(double inlier_ratio, int sample_size,
                        double confidence, int cap) {
  if (inlier_ratio <= 0.0) return cap;
  const double p_good = std::pow(inlier_ratio, sample_size);
  if (p_good >= 1.0 - 1e-12) return 1;
  const double denom = std::log1p(-p_good);
  if (denom >= 0.0) return cap;
  const double n = std::log(1.0 - confidence) / denom;
  if (!(n > 0.0)) return 1;
  if (n >= static_cast<double>(cap)) return cap;
  return static_cast<int>(std::ceil(n));
}

void draw_distinct(Rng& rng, int n, int k, std::vector<int>* out) {
  out->clear();
  while (static_cast<int>(out->size()) < k) {
    const int candidate = static_cast<int>(rng.bounded(n));
    if (std::find(out->begin(), out->end(), candidate) == out->end())
      out->push_back(candidate);
  }
}

}  // namespace

EpipolarModel solve_linear_he(const std::vector<MatchRecord>& records,
                              bool allow_degenerate) {
  const int n = static_cast<int>(records.size());
  if (n < kMinSample)
    throw StitchError(ErrorKind::InsufficientMatches,
                      "need at least 6 records, got " + std::to_string(n));

  const Eigen::Matrix3d t_target = normalizing_transform(records, true);
  const Eigen::Matrix3d t_ref = normalizing_transform(records, false);
  double depth_rms = 0.0;
  for (const MatchRecord& r : records) depth_rms += r.inv_depth * r.inv_depth;
  depth_rms = std::sqrt(depth_rms / n);
  const double depth_scale = depth_rms > 1e-300 ? depth_rms : 1.0;

  Eigen::MatrixXd m(2 * n, 12);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d ph = t_target * homogeneous(records[i].p);
    const Eigen::Vector3d qh = t_ref * homogeneous(records[i].q);
    const double x = ph.x(), y = ph.y();
    const double xr = qh.x(), yr = qh.y();
    const double w = records[i].inv_depth / depth_scale;
    m.row(2 * i) << x, y, 1, 0, 0, 0, -xr * x, -xr * y, -xr, w, 0, -xr * w;
    m.row(2 * i + 1) << 0, 0, 0, x, y, 1, -yr * x, -yr * y, -yr, 0, w, -yr * w;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU |
                                               Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  // One vanishing singular value is the gauge freedom; a collapsing second
  // one means the records cannot pin down all 12 parameters (coplanar scene,
  // single depth, repeated points).
  const double s0 = sv(0);
  const double s10 = sv(10);
  const double s11 = sv(11);
  const bool degenerate = s10 <= 1e-10 * s0 || (s10 > 0.0 && s11 / s10 > 0.5);
  if (degenerate && !allow_degenerate)
    throw StitchError(ErrorKind::DegenerateConfiguration,
                      "records do not constrain a full transfer model");

  const Eigen::Matrix<double, 12, 1> v = svd.matrixV().col(11);
  Eigen::Matrix3d h_norm;
  h_norm << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
  const Eigen::Vector3d e_norm(v(9), v(10), v(11));

  EpipolarModel model;
  const Eigen::Matrix3d t_ref_inv = t_ref.inverse();
  model.h_inf = t_ref_inv * h_norm * t_target;
  model.epipole = t_ref_inv * e_norm / depth_scale;
  return model_from_parameters(canonicalize(model));
}

namespace detail {

bool transfer_residuals(const Eigen::Matrix<double, 12, 1>& params,
                        const std::vector<MatchRecord>& records,
                        const std::vector<int>& indices,
                        Eigen::VectorXd* residuals, Eigen::MatrixXd* jacobian) {
  const int n = static_cast<int>(indices.size());
  residuals->resize(2 * n);
  if (jacobian) jacobian->setZero(2 * n, 12);
  bool finite = true;
  for (int i = 0; i < n; ++i) {
    const MatchRecord& rec = records[indices[i]];
    const double x = rec.p.x(), y = rec.p.y(), w = rec.inv_depth;
    // v = H p~ + w e', written out against the parameter layout
    // (h_inf row-major in params 0..8, epipole in 9..11).
    const double v1 = params(0) * x + params(1) * y + params(2) + w * params(9);
    const double v2 = params(3) * x + params(4) * y + params(5) + w * params(10);
    const double v3 = params(6) * x + params(7) * y + params(8) + w * params(11);
    const double inv_v3 = 1.0 / v3;
    const double px = v1 * inv_v3;
    const double py = v2 * inv_v3;
    (*residuals)(2 * i) = px - rec.q.x();
    (*residuals)(2 * i + 1) = py - rec.q.y();
    if (!std::isfinite(px) || !std::isfinite(py)) finite = false;
    if (jacobian) {
      // d(v1/v3)/dtheta = (dv1 - px dv3) / v3, and likewise for v2.
      const double gx[12] = {x, y, 1, 0, 0, 0, -px * x, -px * y, -px, w, 0,
                             -px * w};
      const double gy[12] = {0, 0, 0, x, y, 1, -py * x, -py * y, -py, 0, w,
                             -py * w};
      for (int c = 0; c < 12; ++c) {
        (*jacobian)(2 * i, c) = gx[c] * inv_v3;
        (*jacobian)(2 * i + 1, c) = gy[c] * inv_v3;
      }
    }
  }
  return finite;
}

}  // namespace detail

EpipolarModel refine_lm(const EpipolarModel& initial,
                        const std::vector<MatchRecord>& records,
                        const std::vector<int>& indices) {
  if (indices.empty())
    throw StitchError(ErrorKind::InsufficientMatches,
                      "cannot refine over an empty index set");
  Eigen::Matrix<double, 12, 1> params = canonicalize(initial);
  Eigen::VectorXd r;
  Eigen::MatrixXd j;
  if (!detail::transfer_residuals(params, records, indices, &r, &j))
    throw StitchError(ErrorKind::NonFiniteResidual,
                      "objective not finite at the initial model");
  double f = r.squaredNorm();
  double lambda = 1e-3;

  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::Matrix<double, 12, 12> jtj = j.transpose() * j;
    const Eigen::Matrix<double, 12, 1> g = j.transpose() * r;
    Eigen::Matrix<double, 12, 12> damped = jtj;
    for (int d = 0; d < 12; ++d)
      damped(d, d) += lambda * std::max(jtj(d, d), 1e-12);
    const Eigen::Matrix<double, 12, 1> step = damped.ldlt().solve(-g);
    const Eigen::Matrix<double, 12, 1> candidate = params + step;

    Eigen::VectorXd r_new;
    Eigen::MatrixXd j_new;
    const bool finite =
        detail::transfer_residuals(candidate, records, indices, &r_new, &j_new);
    const double f_new = finite ? r_new.squaredNorm()
                                : std::numeric_limits<double>::infinity();
    if (f_new < f) {
      const double drop = f - f_new;
      params = candidate;
      r.swap(r_new);
      j.swap(j_new);
      f = f_new;
      lambda = std::max(lambda * 0.1, 1e-12);
      if (drop <= 1e-12 * std::max(1.0, f) || f == 0.0) break;
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }
  return model_from_parameters(canonicalize(model_from_parameters(params)));
}

FitResult ransac_fit(const MatchSet& matches, const RansacConfig& config) {
  const std::vector<MatchRecord>& records = matches.records;
  const int n = static_cast<int>(records.size());
  if (n < kMinSample)
    throw StitchError(ErrorKind::InsufficientMatches,
                      "need at least 6 matches, got " + std::to_string(n));
  if (!(config.distance_threshold > 0.0) || config.max_iterations < 1 ||
      !(config.confidence > 0.0 && config.confidence < 1.0))
    throw StitchError(ErrorKind::InvalidParam, "bad RANSAC configuration");

  Rng rng(config.seed);
  std::vector<int> sample;
  std::vector<int> best_inliers;
  EpipolarModel best_model;
  int required = config.max_iterations;
  int it = 0;
  for (; it < config.max_iterations && it < required; ++it) {
    draw_distinct(rng, n, kMinSample, &sample);
    EpipolarModel model;
    try {
      model = solve_linear_he(gather(records, sample));
    } catch (const StitchError&) {
      continue;  // degenerate sample, spend the iteration
    }
    std::vector<int> inliers =
        inliers_below(model, records, config.distance_threshold);
    if (inliers.size() > best_inliers.size()) {
      best_inliers = std::move(inliers);
      best_model = model;
      required = adaptive_iterations(
          static_cast<double>(best_inliers.size()) / n, kMinSample,
          config.confidence, config.max_iterations);
    }
  }
  if (static_cast<int>(best_inliers.size()) < kMinSample)
    throw StitchError(ErrorKind::NoConsensus,
                      "no sample explained at least 6 matches");

  // Re-estimate on the consensus; keep the sample model if the refit
  // degenerates or loses support.
  try {
    const EpipolarModel refit = solve_linear_he(gather(records, best_inliers));
    std::vector<int> refit_inliers =
        inliers_below(refit, records, config.distance_threshold);
    if (refit_inliers.size() >= best_inliers.size()) {
      best_model = refit;
      best_inliers = std::move(refit_inliers);
    }
  } catch (const StitchError&) {
  }

  FitResult result;
  result.model = best_model;
  result.inliers = best_inliers;
  result.mean_mapping_error = mean_error_over(best_model, records, best_inliers);
  result.iterations = it;
  return result;
}

FitResult estimate_epipolar(const MatchSet& matches,
                            const RansacConfig& config) {
  FitResult result = ransac_fit(matches, config);
  EpipolarModel refined;
  try {
    refined = refine_lm(result.model, matches.records, result.inliers);
  } catch (const StitchError&) {
    refined = result.model;  // keep the linear estimate
  }
  std::vector<int> inliers =
      inliers_below(refined, matches.records, config.distance_threshold);
  if (inliers.size() >= result.inliers.size() ||
      static_cast<int>(inliers.size()) >= kMinSample) {
    result.model = refined;
    result.inliers = std::move(inliers);
  }
  result.mean_mapping_error =
      mean_error_over(result.model, matches.records, result.inliers);
  return result;
}

namespace {

Eigen::Matrix3d solve_homography_dlt(const std::vector<MatchRecord>& records,
                                     bool* degenerate) {
  const int n = static_cast<int>(records.size());
  const Eigen::Matrix3d t_target = normalizing_transform(records, true);
  const Eigen::Matrix3d t_ref = normalizing_transform(records, false);
  Eigen::MatrixXd m(2 * n, 9);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d ph = t_target * homogeneous(records[i].p);
    const Eigen::Vector3d qh = t_ref * homogeneous(records[i].q);
    const double x = ph.x(), y = ph.y(), xr = qh.x(), yr = qh.y();
    m.row(2 * i) << x, y, 1, 0, 0, 0, -xr * x, -xr * y, -xr;
    m.row(2 * i + 1) << 0, 0, 0, x, y, 1, -yr * x, -yr * y, -yr;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU |
                                               Eigen::ComputeFullV);
  // A minimal 4-point sample yields an 8x9 system with only 8 singular
  // values; its null vector is exact, so the ambiguity ratio uses 0 there.
  const Eigen::VectorXd& sv = svd.singularValues();
  const double s7 = sv(7);
  const double s8 = sv.size() > 8 ? sv(8) : 0.0;
  *degenerate = s7 <= 1e-10 * sv(0) || (s7 > 0.0 && s8 / s7 > 0.5);
  const Eigen::Matrix<double, 9, 1> v = svd.matrixV().col(8);
  Eigen::Matrix3d h;
  h << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
  return t_ref.inverse() * h * t_target;
}

double homography_error(const Eigen::Matrix3d& h, const MatchRecord& rec) {
  const Eigen::Vector3d v = h * homogeneous(rec.p);
  if (std::abs(v.z()) < 1e-12) return std::numeric_limits<double>::infinity();
  const double dx = v.x() / v.z() - rec.q.x();
  const double dy = v.y() / v.z() - rec.q.y();
  const double e2 = dx * dx + dy * dy;
  return std::isfinite(e2) ? std::sqrt(e2)
                           : std::numeric_limits<double>::infinity();
}

// One homography RANSAC round over `active`; returns inlier indices drawn
// from `active` (global indices). Continues the caller's PRNG stream.
std::vector<int> homography_round(const std::vector<MatchRecord>& records,
                                  const std::vector<int>& active,
                                  const RansacConfig& config, Rng& rng) {
  constexpr int kSample = 4;
  const int n = static_cast<int>(active.size());
  if (n < kSample) return {};
  std::vector<int> pick;
  std::vector<int> best;
  Eigen::Matrix3d best_h = Eigen::Matrix3d::Identity();
  int required = config.max_iterations;
  for (int it = 0; it < config.max_iterations && it < required; ++it) {
    draw_distinct(rng, n, kSample, &pick);
    std::vector<MatchRecord> sample;
    sample.reserve(kSample);
    for (int s : pick) sample.push_back(records[active[s]]);
    bool degenerate = false;
    const Eigen::Matrix3d h = solve_homography_dlt(sample, &degenerate);
    if (degenerate) continue;
    std::vector<int> inliers;
    for (int idx : active)
      if (homography_error(h, records[idx]) < config.distance_threshold)
        inliers.push_back(idx);
    if (inliers.size() > best.size()) {
      best = std::move(inliers);
      best_h = h;
      required = adaptive_iterations(static_cast<double>(best.size()) / n,
                                     kSample, config.confidence,
                                     config.max_iterations);
    }
  }
  if (best.size() < kSample) return {};
  // Refit on the consensus, same discipline as the depth fitter.
  bool degenerate = false;
  const Eigen::Matrix3d h = solve_homography_dlt(gather(records, best),
                                                 &degenerate);
  if (!degenerate) {
    std::vector<int> refit;
    for (int idx : active)
      if (homography_error(h, records[idx]) < config.distance_threshold)
        refit.push_back(idx);
    if (refit.size() >= best.size()) best = std::move(refit);
  }
  return best;
}

}  // namespace

Eigen::Matrix3d fit_homography(const std::vector<MatchRecord>& records,
                               const std::vector<int>& indices) {
  if (indices.size() < 4)
    throw StitchError(ErrorKind::InsufficientMatches,
                      "need at least 4 records for a homography");
  bool degenerate = false;
  const Eigen::Matrix3d h =
      solve_homography_dlt(gather(records, indices), &degenerate);
  if (degenerate)
    throw StitchError(ErrorKind::DegenerateConfiguration,
                      "records do not constrain a homography");
  return h;
}

BaselineReport baseline_fit(const MatchSet& matches,
                            const RansacConfig& config, BaselineKind kind) {
  const std::vector<MatchRecord>& records = matches.records;
  if (records.size() < 4)
    throw StitchError(ErrorKind::InsufficientMatches,
                      "need at least 4 matches for a homography baseline");
  Rng rng(config.seed);
  std::vector<int> all(records.size());
  for (size_t i = 0; i < records.size(); ++i) all[i] = static_cast<int>(i);

  BaselineReport report;
  report.kind = kind;
  if (kind == BaselineKind::HomographyRansac) {
    report.inliers = homography_round(records, all, config, rng);
    report.rounds = 1;
  } else {
    // Rounds claim planes one at a time until a round cannot explain even a
    // minimal depth sample's worth of records (6), capped at 8 rounds.
    std::vector<int> residue = all;
    report.rounds = 0;
    while (report.rounds < 8) {
      const std::vector<int> found =
          homography_round(records, residue, config, rng);
      if (found.size() < 6) break;
      ++report.rounds;
      report.inliers.insert(report.inliers.end(), found.begin(), found.end());
      std::vector<int> next;
      std::sort(report.inliers.begin(), report.inliers.end());
      for (int idx : residue)
        if (!std::binary_search(report.inliers.begin(), report.inliers.end(),
                                idx))
          next.push_back(idx);
      residue = std::move(next);
      if (residue.size() < 6) break;
    }
    std::sort(report.inliers.begin(), report.inliers.end());
  }

  if (report.inliers.empty())
    throw StitchError(ErrorKind::NoConsensus, "baseline found no consensus");

  // Score against a depth model fit to the baseline's own inliers; a
  // plane-only inlier set is rank-deficient for that model, so take the
  // least-squares direction anyway to get a comparable number.
  report.mean_mapping_error = std::numeric_limits<double>::quiet_NaN();
  if (report.inliers.size() >= 6) {
    try {
      EpipolarModel model =
          solve_linear_he(gather(records, report.inliers), true);
      try {
        model = refine_lm(model, records, report.inliers);
      } catch (const StitchError&) {
      }
      report.mean_mapping_error =
          mean_error_over(model, records, report.inliers);
    } catch (const StitchError&) {
    }
  }
  return report;
}

}  // namespace depthstitch
