#include "depthstitch/rectify.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace depthstitch {

namespace {

// Dense polynomial helpers, coefficients ascending. Degrees here are <= 6, so
// plain convolution is exact enough and trivially deterministic.
using Poly = std::vector<double>;

Poly poly_mul(const Poly& a, const Poly& b) {
  Poly out(a.size() + b.size() - 1, 0.0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

Poly poly_add(const Poly& a, const Poly& b) {
  Poly out(std::max(a.size(), b.size()), 0.0);
  for (size_t i = 0; i < a.size(); ++i) out[i] += a[i];
  for (size_t i = 0; i < b.size(); ++i) out[i] += b[i];
  return out;
}

Poly poly_scale(const Poly& a, double s) {
  Poly out = a;
  for (double& c : out) c *= s;
  return out;
}

// Real roots via the companion matrix of the trimmed monic polynomial.
std::vector<double> real_roots(Poly p) {
  double max_abs = 0.0;
  for (double c : p) max_abs = std::max(max_abs, std::abs(c));
  if (max_abs == 0.0) return {};
  while (p.size() > 1 && std::abs(p.back()) <= 1e-13 * max_abs) p.pop_back();
  const int d = static_cast<int>(p.size()) - 1;
  if (d < 1) return {};
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    companion(i, d - 1) = -p[i] / p[d];
    if (i + 1 < d) companion(i + 1, i) = 1.0;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  std::vector<double> roots;
  for (int i = 0; i < d; ++i) {
    const std::complex<double> r = solver.eigenvalues()(i);
    if (std::abs(r.imag()) <= 1e-8 * (1.0 + std::abs(r.real())))
      roots.push_back(r.real());
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

ImagePoint closest_point_to_origin(const Eigen::Vector3d& line) {
  const double l1 = line(0), l2 = line(1), l3 = line(2);
  const double n2 = l1 * l1 + l2 * l2;
  return ImagePoint(-l1 * l3 / n2, -l2 * l3 / n2);
}

CorrectedMatch sampson_correction(const Eigen::Matrix3d& f,
                                  const MatchRecord& record) {
  const Eigen::Vector3d ph = homogeneous(record.p);
  const Eigen::Vector3d qh = homogeneous(record.q);
  const double r = qh.dot(f * ph);
  const Eigen::Vector3d fp = f * ph;
  const Eigen::Vector3d ftq = f.transpose() * qh;
  const Eigen::Vector4d j(ftq(0), ftq(1), fp(0), fp(1));
  const double n2 = j.squaredNorm();
  CorrectedMatch out;
  out.exact = false;
  if (n2 < 1e-300) {
    out.p = record.p;
    out.q = record.q;
    return out;
  }
  const Eigen::Vector4d step = -(r / n2) * j;
  out.p = record.p + ImagePoint(step(0), step(1));
  out.q = record.q + ImagePoint(step(2), step(3));
  return out;
}

}  // namespace

CorrectedMatch correct_match(const EpipolarModel& model,
                             const MatchRecord& record) {
  const Eigen::Matrix3d f = fundamental_from_model(model);
  const Eigen::Vector3d ph = homogeneous(record.p);
  const Eigen::Vector3d qh = homogeneous(record.q);

  // Already consistent: nothing to move.
  const double residual = qh.dot(f * ph);
  if (std::abs(residual) <= 1e-14 * (1.0 + ph.norm() * qh.norm()))
    return {record.p, record.q, true};

  // Shift both points to their origins, then rotate each image so its
  // epipole lands on the x-axis; the constraint then depends on a single
  // epipolar-pencil parameter t.
  Eigen::Matrix3d tp_inv = Eigen::Matrix3d::Identity();
  tp_inv(0, 2) = record.p.x();
  tp_inv(1, 2) = record.p.y();
  Eigen::Matrix3d tq_inv = Eigen::Matrix3d::Identity();
  tq_inv(0, 2) = record.q.x();
  tq_inv(1, 2) = record.q.y();
  // (T_q^-1)^T F T_p^-1 maps translated coords to the same constraint value.
  Eigen::Matrix3d f1 = tq_inv.transpose() * f * tp_inv;

  // Epipoles of the translated F, scaled to unit (x, y) part.
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      f1, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d e_right = svd.matrixV().col(2);   // F1 e = 0
  Eigen::Vector3d e_left = svd.matrixU().col(2);    // e'^T F1 = 0
  const double nr = std::hypot(e_right(0), e_right(1));
  const double nl = std::hypot(e_left(0), e_left(1));
  if (nr < 1e-12 || nl < 1e-12) return sampson_correction(f, record);
  e_right /= nr;
  e_left /= nl;

  Eigen::Matrix3d rot_p = Eigen::Matrix3d::Identity();
  rot_p(0, 0) = e_right(0);
  rot_p(0, 1) = e_right(1);
  rot_p(1, 0) = -e_right(1);
  rot_p(1, 1) = e_right(0);
  Eigen::Matrix3d rot_q = Eigen::Matrix3d::Identity();
  rot_q(0, 0) = e_left(0);
  rot_q(0, 1) = e_left(1);
  rot_q(1, 0) = -e_left(1);
  rot_q(1, 1) = e_left(0);
  const Eigen::Matrix3d f2 = rot_q * f1 * rot_p.transpose();

  const double fe = e_right(2);  // epipole inverse distances
  const double fe2 = e_left(2);
  const double a = f2(1, 1), b = f2(1, 2), c = f2(2, 1), d = f2(2, 2);

  // Minimize s(t) = t^2/(1 + fe^2 t^2)
  //              + (ct + d)^2 / ((at + b)^2 + fe2^2 (ct + d)^2)
  // over the pencil parameter; stationary points are roots of a sextic.
  const Poly atb = {b, a};
  const Poly ctd = {d, c};
  const Poly btt = {1.0, 0.0, fe * fe};
  const Poly denom = poly_add(poly_mul(atb, atb),
                              poly_scale(poly_mul(ctd, ctd), fe2 * fe2));
  const Poly lhs = poly_mul({0.0, 1.0}, poly_mul(denom, denom));
  const Poly rhs = poly_scale(
      poly_mul(poly_mul(btt, btt), poly_mul(atb, ctd)), a * d - b * c);
  const Poly g = poly_add(lhs, poly_scale(rhs, -1.0));

  const std::vector<double> roots = real_roots(g);
  auto cost = [&](double t) {
    const double at = a * t + b, ct = c * t + d;
    const double d1 = 1.0 + fe * fe * t * t;
    const double d2 = at * at + fe2 * fe2 * ct * ct;
    if (d1 <= 0.0 || d2 <= 0.0) return std::numeric_limits<double>::infinity();
    return t * t / d1 + ct * ct / d2;
  };

  double best_t = 0.0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (double t : roots) {
    const double s = cost(t);
    if (s < best_cost) {
      best_cost = s;
      best_t = t;
    }
  }
  bool at_infinity = false;
  if (std::abs(fe) > 1e-12) {
    const double s_inf =
        1.0 / (fe * fe) + c * c / (a * a + fe2 * fe2 * c * c);
    if (s_inf < best_cost) {
      best_cost = s_inf;
      at_infinity = true;
    }
  }
  if (!std::isfinite(best_cost)) return sampson_correction(f, record);

  Eigen::Vector3d line_p, line_q;
  if (at_infinity) {
    line_p = Eigen::Vector3d(fe, 0.0, -1.0);
    line_q = Eigen::Vector3d(-fe2 * c, a, c);
  } else {
    line_p = Eigen::Vector3d(best_t * fe, 1.0, -best_t);
    line_q = f2 * Eigen::Vector3d(0.0, best_t, 1.0);
  }
  const ImagePoint xp = closest_point_to_origin(line_p);
  const ImagePoint xq = closest_point_to_origin(line_q);

  CorrectedMatch out;
  out.p = dehomogenize(tp_inv * rot_p.transpose() * homogeneous(xp));
  out.q = dehomogenize(tq_inv * rot_q.transpose() * homogeneous(xq));
  out.exact = true;
  if (!out.p.allFinite() || !out.q.allFinite())
    return sampson_correction(f, record);
  return out;
}

double rectify_feature_depth(const EpipolarModel& model,
                             const CorrectedMatch& corrected) {
  const Eigen::Vector3d y = homogeneous(corrected.p);
  const Eigen::Vector3d yq = homogeneous(corrected.q);
  const Eigen::Vector3d cross_e = yq.cross(model.epipole);
  const Eigen::Vector3d cross_h = yq.cross(model.h_inf * y);
  const double denom = cross_e.squaredNorm();
  if (denom <= 1e-20 * yq.squaredNorm() * model.epipole.squaredNorm() ||
      denom == 0.0)
    throw StitchError(ErrorKind::EpipoleCoincidence,
                      "reference point coincides with the epipole");
  // Least-squares w in yq x (H y + w e') = 0; the transfer through this
  // inverse depth reproduces the corrected reference point exactly.
  return -cross_e.dot(cross_h) / denom;
}

std::vector<RectifiedDepth> rectify_matches(
    const EpipolarModel& model, const std::vector<MatchRecord>& records,
    const std::vector<int>& indices) {
  std::vector<RectifiedDepth> out;
  out.reserve(indices.size());
  for (int i : indices) {
    const CorrectedMatch corrected = correct_match(model, records[i]);
    out.push_back({rectify_feature_depth(model, corrected), corrected.exact});
  }
  return out;
}

namespace {

// Nearest valid depth pixel by Euclidean distance (ring search, determinate
// tie-break by scan order within the ring pair).
bool nearest_valid_depth(const DepthMap& depth, const ImagePoint& at,
                         double* out) {
  const int cx = std::clamp(static_cast<int>(std::llround(at.x())), 0,
                            depth.width - 1);
  const int cy = std::clamp(static_cast<int>(std::llround(at.y())), 0,
                            depth.height - 1);
  const int max_r = std::max(depth.width, depth.height);
  double best_d2 = std::numeric_limits<double>::infinity();
  double best_w = 0.0;
  bool found = false;
  for (int r = 0; r <= max_r; ++r) {
    // Ring r pixels lie at Euclidean distance >= r - 1 from the query (the
    // rounded center is within one pixel of it), so once that bound exceeds
    // the best hit no later ring can win.
    if (found && static_cast<double>(r - 1) * (r - 1) > best_d2) break;
    const int x0 = cx - r, x1 = cx + r, y0 = cy - r, y1 = cy + r;
    for (int y = y0; y <= y1; ++y) {
      if (y < 0 || y >= depth.height) continue;
      for (int x = x0; x <= x1; ++x) {
        if (x < 0 || x >= depth.width) continue;
        if (r > 0 && x != x0 && x != x1 && y != y0 && y != y1) continue;
        if (!depth.is_valid(x, y)) continue;
        const double d2 = (ImagePoint(x, y) - at).squaredNorm();
        if (d2 < best_d2) {
          best_d2 = d2;
          best_w = depth.w(x, y);
          found = true;
        }
      }
    }
  }
  if (found) *out = best_w;
  return found;
}

TrianglePlaneFit vertex_fallback_plane(const DepthMap& depth,
                                       const std::array<ImagePoint, 3>& c) {
  TrianglePlaneFit fit;
  fit.fallback = true;
  double w0, w1, w2;
  if (!nearest_valid_depth(depth, c[0], &w0) ||
      !nearest_valid_depth(depth, c[1], &w1) ||
      !nearest_valid_depth(depth, c[2], &w2))
    throw StitchError(ErrorKind::InvalidParam,
                      "depth map contains no valid pixels");
  fit.plane = plane_from_vertices(c[0], w0, c[1], w1, c[2], w2);
  return fit;
}

}  // namespace

TrianglePlaneFit fit_triangle_plane(const DepthMap& depth,
                                    const std::array<ImagePoint, 3>& corners) {
  const ImagePoint& a = corners[0];
  const ImagePoint& b = corners[1];
  const ImagePoint& c = corners[2];
  const double area2 = (b.x() - a.x()) * (c.y() - a.y()) -
                       (b.y() - a.y()) * (c.x() - a.x());
  if (std::abs(area2) < 1e-12) return vertex_fallback_plane(depth, corners);

  const int x0 = std::max(0, static_cast<int>(std::ceil(
                                 std::min({a.x(), b.x(), c.x()}) - 1e-12)));
  const int x1 = std::min(depth.width - 1,
                          static_cast<int>(std::floor(
                              std::max({a.x(), b.x(), c.x()}) + 1e-12)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(
                                 std::min({a.y(), b.y(), c.y()}) - 1e-12)));
  const int y1 = std::min(depth.height - 1,
                          static_cast<int>(std::floor(
                              std::max({a.y(), b.y(), c.y()}) + 1e-12)));

  const double sign = area2 > 0.0 ? 1.0 : -1.0;
  auto edge = [&](const ImagePoint& u, const ImagePoint& v, double px,
                  double py) {
    return sign * ((v.x() - u.x()) * (py - u.y()) -
                   (v.y() - u.y()) * (px - u.x()));
  };

  std::vector<double> xs, ys, ws;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      if (edge(a, b, x, y) < 0.0 || edge(b, c, x, y) < 0.0 ||
          edge(c, a, x, y) < 0.0)
        continue;  // closed triangle: boundary pixels count
      if (!depth.is_valid(x, y)) continue;
      xs.push_back(x);
      ys.push_back(y);
      ws.push_back(depth.w(x, y));
    }

  if (xs.size() < 3) return vertex_fallback_plane(depth, corners);

  const int n = static_cast<int>(xs.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    design(i, 0) = xs[i];
    design(i, 1) = ys[i];
    design(i, 2) = 1.0;
    rhs(i) = ws[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 3) return vertex_fallback_plane(depth, corners);
  TrianglePlaneFit fit;
  fit.plane = qr.solve(rhs);
  fit.pixel_count = n;
  if (!fit.plane.allFinite()) return vertex_fallback_plane(depth, corners);
  return fit;
}

Clustering cluster_depths(const std::vector<double>& values, double eta,
                          double beta) {
  if (values.empty())
    throw StitchError(ErrorKind::InvalidParam, "no values to cluster");
  if (eta < 0.0 || beta < 0.0)
    throw StitchError(ErrorKind::InvalidParam, "eta and beta must be >= 0");
  const int n = static_cast<int>(values.size());

  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  Clustering out;
  if (*hi_it - *lo_it < eta) {
    out.assignment.assign(n, 0);
    out.means = {std::accumulate(values.begin(), values.end(), 0.0) / n};
    return out;
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    return values[i] < values[j] || (values[i] == values[j] && i < j);
  });
  std::vector<double> sorted(n);
  for (int i = 0; i < n; ++i) sorted[i] = values[order[i]];
  std::vector<double> prefix(n + 1, 0.0);
  for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + sorted[i];

  // Absolute deviation from the mean of sorted[i..j], via the split point
  // where values cross the mean.
  auto cost = [&](int i, int j) {
    const int len = j - i + 1;
    const double mean = (prefix[j + 1] - prefix[i]) / len;
    const int t = static_cast<int>(
        std::lower_bound(sorted.begin() + i, sorted.begin() + j + 1, mean) -
        sorted.begin());
    const double below = mean * (t - i) - (prefix[t] - prefix[i]);
    const double above = (prefix[j + 1] - prefix[t]) - mean * (j + 1 - t);
    return below + above;
  };

  // Optimal contiguous partition of the sorted sequence.
  std::vector<double> best(n + 1, std::numeric_limits<double>::infinity());
  std::vector<int> cut(n + 1, 0);
  best[0] = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) {
      const double e = best[i] + cost(i, j) + beta;
      if (e < best[j + 1]) {
        best[j + 1] = e;
        cut[j + 1] = i;
      }
    }

  std::vector<int> class_of_sorted(n, 0);
  int end = n;
  std::vector<std::pair<int, int>> segments;
  while (end > 0) {
    segments.emplace_back(cut[end], end - 1);
    end = cut[end];
  }
  std::reverse(segments.begin(), segments.end());
  out.means.resize(segments.size());
  out.assignment.assign(n, 0);
  for (size_t k = 0; k < segments.size(); ++k) {
    const auto [i, j] = segments[k];
    out.means[k] = (prefix[j + 1] - prefix[i]) / (j - i + 1);
    for (int s = i; s <= j; ++s) class_of_sorted[s] = static_cast<int>(k);
  }
  for (int s = 0; s < n; ++s) out.assignment[order[s]] = class_of_sorted[s];
  return out;
}

double robust_inv_depth_range(const DepthMap& depth) {
  std::vector<double> vals;
  vals.reserve(depth.inv_depth.size());
  for (size_t i = 0; i < depth.inv_depth.size(); ++i)
    if (depth.valid[i]) vals.push_back(depth.inv_depth[i]);
  if (vals.empty())
    throw StitchError(ErrorKind::InvalidParam, "depth map has no valid pixels");
  std::sort(vals.begin(), vals.end());
  const auto rank = [&](double q) {
    return vals[static_cast<size_t>(
        std::llround(q * (static_cast<double>(vals.size()) - 1.0)))];
  };
  return rank(0.99) - rank(0.01);
}

LocalWarpSet finalize_local_warps(const EpipolarModel& model,
                                  const TriangleMesh& mesh,
                                  const DepthMap& depth,
                                  const std::vector<double>& feature_inv_depth,
                                  const FinalizeParams& params) {
  if (feature_inv_depth.size() != mesh.vertices.size())
    throw StitchError(ErrorKind::DimensionMismatch,
                      "need one feature depth slot per mesh vertex");
  const int n_tri = static_cast<int>(mesh.triangles.size());
  const int n_vert = static_cast<int>(mesh.vertices.size());

  LocalWarpSet out;
  out.triangles.resize(n_tri);

  // Raw per-(triangle, corner) inverse depths.
  std::vector<std::array<double, 3>> raw(n_tri);
  for (int t = 0; t < n_tri; ++t) {
    const auto& tri = mesh.triangles[t];
    const std::array<ImagePoint, 3> corners = {
        mesh.vertices[tri[0]].position, mesh.vertices[tri[1]].position,
        mesh.vertices[tri[2]].position};
    if (params.use_plane_fit) {
      const TrianglePlaneFit fit = fit_triangle_plane(depth, corners);
      if (fit.fallback) ++out.plane_fallback_count;
      for (int k = 0; k < 3; ++k)
        raw[t][k] = fit.plane.dot(homogeneous(corners[k]));
    } else {
      for (int k = 0; k < 3; ++k) {
        double w = 0.0;
        if (!nearest_valid_depth(depth, corners[k], &w))
          throw StitchError(ErrorKind::InvalidParam,
                            "depth map contains no valid pixels");
        raw[t][k] = w;
      }
    }
  }

  // Incidence lists: which (triangle, corner) slots touch each vertex.
  std::vector<std::vector<std::pair<int, int>>> incident(n_vert);
  for (int t = 0; t < n_tri; ++t)
    for (int k = 0; k < 3; ++k) incident[mesh.triangles[t][k]].push_back({t, k});

  std::vector<std::array<double, 3>> final_depth = raw;
  for (int v = 0; v < n_vert; ++v) {
    if (incident[v].empty()) continue;
    const double feature = feature_inv_depth[v];
    const bool has_feature =
        params.use_feature_depths && std::isfinite(feature);

    if (params.use_clustering) {
      std::vector<double> vals;
      vals.reserve(incident[v].size() + 1);
      for (const auto& [t, k] : incident[v]) vals.push_back(raw[t][k]);
      if (has_feature) vals.push_back(feature);
      const Clustering clusters = cluster_depths(vals, params.eta, params.beta);
      std::vector<double> class_value = clusters.means;
      if (has_feature) {
        // The class holding the rectified feature depth collapses to exactly
        // that value; measurement beats averaged map fits.
        class_value[clusters.assignment.back()] = feature;
      }
      for (size_t s = 0; s < incident[v].size(); ++s) {
        const auto& [t, k] = incident[v][s];
        final_depth[t][k] = class_value[clusters.assignment[s]];
      }
    }
    // Without clustering every incident slot simply keeps its raw value.
  }

  // A vertex splits when its incident triangles disagree after finalization;
  // those are the spots where the warp is intentionally discontinuous.
  for (int v = 0; v < n_vert; ++v) {
    if (incident[v].size() < 2) continue;
    const auto& [t0, k0] = incident[v].front();
    bool split = false;
    for (const auto& [t, k] : incident[v])
      if (final_depth[t][k] != final_depth[t0][k0]) split = true;
    if (split) ++out.split_vertex_count;
  }

  for (int t = 0; t < n_tri; ++t) {
    const auto& tri = mesh.triangles[t];
    TriangleWarp& warp = out.triangles[t];
    for (int k = 0; k < 3; ++k)
      warp.vertex_inv_depth[k] = std::max(0.0, final_depth[t][k]);
    warp.plane = plane_from_vertices(
        mesh.vertices[tri[0]].position, warp.vertex_inv_depth[0],
        mesh.vertices[tri[1]].position, warp.vertex_inv_depth[1],
        mesh.vertices[tri[2]].position, warp.vertex_inv_depth[2]);
    warp.h = homography_from_plane(model, warp.plane);
  }
  return out;
}

}  // namespace depthstitch
