#include "depthstitch/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "depthstitch/rng.hpp"

namespace depthstitch {

namespace {

Eigen::Vector3d camera_center(const CameraPose& pose) {
  return -(pose.rotation.transpose() * pose.translation);
}

// Ray through the pixel center p, parameterized so the parameter equals the
// camera-frame z of the point (K^-1 p~ has unit z in the camera frame).
struct Ray {
  Eigen::Vector3d origin;
  Eigen::Vector3d dir;
};

Ray pixel_ray(const CameraPose& pose, const Eigen::Matrix3d& k,
              const ImagePoint& p) {
  const Eigen::Vector3d d_cam = k.inverse() * homogeneous(p);
  return {camera_center(pose), pose.rotation.transpose() * d_cam};
}

struct Hit {
  double depth = -1.0;  // camera-frame z, < 0 when the ray misses
  int patch = -1;
  double u = 0.0;
  double v = 0.0;
};

Hit intersect(const SyntheticScene& scene, const Ray& ray) {
  Hit best;
  best.depth = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < scene.patches.size(); ++i) {
    const ScenePatch& patch = scene.patches[i];
    const Eigen::Vector3d normal = patch.edge_u.cross(patch.edge_v);
    const double denom = normal.dot(ray.dir);
    if (std::abs(denom) < 1e-14) continue;
    const double s = normal.dot(patch.origin - ray.origin) / denom;
    if (s <= 1e-9 || s >= best.depth) continue;
    const Eigen::Vector3d rel = ray.origin + s * ray.dir - patch.origin;
    // Decompose rel into patch coordinates; the edges need not be orthogonal.
    const double uu = patch.edge_u.squaredNorm();
    const double vv = patch.edge_v.squaredNorm();
    const double uv = patch.edge_u.dot(patch.edge_v);
    const double ru = rel.dot(patch.edge_u);
    const double rv = rel.dot(patch.edge_v);
    const double det = uu * vv - uv * uv;
    if (std::abs(det) < 1e-14) continue;
    const double u = (ru * vv - rv * uv) / det;
    const double v = (rv * uu - ru * uv) / det;
    if (u < 0.0 || u > 1.0 || v < 0.0 || v > 1.0) continue;
    best.depth = s;
    best.patch = static_cast<int>(i);
    best.u = u;
    best.v = v;
  }
  if (best.patch < 0) best.depth = -1.0;
  return best;
}

ImagePoint project(const CameraPose& pose, const Eigen::Matrix3d& k,
                   const Eigen::Vector3d& x_world, double* z_out) {
  const Eigen::Vector3d x_cam = pose.rotation * x_world + pose.translation;
  if (z_out) *z_out = x_cam.z();
  const Eigen::Vector3d h = k * x_cam;
  return ImagePoint(h.x() / h.z(), h.y() / h.z());
}

Eigen::Matrix3d yaw_about_y(double degrees) {
  const double a = degrees * 3.14159265358979323846 / 180.0;
  Eigen::Matrix3d r;
  r << std::cos(a), 0.0, std::sin(a), 0.0, 1.0, 0.0, -std::sin(a), 0.0,
      std::cos(a);
  return r;
}

CameraPose pose_at(const Eigen::Vector3d& center, double yaw_degrees) {
  CameraPose pose;
  pose.rotation = yaw_about_y(yaw_degrees);
  pose.translation = -(pose.rotation * center);
  return pose;
}

Eigen::Matrix3d standard_intrinsics(int width, int height, double focal) {
  Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
  k(0, 0) = k(1, 1) = focal;
  k(0, 2) = (width - 1) / 2.0;
  k(1, 2) = (height - 1) / 2.0;
  return k;
}

void randomize_texture(ScenePatch& patch, Rng& rng) {
  for (int c = 0; c < 3; ++c) patch.base(c) = rng.uniform(100.0, 160.0);
  for (int c = 0; c < 3; ++c) patch.grad_u(c) = rng.uniform(-45.0, 45.0);
  for (int c = 0; c < 3; ++c) patch.grad_v(c) = rng.uniform(-45.0, 45.0);
  const int blobs = 10;
  for (int j = 0; j < blobs; ++j) {
    patch.blob_uv.emplace_back(rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95));
    Eigen::Vector3d amp;
    for (int c = 0; c < 3; ++c) amp(c) = rng.uniform(-55.0, 55.0);
    patch.blob_amp.push_back(amp);
    patch.blob_sigma.push_back(rng.uniform(0.03, 0.09));
  }
}

}  // namespace

Eigen::Vector3d ScenePatch::color_at(double u, double v) const {
  Eigen::Vector3d c = base + u * grad_u + v * grad_v;
  for (size_t j = 0; j < blob_uv.size(); ++j) {
    const double du = u - blob_uv[j].x();
    const double dv = v - blob_uv[j].y();
    const double s2 = blob_sigma[j] * blob_sigma[j];
    c += blob_amp[j] * std::exp(-(du * du + dv * dv) / (2.0 * s2));
  }
  return c.cwiseMax(0.0).cwiseMin(255.0);
}

EpipolarModel ground_truth_model(const SyntheticFixture& fixture) {
  EpipolarModel model;
  model.h_inf =
      fixture.k_reference * fixture.reference.rotation * fixture.k_target.inverse();
  model.epipole = fixture.k_reference * fixture.reference.translation;
  return model;
}

RenderedView render_scene(const SyntheticFixture& fixture,
                          const CameraPose& pose, const Eigen::Matrix3d& k) {
  RenderedView view;
  view.color = ImageF(fixture.width, fixture.height, 3, 0.0f);
  view.depth = DepthMap(fixture.width, fixture.height);
  const Eigen::Matrix3d k_inv = k.inverse();
  const Eigen::Matrix3d r_t = pose.rotation.transpose();
  const Eigen::Vector3d center = camera_center(pose);
  for (int y = 0; y < fixture.height; ++y) {
    for (int x = 0; x < fixture.width; ++x) {
      Ray ray;
      ray.origin = center;
      ray.dir = r_t * (k_inv * Eigen::Vector3d(x, y, 1.0));
      const Hit hit = intersect(fixture.scene, ray);
      if (hit.patch < 0) {
        view.depth.set_invalid(x, y);
        continue;
      }
      const Eigen::Vector3d rgb =
          fixture.scene.patches[hit.patch].color_at(hit.u, hit.v);
      float* px = view.color.pixel(x, y);
      // Texture gradients and blobs can overshoot the displayable range a
      // little; clamp so the view honors the documented [0, 255] contract.
      px[0] = static_cast<float>(std::clamp(rgb(0), 0.0, 255.0));
      px[1] = static_cast<float>(std::clamp(rgb(1), 0.0, 255.0));
      px[2] = static_cast<float>(std::clamp(rgb(2), 0.0, 255.0));
      view.depth.set(x, y, 1.0 / hit.depth);
    }
  }
  return view;
}

double scene_depth_at(const SyntheticFixture& fixture, const CameraPose& pose,
                      const Eigen::Matrix3d& k, const ImagePoint& p) {
  const Hit hit = intersect(fixture.scene, pixel_ray(pose, k, p));
  return hit.patch < 0 ? -1.0 : hit.depth;
}

namespace {

struct DrawnMatch {
  MatchRecord record;
  int patch = -1;
};

// One co-visible correspondence, or patch = -1 if this attempt failed.
DrawnMatch draw_match(const SyntheticFixture& fixture,
                      const MatchSamplingParams& params, Rng& rng) {
  DrawnMatch out;
  const CameraPose target_pose;  // canonical
  const ImagePoint p(rng.uniform(0.0, fixture.width - 1.0),
                     rng.uniform(0.0, fixture.height - 1.0));
  const Hit hit = intersect(fixture.scene, pixel_ray(target_pose, fixture.k_target, p));
  if (hit.patch < 0) return out;
  const Eigen::Vector3d x_world =
      Eigen::Vector3d(0, 0, 0) +
      hit.depth * (fixture.k_target.inverse() * homogeneous(p));
  double z_ref = 0.0;
  const ImagePoint q =
      project(fixture.reference, fixture.k_reference, x_world, &z_ref);
  if (z_ref <= 0.0) return out;
  if (q.x() < 0.0 || q.x() > fixture.width - 1.0 || q.y() < 0.0 ||
      q.y() > fixture.height - 1.0)
    return out;
  // Occlusion check: the point must be the nearest hit along the reference
  // ray as well.
  const double nearest =
      scene_depth_at(fixture, fixture.reference, fixture.k_reference, q);
  if (nearest < 0.0 || nearest < z_ref - 1e-8 * std::max(1.0, z_ref)) return out;

  const double per_axis = params.noise_sigma / std::sqrt(2.0);
  ImagePoint p_noisy = p;
  ImagePoint q_noisy = q;
  if (params.noise_sigma > 0.0) {
    p_noisy.x() += per_axis * rng.gaussian();
    p_noisy.y() += per_axis * rng.gaussian();
    q_noisy.x() += per_axis * rng.gaussian();
    q_noisy.y() += per_axis * rng.gaussian();
  }
  // Depth is looked up at the (possibly jittered) detected location, the same
  // way the real pipeline reads the depth map at a feature point.
  const double depth_at_p =
      scene_depth_at(fixture, target_pose, fixture.k_target, p_noisy);
  if (depth_at_p <= 0.0) return out;

  out.record.p = p_noisy;
  out.record.q = q_noisy;
  out.record.inv_depth = 1.0 / depth_at_p;
  out.patch = hit.patch;
  return out;
}

void apply_outliers(MatchSet& set, const SyntheticFixture& fixture,
                    const MatchSamplingParams& params, Rng& rng) {
  const int n = static_cast<int>(set.records.size());
  const int n_out =
      static_cast<int>(std::llround(params.outlier_fraction * n));
  if (n_out <= 0) return;
  // Deterministic Fisher-Yates pick of which records become outliers.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = n - 1; i > 0; --i)
    std::swap(order[i], order[rng.bounded(static_cast<uint64_t>(i) + 1)]);
  for (int j = 0; j < n_out; ++j) {
    MatchRecord& rec = set.records[order[j]];
    const ImagePoint true_q = rec.q;
    // Keep junk q well away from the true transfer so ground-truth labels
    // stay meaningful for precision/recall accounting.
    const double clearance = std::max(5.0, 4.0 * params.noise_sigma);
    for (int tries = 0; tries < 1000; ++tries) {
      const ImagePoint junk(rng.uniform(0.0, fixture.width - 1.0),
                            rng.uniform(0.0, fixture.height - 1.0));
      if ((junk - true_q).norm() >= clearance) {
        rec.q = junk;
        break;
      }
    }
    set.true_inlier[order[j]] = 0;
  }
}

}  // namespace

MatchSet sample_matches(const SyntheticFixture& fixture,
                        const MatchSamplingParams& params) {
  if (params.count < 0 || params.outlier_fraction < 0.0 ||
      params.outlier_fraction > 1.0 || params.noise_sigma < 0.0)
    throw StitchError(ErrorKind::InvalidParam, "bad match sampling parameters");
  Rng rng(params.seed);
  MatchSet set;
  long attempts = 0;
  const long attempt_budget = 2000L * std::max(params.count, 1) + 1000;
  while (static_cast<int>(set.records.size()) < params.count) {
    if (++attempts > attempt_budget)
      throw StitchError(ErrorKind::InvalidParam,
                        "scene leaves too few co-visible points to sample");
    const DrawnMatch drawn = draw_match(fixture, params, rng);
    if (drawn.patch < 0) continue;
    set.records.push_back(drawn.record);
    set.true_inlier.push_back(1);
  }
  apply_outliers(set, fixture, params, rng);
  return set;
}

MatchSet sample_matches_stratified(const SyntheticFixture& fixture,
                                   const std::vector<int>& counts,
                                   const MatchSamplingParams& params) {
  if (counts.size() != fixture.scene.patches.size())
    throw StitchError(ErrorKind::InvalidParam,
                      "need one count per scene patch");
  Rng rng(params.seed);
  MatchSet set;
  std::vector<int> remaining = counts;
  int total = 0;
  for (int c : remaining) {
    if (c < 0) throw StitchError(ErrorKind::InvalidParam, "negative count");
    total += c;
  }
  long attempts = 0;
  const long attempt_budget = 20000L * std::max(total, 1) + 1000;
  while (total > 0) {
    if (++attempts > attempt_budget)
      throw StitchError(ErrorKind::InvalidParam,
                        "patch population not reachable by sampling");
    const DrawnMatch drawn = draw_match(fixture, params, rng);
    if (drawn.patch < 0 || remaining[drawn.patch] <= 0) continue;
    --remaining[drawn.patch];
    --total;
    set.records.push_back(drawn.record);
    set.true_inlier.push_back(1);
  }
  apply_outliers(set, fixture, params, rng);
  return set;
}

void corrupt_match_depths(MatchSet& set, const std::vector<size_t>& picks,
                          double factor) {
  if (factor <= 0.0)
    throw StitchError(ErrorKind::InvalidParam, "depth factor must be positive");
  for (size_t k = 0; k < picks.size(); ++k) {
    if (picks[k] >= set.records.size())
      throw StitchError(ErrorKind::InvalidParam,
                        "corruption pick out of range");
    MatchRecord& rec = set.records[picks[k]];
    // Walk a geometric ladder of factors, alternating direction, so the
    // corrupted records land at pairwise-distinct phantom depths; a set that
    // shared one phantom depth could be interpolated away by a refit, since
    // the transfer map is a Mobius function of inverse depth.
    const double scale = std::pow(factor, static_cast<double>(k + 1));
    rec.inv_depth =
        (k % 2 == 0) ? rec.inv_depth / scale : rec.inv_depth * scale;
    if (!set.true_inlier.empty()) set.true_inlier[picks[k]] = 0;
  }
}

void corrupt_match_depths(MatchSet& set, int count, double factor,
                          uint64_t seed) {
  std::vector<size_t> eligible;
  for (size_t i = 0; i < set.records.size(); ++i)
    if (set.true_inlier.empty() || set.true_inlier[i]) eligible.push_back(i);
  if (static_cast<int>(eligible.size()) < count)
    throw StitchError(ErrorKind::InvalidParam,
                      "fewer clean records than requested corruptions");
  Rng rng(seed);
  std::vector<size_t> picks;
  for (int k = 0; k < count; ++k) {
    const size_t j =
        static_cast<size_t>(k) +
        static_cast<size_t>(
            rng.bounded(eligible.size() - static_cast<size_t>(k)));
    std::swap(eligible[static_cast<size_t>(k)], eligible[j]);
    picks.push_back(eligible[static_cast<size_t>(k)]);
  }
  corrupt_match_depths(set, picks, factor);
}

void add_depth_noise(DepthMap& depth, double frac, uint64_t seed) {
  Rng rng(seed);
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      if (!depth.is_valid(x, y)) continue;
      const double z = 1.0 / depth.w(x, y);
      const double factor = std::max(0.2, 1.0 + frac * rng.gaussian());
      depth.set(x, y, 1.0 / (z * factor));
    }
  }
}

SyntheticFixture make_one_plane_fixture(uint64_t texture_seed) {
  SyntheticFixture fx;
  fx.k_target = fx.k_reference = standard_intrinsics(fx.width, fx.height, 520.0);
  fx.reference = pose_at(Eigen::Vector3d(0.6, 0.0, 0.0), -2.0);
  ScenePatch plane;
  plane.origin = Eigen::Vector3d(-15.0, -12.0, 8.0);
  plane.edge_u = Eigen::Vector3d(30.0, 0.0, 0.0);
  plane.edge_v = Eigen::Vector3d(0.0, 24.0, 0.0);
  Rng rng(texture_seed ^ 0x517cc1b727220a95ULL);
  randomize_texture(plane, rng);
  fx.scene.patches.push_back(plane);
  return fx;
}

SyntheticFixture make_two_plane_fixture(uint64_t texture_seed) {
  SyntheticFixture fx;
  fx.k_target = fx.k_reference = standard_intrinsics(fx.width, fx.height, 520.0);
  fx.reference = pose_at(Eigen::Vector3d(0.5, 0.0, 0.0), -2.0);
  Rng rng(texture_seed ^ 0xd1b54a32d192ed03ULL);

  // Near plane fills the left part of the target view; its right edge
  // projects near 55% of the image width. Far plane is slightly slanted and
  // spans everything behind it, so both views are fully covered and the
  // occlusion boundary reveals far-plane texture under parallax.
  ScenePatch near_plane;
  near_plane.origin = Eigen::Vector3d(-15.0, -10.0, 6.0);
  near_plane.edge_u = Eigen::Vector3d(15.375, 0.0, 0.0);
  near_plane.edge_v = Eigen::Vector3d(0.0, 20.0, 0.0);
  randomize_texture(near_plane, rng);
  fx.scene.patches.push_back(near_plane);

  ScenePatch far_plane;
  far_plane.origin = Eigen::Vector3d(-20.0, -16.0, 10.0);
  far_plane.edge_u = Eigen::Vector3d(40.0, 0.0, 1.5);
  far_plane.edge_v = Eigen::Vector3d(0.0, 32.0, 0.0);
  randomize_texture(far_plane, rng);
  fx.scene.patches.push_back(far_plane);
  return fx;
}

SyntheticFixture make_three_plane_fixture(uint64_t texture_seed) {
  SyntheticFixture fx;
  fx.k_target = fx.k_reference = standard_intrinsics(fx.width, fx.height, 520.0);
  fx.reference = pose_at(Eigen::Vector3d(0.5, 0.0, 0.0), -3.0);
  Rng rng(texture_seed ^ 0x8cb92ba72f3d8dd7ULL);

  // Three fronto-parallel panels, each extending behind its nearer neighbor:
  // left panel ends where 30% of the target width projects at z=5, middle
  // ends near 62% at z=8, right panel covers the rest at z=13.
  ScenePatch left;
  left.origin = Eigen::Vector3d(-12.0, -8.0, 5.0);
  left.edge_u = Eigen::Vector3d(10.774, 0.0, 0.0);
  left.edge_v = Eigen::Vector3d(0.0, 16.0, 0.0);
  randomize_texture(left, rng);
  fx.scene.patches.push_back(left);

  ScenePatch middle;
  middle.origin = Eigen::Vector3d(-8.0, -11.0, 8.0);
  middle.edge_u = Eigen::Vector3d(9.192, 0.0, 0.0);
  middle.edge_v = Eigen::Vector3d(0.0, 22.0, 0.0);
  randomize_texture(middle, rng);
  fx.scene.patches.push_back(middle);

  ScenePatch right;
  right.origin = Eigen::Vector3d(-10.0, -16.0, 13.0);
  right.edge_u = Eigen::Vector3d(24.0, 0.0, 0.0);
  right.edge_v = Eigen::Vector3d(0.0, 32.0, 0.0);
  randomize_texture(right, rng);
  fx.scene.patches.push_back(right);
  return fx;
}

}  // namespace depthstitch
