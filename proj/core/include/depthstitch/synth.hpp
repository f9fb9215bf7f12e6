#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "depthstitch/geometry.hpp"
#include "depthstitch/image.hpp"

namespace depthstitch {

// World-to-camera pose: x_cam = rotation * X + translation.
struct CameraPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

// A finite textured rectangle in world space: origin + u * edge_u + v * edge_v
// for (u, v) in [0, 1]^2. Texture parameters are baked in at construction so
// rendering is a pure function.
struct ScenePatch {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  Eigen::Vector3d edge_u = Eigen::Vector3d::UnitX();
  Eigen::Vector3d edge_v = Eigen::Vector3d::UnitY();

  // color(u, v, c) = base[c] + grad_u[c] u + grad_v[c] v
//                  + sum_j blob_amp[j][c] exp(-((u,v)-(blob_uv[j]))^2 / 2 s_j^2)
  Eigen::Vector3d base = Eigen::Vector3d::Constant(128.0);
  Eigen::Vector3d grad_u = Eigen::Vector3d::Zero();
  Eigen::Vector3d grad_v = Eigen::Vector3d::Zero();
  std::vector<Eigen::Vector2d> blob_uv;
  std::vector<Eigen::Vector3d> blob_amp;
  std::vector<double> blob_sigma;

  Eigen::Vector3d color_at(double u, double v) const;
};

struct SyntheticScene {
  std::vector<ScenePatch> patches;
};

// A ready-to-render two-view setup: the target camera is canonical (identity
// rotation, zero translation), `reference` is the second view.
struct SyntheticFixture {
  SyntheticScene scene;
  Eigen::Matrix3d k_target = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d k_reference = Eigen::Matrix3d::Identity();
  CameraPose reference;
  int width = 640;
  int height = 480;
};

struct RenderedView {
  ImageF color;    // RGB, [0, 255] floats
  DepthMap depth;  // inverse depth at pixel centers
};

// Exact transfer model for the fixture's camera pair: the plane-at-infinity
// homography K' R K^-1 and the epipole K' t, canonicalized by the caller when
// needed.
EpipolarModel ground_truth_model(const SyntheticFixture& fixture);

// Ray-cast every pixel center of the given view. For the canonical target
// camera pass an identity pose. Pixels whose ray misses every patch are
// rendered black with invalid depth.
RenderedView render_scene(const SyntheticFixture& fixture,
                          const CameraPose& pose, const Eigen::Matrix3d& k);

// Nearest-hit metric depth along the pixel ray through image point p, or a
// negative value when the ray misses the scene.
double scene_depth_at(const SyntheticFixture& fixture, const CameraPose& pose,
                      const Eigen::Matrix3d& k, const ImagePoint& p);

struct MatchSamplingParams {
  int count = 100;
  double noise_sigma = 0.0;    // total per-match budget, split across views
  double outlier_fraction = 0.0;
  uint64_t seed = 0;
};

// Draw correspondences at co-visible scene points: p uniform over the target
// image, q the exact reprojection (both then perturbed by sigma / sqrt(2) per
// coordinate), inverse depth the exact target depth at the perturbed p.
// Outliers keep p and depth but get a uniform random q; labels record the
// truth.
MatchSet sample_matches(const SyntheticFixture& fixture,
                        const MatchSamplingParams& params);

// Like sample_matches but draws exactly counts[i] records whose target-side
// surface point lies on patch i, so fixture populations are deterministic.
MatchSet sample_matches_stratified(const SyntheticFixture& fixture,
                                   const std::vector<int>& counts,
                                   const MatchSamplingParams& params);

// Rescale the stored depths of a few records and mark them outliers; used to
// build records that are consistent for a depth-blind fitter and inconsistent
// for this library's. The k-th corrupted record gets depth scaled by
// factor^(k+1), alternating direction, so no two corrupted records share a
// phantom depth level. The first overload picks `count` clean records at
// random; the second corrupts exactly `picks`.
void corrupt_match_depths(MatchSet& set, int count, double factor,
                          uint64_t seed);
void corrupt_match_depths(MatchSet& set, const std::vector<size_t>& picks,
                          double factor);

// Multiplicative Gaussian depth noise: z <- z * (1 + frac * N(0,1)), clamped
// away from zero.
void add_depth_noise(DepthMap& depth, double frac, uint64_t seed);

// Canonical fixtures used across tests and benchmarks. Seeds change textures
// only, never geometry.
SyntheticFixture make_one_plane_fixture(uint64_t texture_seed);
SyntheticFixture make_two_plane_fixture(uint64_t texture_seed);
SyntheticFixture make_three_plane_fixture(uint64_t texture_seed);

}  // namespace depthstitch
