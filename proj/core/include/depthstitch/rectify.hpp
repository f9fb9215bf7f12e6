#pragma once

#include <array>
#include <vector>

#include "depthstitch/geometry.hpp"
#include "depthstitch/image.hpp"
#include "depthstitch/mesh.hpp"

namespace depthstitch {

struct CorrectedMatch {
  ImagePoint p;  // corrected target point, exactly on the epipolar constraint
  ImagePoint q;  // corrected reference point
  bool exact = true;  // false when the first-order fallback was used
};

// Minimal-displacement correction of (p, q) onto the epipolar constraint of
// the model (global minimum via the single-variable polynomial form; falls
// back to a first-order step and clears `exact` if the polynomial yields no
// usable root).
CorrectedMatch correct_match(const EpipolarModel& model,
                             const MatchRecord& record);

// Inverse depth at the corrected target point that makes the model transfer
// land exactly on the corrected reference point: the least-squares solution
// of q~ x (H p~ + w e') = 0 in w. Throws EpipoleCoincidence when q~ is
// parallel to the epipole (w drops out of the equations).
double rectify_feature_depth(const EpipolarModel& model,
                             const CorrectedMatch& corrected);

struct RectifiedDepth {
  double inv_depth = 0.0;
  bool exact = true;  // false when correction used the first-order fallback
};

// correct_match + rectify_feature_depth for each index.
std::vector<RectifiedDepth> rectify_matches(const EpipolarModel& model,
                                            const std::vector<MatchRecord>& records,
                                            const std::vector<int>& indices);

struct TrianglePlaneFit {
  PlaneParam plane = PlaneParam::Zero();
  int pixel_count = 0;    // valid pixels that entered the fit
  bool fallback = false;  // too few/degenerate pixels: plane through the
                          // vertices' nearest valid depths instead
};

// Least-squares plane over the valid depth pixels whose integer centers lie
// inside the (closed) triangle.
TrianglePlaneFit fit_triangle_plane(const DepthMap& depth,
                                    const std::array<ImagePoint, 3>& corners);

struct Clustering {
  std::vector<int> assignment;  // class id per input value, ids in [0, k)
  std::vector<double> means;    // one value per class
};

// Exact 1-D clustering: when max - min < eta everything is one class;
// otherwise the contiguous partition of the sorted values minimizing
// sum_i |v_i - mean(class of i)| + beta * (number of classes), found by
// dynamic programming over all contiguous splits.
Clustering cluster_depths(const std::vector<double>& values, double eta,
                          double beta);

struct TriangleWarp {
  std::array<double, 3> vertex_inv_depth = {0.0, 0.0, 0.0};
  PlaneParam plane = PlaneParam::Zero();
  LocalHomography h = LocalHomography::Identity();
};

struct LocalWarpSet {
  std::vector<TriangleWarp> triangles;  // parallel to mesh.triangles
  int split_vertex_count = 0;   // vertices whose incident warps disagree
  int plane_fallback_count = 0;  // triangles fit through vertex depths
};

struct FinalizeParams {
  double eta = 0.0;   // one-class shortcut threshold (inverse depth units)
  double beta = 0.0;  // per-class penalty in the clustering energy
  bool use_plane_fit = true;        // off: vertex depths read from the map
  bool use_feature_depths = true;   // off: ignore rectified feature depths
  bool use_clustering = true;       // off: incident values stay as they are
};

// Per-vertex unification of the incident triangles' plane depths (plus the
// vertex's rectified feature depth when it has one), then one plane and one
// homography per triangle from its finalized corner depths. A vertex whose
// values split into several classes renders as several positions downstream.
// feature_inv_depth holds one entry per mesh vertex (NaN = no feature depth).
// Finalized corner depths are clamped at 0 (a fit may dip below zero next to
// an occlusion; 0 means "at infinity" and keeps transfers valid).
LocalWarpSet finalize_local_warps(const EpipolarModel& model,
                                  const TriangleMesh& mesh,
                                  const DepthMap& depth,
                                  const std::vector<double>& feature_inv_depth,
                                  const FinalizeParams& params);

// Robust inverse-depth range of the map (1st to 99th percentile of valid
// pixels); eta/beta defaults scale from this.
double robust_inv_depth_range(const DepthMap& depth);

}  // namespace depthstitch
