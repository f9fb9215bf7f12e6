#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "depthstitch/geometry.hpp"

namespace depthstitch {

struct RansacConfig {
  double distance_threshold = 3.0;  // reference-side pixels
  int max_iterations = 2000;
  double confidence = 0.995;
  uint64_t seed = 0;
};

struct FitResult {
  EpipolarModel model;
  std::vector<int> inliers;       // indices into the match set, ascending
  double mean_mapping_error = 0;  // over the final inlier set
  int iterations = 0;             // RANSAC iterations actually run
};

enum class BaselineKind {
  HomographyRansac,     // one global homography, depth-blind
  MultiSamplingRansac,  // homography rounds on the unexplained residue
};

struct BaselineReport {
  BaselineKind kind = BaselineKind::HomographyRansac;
  std::vector<int> inliers;
  // Transfer error of a depth model fit to this baseline's inliers, so the
  // numbers are comparable across methods. NaN when no fit was possible.
  double mean_mapping_error = 0;
  int rounds = 1;
};

// Direct linear solve of the 12-parameter transfer model from >= 6 records:
// each record contributes two rows of [A | B] (h_inf row-major, then the
// epipole columns scaled by inverse depth). Both image sides are Hartley-
// normalized and the depth column is scaled to unit RMS before the SVD.
// Throws InsufficientMatches (< 6 records) or DegenerateConfiguration (needs
// >= 3 distinct depth planes worth of constraints; detected when the second
// smallest singular value collapses). `allow_degenerate` skips the rank gate
// and returns the smallest-singular-vector model anyway; baseline reporting
// uses this to score plane-only inlier sets.
EpipolarModel solve_linear_he(const std::vector<MatchRecord>& records,
                              bool allow_degenerate = false);

// Depth-based robust fit: 6-record minimal samples, inliers by mapping error
// strictly below the threshold, adaptive iteration bound from the best inlier
// ratio, linear refit on the final consensus. Throws NoConsensus when no
// sample explains at least 6 records.
FitResult ransac_fit(const MatchSet& matches, const RansacConfig& config);

// Levenberg-Marquardt polish of the transfer model over the given records,
// minimizing the summed squared mapping error. Gauge freedom (global scale)
// is left to the damping term; the result is canonicalized. Throws
// NonFiniteResidual if the objective is not finite at the start point.
EpipolarModel refine_lm(const EpipolarModel& initial,
                        const std::vector<MatchRecord>& records,
                        const std::vector<int>& indices);

// ransac_fit + refine_lm + final inlier recount under the refined model.
FitResult estimate_epipolar(const MatchSet& matches, const RansacConfig& config);

// Depth-blind comparison fitters sharing the RANSAC discipline (4-point
// homography samples, same threshold/confidence/seed).
BaselineReport baseline_fit(const MatchSet& matches, const RansacConfig& config,
                            BaselineKind kind);

// Normalized-DLT homography over the given record indices (least squares when
// more than 4). Throws InsufficientMatches below 4 records and
// DegenerateConfiguration when the records do not pin down 8 degrees of
// freedom.
Eigen::Matrix3d fit_homography(const std::vector<MatchRecord>& records,
                               const std::vector<int>& indices);

namespace detail {

// Residuals r = transfer(p) - q and the analytic Jacobian w.r.t. the 12 model
// parameters; shared by refine_lm and the derivative checks in the tests.
// Rows 2i, 2i+1 belong to indices[i]. Returns false when any residual is
// non-finite (behind-camera transfer).
bool transfer_residuals(const Eigen::Matrix<double, 12, 1>& params,
                        const std::vector<MatchRecord>& records,
                        const std::vector<int>& indices,
                        Eigen::VectorXd* residuals, Eigen::MatrixXd* jacobian);

}  // namespace detail

}  // namespace depthstitch
