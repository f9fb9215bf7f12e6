#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>
#include <vector>

#include "depthstitch/error.hpp"

namespace depthstitch {

// Pixel coordinates: x right, y down, integer coordinates at pixel centers,
// so an image of width W spans [-0.5, W-0.5].
using ImagePoint = Eigen::Vector2d;

// Plane parameters m such that m . (x, y, 1) equals the inverse depth of the
// plane at image point (x, y) in the target view.
using PlaneParam = Eigen::Vector3d;

// A homography acting on homogeneous pixel coordinates.
using LocalHomography = Eigen::Matrix3d;

// One feature correspondence between the target view (p, with inverse depth
// taken from the target depth map) and the reference view (q).
struct MatchRecord {
  ImagePoint p;
  ImagePoint q;
  double inv_depth = 0.0;  // 1/z at p in the target view, must be > 0
};

// A bag of correspondences. `true_inlier` is filled by the synthetic oracle
// (one flag per record) and left empty for matches loaded from files.
struct MatchSet {
  std::vector<MatchRecord> records;
  std::vector<uint8_t> true_inlier;

  size_t size() const { return records.size(); }
};

// Two-view transfer model: a point p in the target with inverse depth w maps
// to dehomogenize(h_inf * p~ + w * epipole) in the reference. h_inf is the
// homography induced by the plane at infinity, epipole is the projection of
// the target camera center into the reference view (scaled); together they
// are one projective entity with 12 parameters and a single gauge freedom
// fixed by canonicalize().
struct EpipolarModel {
  Eigen::Matrix3d h_inf = Eigen::Matrix3d::Identity();
  Eigen::Vector3d epipole = Eigen::Vector3d::Zero();
};

// (v1, v2, v3) -> (v1/v3, v2/v3). Throws DegeneratePoint when |v3| < 1e-12.
ImagePoint dehomogenize(const Eigen::Vector3d& v);

// Transfer p with inverse depth w >= 0 into the reference view.
ImagePoint project_with_depth(const EpipolarModel& model, const ImagePoint& p,
                              double inv_depth);

// Reference-side pixel distance between the transferred p and the observed q.
double mapping_error(const EpipolarModel& model, const MatchRecord& record);

// Interpolating plane through three image points with known inverse depths.
// Throws CollinearVertices when the vertices span no area.
PlaneParam plane_from_vertices(const ImagePoint& a, double wa,
                               const ImagePoint& b, double wb,
                               const ImagePoint& c, double wc);

// Homography induced by the plane m under the given model: h_inf + e' m^T.
LocalHomography homography_from_plane(const EpipolarModel& model,
                                      const PlaneParam& m);

// Rank-2 fundamental matrix [e']x * h_inf, Frobenius-normalized with the
// first nonzero entry positive.
Eigen::Matrix3d fundamental_from_model(const EpipolarModel& model);

// The 12 parameters (h_inf row-major, then epipole) scaled to unit norm with
// the first component of magnitude > 1e-9 made positive. Two models describe
// the same transfer iff their canonical vectors agree.
Eigen::Matrix<double, 12, 1> canonicalize(const EpipolarModel& model);

// Rebuild a model from a canonical 12-vector (inverse of canonicalize up to
// the gauge fix).
EpipolarModel model_from_parameters(const Eigen::Matrix<double, 12, 1>& v);

inline Eigen::Vector3d homogeneous(const ImagePoint& p) {
  return Eigen::Vector3d(p.x(), p.y(), 1.0);
}

}  // namespace depthstitch
