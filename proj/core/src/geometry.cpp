#include "depthstitch/geometry.hpp"

#include <cmath>

namespace depthstitch {

ImagePoint dehomogenize(const Eigen::Vector3d& v) {
  if (!(std::abs(v.z()) >= 1e-12))
    throw StitchError(ErrorKind::DegeneratePoint,
                      "homogeneous scale too close to zero");
  return ImagePoint(v.x() / v.z(), v.y() / v.z());
}

ImagePoint project_with_depth(const EpipolarModel& model, const ImagePoint& p,
                              double inv_depth) {
  if (!std::isfinite(inv_depth) || inv_depth < 0.0)
    throw StitchError(ErrorKind::DegeneratePoint,
                      "inverse depth must be finite and non-negative");
  if (!p.allFinite())
    throw StitchError(ErrorKind::DegeneratePoint, "non-finite image point");
  return dehomogenize(model.h_inf * homogeneous(p) + inv_depth * model.epipole);
}

double mapping_error(const EpipolarModel& model, const MatchRecord& record) {
  return (project_with_depth(model, record.p, record.inv_depth) - record.q)
      .norm();
}

PlaneParam plane_from_vertices(const ImagePoint& a, double wa,
                               const ImagePoint& b, double wb,
                               const ImagePoint& c, double wc) {
  Eigen::Matrix3d A;
  A << a.x(), a.y(), 1.0, b.x(), b.y(), 1.0, c.x(), c.y(), 1.0;
  // det(A) is twice the signed triangle area; compare it against the squared
  // vertex span so the test is invariant to where the triangle sits.
  const double span = std::max({(b - a).norm(), (c - a).norm(), (c - b).norm()});
  const double det = A.determinant();
  if (std::abs(det) <= 1e-12 * std::max(1.0, span * span))
    throw StitchError(ErrorKind::CollinearVertices,
                      "vertices span no area, plane is underdetermined");
  return A.partialPivLu().solve(Eigen::Vector3d(wa, wb, wc));
}

LocalHomography homography_from_plane(const EpipolarModel& model,
                                      const PlaneParam& m) {
  return model.h_inf + model.epipole * m.transpose();
}

Eigen::Matrix3d fundamental_from_model(const EpipolarModel& model) {
  const Eigen::Vector3d& e = model.epipole;
  Eigen::Matrix3d cross;
  cross << 0.0, -e.z(), e.y(), e.z(), 0.0, -e.x(), -e.y(), e.x(), 0.0;
  Eigen::Matrix3d f = cross * model.h_inf;
  const double norm = f.norm();
  if (!(norm > 0.0))
    throw StitchError(ErrorKind::DegenerateConfiguration,
                      "fundamental matrix vanished (zero epipole?)");
  f /= norm;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      if (std::abs(f(r, c)) > 1e-9) return f(r, c) > 0.0 ? f : (-f).eval();
    }
  return f;
}

Eigen::Matrix<double, 12, 1> canonicalize(const EpipolarModel& model) {
  Eigen::Matrix<double, 12, 1> v;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) v(r * 3 + c) = model.h_inf(r, c);
  v.tail<3>() = model.epipole;
  const double norm = v.norm();
  if (!(norm > 0.0) || !v.allFinite())
    throw StitchError(ErrorKind::DegenerateConfiguration,
                      "cannot canonicalize a zero or non-finite model");
  v /= norm;
  for (int i = 0; i < 12; ++i) {
    if (std::abs(v(i)) > 1e-9) {
      if (v(i) < 0.0) v = -v;
      break;
    }
  }
  return v;
}

EpipolarModel model_from_parameters(const Eigen::Matrix<double, 12, 1>& v) {
  EpipolarModel model;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) model.h_inf(r, c) = v(r * 3 + c);
  model.epipole = v.tail<3>();
  return model;
}

}  // namespace depthstitch
