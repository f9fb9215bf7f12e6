#pragma once

// Shared helpers for the test suites: plausible random two-view transfer
// models built from camera pairs, exact correspondence sets generated from
// them, and an exception-kind matcher.

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "depthstitch/geometry.hpp"
#include "depthstitch/rng.hpp"

namespace test_support {

using depthstitch::EpipolarModel;
using depthstitch::ImagePoint;
using depthstitch::MatchRecord;
using depthstitch::MatchSet;
using depthstitch::Rng;

inline Eigen::Matrix3d intrinsics(double f, double cx, double cy) {
  Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
  k(0, 0) = k(1, 1) = f;
  k(0, 2) = cx;
  k(1, 2) = cy;
  return k;
}

// A transfer model from a random but sane camera pair: moderate focal
// lengths, a small rotation and a sub-unit baseline, so points a few meters
// out stay well in front of both cameras.
inline EpipolarModel random_camera_model(Rng& rng) {
  const Eigen::Matrix3d k1 = intrinsics(450.0 + 150.0 * rng.uniform(),
                                        300.0 + 40.0 * rng.uniform(),
                                        220.0 + 40.0 * rng.uniform());
  const Eigen::Matrix3d k2 = intrinsics(450.0 + 150.0 * rng.uniform(),
                                        300.0 + 40.0 * rng.uniform(),
                                        220.0 + 40.0 * rng.uniform());
  Eigen::Vector3d axis(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                       rng.uniform(-1.0, 1.0));
  if (axis.norm() < 1e-6) axis = Eigen::Vector3d::UnitY();
  axis.normalize();
  const double angle = rng.uniform(0.02, 0.15);
  const Eigen::Matrix3d r = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
  Eigen::Vector3d t(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                    rng.uniform(-0.5, 0.5));
  if (t.norm() < 0.2) t += Eigen::Vector3d(0.4, 0.0, 0.0);

  EpipolarModel model;
  model.h_inf = k2 * r * k1.inverse();
  model.epipole = k2 * t;
  return model;
}

// Exact records: p uniform over a VGA-ish frame, inverse depth uniform in
// [w_lo, w_hi], q the exact transfer. Draws are rejected when the transfer
// lands behind the camera or absurdly far out of frame.
inline MatchSet exact_records(const EpipolarModel& model, int n, Rng& rng,
                              double w_lo = 0.05, double w_hi = 0.25) {
  MatchSet set;
  while (static_cast<int>(set.records.size()) < n) {
    MatchRecord rec;
    rec.p = ImagePoint(rng.uniform(10.0, 630.0), rng.uniform(10.0, 470.0));
    rec.inv_depth = rng.uniform(w_lo, w_hi);
    const Eigen::Vector3d v =
        model.h_inf * depthstitch::homogeneous(rec.p) +
        rec.inv_depth * model.epipole;
    if (!(v(2) > 1e-6)) continue;
    rec.q = ImagePoint(v(0) / v(2), v(1) / v(2));
    if (rec.q.cwiseAbs().maxCoeff() > 5000.0) continue;
    set.records.push_back(rec);
    set.true_inlier.push_back(1);
  }
  return set;
}

// Largest entry difference between the canonical 12-parameter forms.
inline double canonical_gap(const EpipolarModel& a, const EpipolarModel& b) {
  return (depthstitch::canonicalize(a) - depthstitch::canonicalize(b))
      .cwiseAbs()
      .maxCoeff();
}

// Asserts that fn() throws StitchError with the expected kind.
template <typename Fn>
void expect_error(Fn&& fn, depthstitch::ErrorKind kind) {
  try {
    fn();
    FAIL() << "expected StitchError kind " << depthstitch::to_string(kind);
  } catch (const depthstitch::StitchError& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

}  // namespace test_support
