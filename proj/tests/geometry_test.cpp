#include "depthstitch/geometry.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "depthstitch/rng.hpp"
#include "test_support.hpp"

namespace {

using namespace depthstitch;
using test_support::canonical_gap;
using test_support::exact_records;
using test_support::expect_error;
using test_support::random_camera_model;

TEST(Dehomogenize, DividesByThirdCoordinate) {
  const ImagePoint a = dehomogenize(Eigen::Vector3d(3, 4, 1));
  EXPECT_DOUBLE_EQ(a.x(), 3.0);
  EXPECT_DOUBLE_EQ(a.y(), 4.0);
  const ImagePoint b = dehomogenize(Eigen::Vector3d(6, 8, 2));
  EXPECT_DOUBLE_EQ(b.x(), 3.0);
  EXPECT_DOUBLE_EQ(b.y(), 4.0);
}

TEST(Dehomogenize, ZeroScaleThrows) {
  expect_error([] { dehomogenize(Eigen::Vector3d(1, 1, 0)); },
               ErrorKind::DegeneratePoint);
}

TEST(ProjectWithDepth, IdentityModelIsIdentity) {
  EpipolarModel model;  // h_inf = I, epipole = 0
  for (double w : {0.0, 0.3, 7.0}) {
    const ImagePoint q = project_with_depth(model, ImagePoint(5, 7), w);
    EXPECT_DOUBLE_EQ(q.x(), 5.0);
    EXPECT_DOUBLE_EQ(q.y(), 7.0);
  }
}

TEST(ProjectWithDepth, EpipoleShiftsAlongItsDirection) {
  EpipolarModel model;
  model.epipole = Eigen::Vector3d(2, 0, 0);
  const ImagePoint q = project_with_depth(model, ImagePoint(3, 4), 1.0);
  EXPECT_DOUBLE_EQ(q.x(), 5.0);
  EXPECT_DOUBLE_EQ(q.y(), 4.0);
}

TEST(ProjectWithDepth, HomogeneousEpipoleRescales) {
  EpipolarModel model;
  model.epipole = Eigen::Vector3d(0, 0, 1);
  const ImagePoint q = project_with_depth(model, ImagePoint(3, 4), 1.0);
  EXPECT_DOUBLE_EQ(q.x(), 1.5);
  EXPECT_DOUBLE_EQ(q.y(), 2.0);
}

TEST(MappingError, ZeroForPerfectMatch) {
  Rng rng(41);
  const EpipolarModel model = random_camera_model(rng);
  const MatchSet set = exact_records(model, 20, rng);
  for (const MatchRecord& rec : set.records)
    EXPECT_LT(mapping_error(model, rec), 1e-10);
}

TEST(MappingError, EuclideanDistanceInReferencePixels) {
  EpipolarModel model;
  MatchRecord rec;
  rec.p = ImagePoint(0, 0);
  rec.q = ImagePoint(3, 4);
  rec.inv_depth = 0.5;
  EXPECT_DOUBLE_EQ(mapping_error(model, rec), 5.0);

  model.epipole = Eigen::Vector3d(2, 0, 0);
  rec.p = ImagePoint(3, 4);
  rec.q = ImagePoint(5, 5);
  rec.inv_depth = 1.0;
  EXPECT_DOUBLE_EQ(mapping_error(model, rec), 1.0);
}

TEST(PlaneFromVertices, FrontoParallelUnitDepth) {
  const PlaneParam m = plane_from_vertices(ImagePoint(0, 0), 1.0,
                                           ImagePoint(1, 0), 1.0,
                                           ImagePoint(0, 1), 1.0);
  EXPECT_NEAR(m(0), 0.0, 1e-12);
  EXPECT_NEAR(m(1), 0.0, 1e-12);
  EXPECT_NEAR(m(2), 1.0, 1e-12);
}

TEST(PlaneFromVertices, SlantedPlaneSolvesThreeByThree) {
  // Depths 1, 0.5, 1 mean inverse depths 1, 2, 1: m = (1, 0, 1).
  const PlaneParam m = plane_from_vertices(ImagePoint(0, 0), 1.0,
                                           ImagePoint(1, 0), 2.0,
                                           ImagePoint(0, 1), 1.0);
  EXPECT_NEAR(m(0), 1.0, 1e-12);
  EXPECT_NEAR(m(1), 0.0, 1e-12);
  EXPECT_NEAR(m(2), 1.0, 1e-12);
}

TEST(PlaneFromVertices, CollinearVerticesThrow) {
  expect_error(
      [] {
        plane_from_vertices(ImagePoint(0, 0), 1.0, ImagePoint(1, 1), 1.0,
                            ImagePoint(2, 2), 1.0);
      },
      ErrorKind::CollinearVertices);
}

TEST(HomographyFromPlane, ZeroEpipoleKeepsInfinityHomography) {
  Rng rng(7);
  EpipolarModel model = random_camera_model(rng);
  model.epipole.setZero();
  const LocalHomography h = homography_from_plane(model, PlaneParam(0.3, -0.1, 2.0));
  EXPECT_LT((h - model.h_inf).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(HomographyFromPlane, RankOneUpdate) {
  EpipolarModel model;
  model.epipole = Eigen::Vector3d(0, 0, 1);
  const LocalHomography h = homography_from_plane(model, PlaneParam(0, 0, 1));
  Eigen::Matrix3d expected = Eigen::Matrix3d::Identity();
  expected(2, 2) = 2.0;
  EXPECT_LT((h - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(HomographyFromPlane, AgreesWithDepthTransferOnThePlane) {
  EpipolarModel simple;
  simple.epipole = Eigen::Vector3d(1, 0, 0);
  const LocalHomography h = homography_from_plane(simple, PlaneParam(0, 0, 0.5));
  const ImagePoint q = dehomogenize(h * Eigen::Vector3d(0, 0, 1));
  EXPECT_DOUBLE_EQ(q.x(), 0.5);
  EXPECT_DOUBLE_EQ(q.y(), 0.0);

  // Property over random models: for p on the plane (w = m . p~), the plane
  // homography and the depth transfer produce the same point.
  Rng rng(12345);
  for (int trial = 0; trial < 50; ++trial) {
    const EpipolarModel model = random_camera_model(rng);
    const PlaneParam m(rng.uniform(-1e-4, 1e-4), rng.uniform(-1e-4, 1e-4),
                       rng.uniform(0.05, 0.3));
    const LocalHomography hm = homography_from_plane(model, m);
    for (int k = 0; k < 20; ++k) {
      const ImagePoint p(rng.uniform(0.0, 640.0), rng.uniform(0.0, 480.0));
      const double w = m.dot(homogeneous(p));
      if (w <= 1e-4) continue;
      const ImagePoint via_h = dehomogenize(hm * homogeneous(p));
      const ImagePoint via_w = project_with_depth(model, p, w);
      EXPECT_LT((via_h - via_w).norm(), 1e-9);
    }
  }
}

TEST(FundamentalFromModel, SkewConstructionByHand) {
  EpipolarModel model;
  model.epipole = Eigen::Vector3d(0, 0, 1);
  const Eigen::Matrix3d f = fundamental_from_model(model);
  const double s = 1.0 / std::sqrt(2.0);
  // [e']x I for e' = (0,0,1) is [[0,-1,0],[1,0,0],[0,0,0]]; Frobenius
  // normalization with a positive leading entry flips the overall sign.
  EXPECT_NEAR(f(0, 1), s, 1e-12);
  EXPECT_NEAR(f(1, 0), -s, 1e-12);
  EXPECT_NEAR(std::abs(f(0, 1)) + std::abs(f(1, 0)), 2 * s, 1e-12);
  EXPECT_NEAR(f.norm(), 1.0, 1e-12);
  EXPECT_NEAR(f(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(f(2, 2), 0.0, 1e-12);
}

TEST(FundamentalFromModel, TransfersSatisfyEpipolarConstraint) {
  Rng rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    const EpipolarModel model = random_camera_model(rng);
    const Eigen::Matrix3d f = fundamental_from_model(model);
    // Rank 2: smallest singular value vanishes.
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(f);
    EXPECT_LT(svd.singularValues()(2), 1e-10);
    const MatchSet set = exact_records(model, 30, rng, 0.0, 0.25);
    for (const MatchRecord& rec : set.records) {
      const Eigen::Vector3d pt = homogeneous(rec.p);
      const Eigen::Vector3d qt = homogeneous(rec.q);
      const double residual = std::abs(qt.dot(f * pt)) / (pt.norm() * qt.norm());
      EXPECT_LT(residual, 1e-9);
    }
  }
}

TEST(FundamentalFromModel, ZeroEpipoleThrows) {
  EpipolarModel model;  // epipole = 0
  expect_error([&] { fundamental_from_model(model); },
               ErrorKind::DegenerateConfiguration);
}

TEST(ModelScale, JointRescalingIsInvisible) {
  Rng rng(5);
  const EpipolarModel model = random_camera_model(rng);
  const MatchSet set = exact_records(model, 25, rng);
  for (double lambda : {0.5, -2.0, 3.75}) {
    EpipolarModel scaled;
    scaled.h_inf = lambda * model.h_inf;
    scaled.epipole = lambda * model.epipole;
    for (const MatchRecord& rec : set.records) {
      const ImagePoint a = project_with_depth(model, rec.p, rec.inv_depth);
      const ImagePoint b = project_with_depth(scaled, rec.p, rec.inv_depth);
      EXPECT_LT((a - b).norm() / std::max(1.0, a.norm()), 1e-12);
      EXPECT_NEAR(mapping_error(model, rec), mapping_error(scaled, rec), 1e-12);
    }
    EXPECT_LT(canonical_gap(model, scaled), 1e-12);
  }
}

TEST(Canonicalize, UnitNormWithPositiveLeadingEntry) {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const EpipolarModel model = random_camera_model(rng);
    const Eigen::Matrix<double, 12, 1> v = canonicalize(model);
    EXPECT_NEAR(v.norm(), 1.0, 1e-12);
    for (int i = 0; i < 12; ++i) {
      if (std::abs(v(i)) > 1e-9) {
        EXPECT_GT(v(i), 0.0);
        break;
      }
    }
    // Rebuilding from the canonical vector is a fixed point.
    const EpipolarModel back = model_from_parameters(v);
    EXPECT_LT(canonical_gap(model, back), 1e-14);
  }
}

}  // namespace
