#include "depthstitch/compose.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "depthstitch/rng.hpp"
#include "test_support.hpp"

namespace {

using namespace depthstitch;
using test_support::expect_error;

TEST(ConvexHull, FewerThanThreePointsPassThrough) {
  const std::vector<ImagePoint> out =
      convex_hull({ImagePoint(5, 5), ImagePoint(1, 1)});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].x(), 1.0);
  EXPECT_EQ(out[1].x(), 5.0);
}

TEST(ConvexHull, DropsInteriorCollinearAndDuplicatePoints) {
  const std::vector<ImagePoint> out = convex_hull(
      {ImagePoint(0, 0), ImagePoint(4, 0), ImagePoint(4, 4), ImagePoint(0, 4),
       ImagePoint(2, 2), ImagePoint(2, 0), ImagePoint(4, 4)});
  ASSERT_EQ(out.size(), 4u);
  const double expected[4][2] = {{0, 0}, {4, 0}, {4, 4}, {0, 4}};
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(out[i].x(), expected[i][0]) << i;
    EXPECT_EQ(out[i].y(), expected[i][1]) << i;
  }
}

TEST(ConvexHull, RandomCloudsContainAllPoints) {
  Rng rng(110);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<ImagePoint> pts;
    for (int i = 0; i < 50; ++i)
      pts.emplace_back(rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0));
    const std::vector<ImagePoint> hull = convex_hull(pts);
    ASSERT_GE(hull.size(), 3u);
    // Counter-clockwise orientation and every point inside or on the hull.
    const int n = static_cast<int>(hull.size());
    for (const ImagePoint& p : pts)
      for (int i = 0; i < n; ++i) {
        const ImagePoint& a = hull[i];
        const ImagePoint& b = hull[(i + 1) % n];
        const double cross = (b.x() - a.x()) * (p.y() - a.y()) -
                             (b.y() - a.y()) * (p.x() - a.x());
        EXPECT_GE(cross, -1e-9);
      }
  }
}

TEST(InpaintHoles, SinglePixelTakesItsNeighborMean) {
  ImageF color(3, 3, 1);
  std::vector<uint8_t> known(9, 1), hole(9, 0);
  known[4] = 0;
  hole[4] = 1;
  color.at(1, 0) = 10.0f;  // up
  color.at(0, 1) = 20.0f;  // left
  color.at(2, 1) = 30.0f;  // right
  color.at(1, 2) = 40.0f;  // down
  const int unreached = inpaint_holes(color, known, hole, 100, 1e-9);
  EXPECT_EQ(unreached, 0);
  EXPECT_FLOAT_EQ(color.at(1, 1), 25.0f);
}

TEST(InpaintHoles, OneDimensionalGapRelaxesToALinearRamp) {
  ImageF color(5, 1, 1);
  std::vector<uint8_t> known = {1, 0, 0, 0, 1};
  std::vector<uint8_t> hole = {0, 1, 1, 1, 0};
  color.at(0, 0) = 0.0f;
  color.at(4, 0) = 100.0f;
  const int unreached = inpaint_holes(color, known, hole, 10000, 1e-9);
  EXPECT_EQ(unreached, 0);
  EXPECT_NEAR(color.at(1, 0), 25.0f, 1e-3);
  EXPECT_NEAR(color.at(2, 0), 50.0f, 1e-3);
  EXPECT_NEAR(color.at(3, 0), 75.0f, 1e-3);
}

TEST(InpaintHoles, IsolatedHolesStayUnreached) {
  ImageF color(4, 4, 1, 7.0f);
  std::vector<uint8_t> known(16, 0), hole(16, 1);
  const int unreached = inpaint_holes(color, known, hole, 100, 1e-9);
  EXPECT_EQ(unreached, 16);
  for (float v : color.data) EXPECT_EQ(v, 7.0f);  // nothing to diffuse from
}

WarpRender make_render(const CanvasSpec& canvas, int channels) {
  WarpRender r;
  r.color = ImageF(canvas.width, canvas.height, channels);
  const size_t count = static_cast<size_t>(canvas.width) * canvas.height;
  r.z.assign(count, std::numeric_limits<double>::infinity());
  r.triangle.assign(count, -1);
  r.covered.assign(count, 0);
  return r;
}

TEST(ComposeMosaic, OverlapAveragesWithRoundHalfAwayFromZero) {
  const CanvasSpec canvas{0, 0, 4, 4};
  WarpRender warped = make_render(canvas, 1);
  for (size_t p = 0; p < warped.covered.size(); ++p) warped.covered[p] = 1;
  for (float& v : warped.color.data) v = 101.0f;
  ImageU8 reference(4, 4, 1);
  for (uint8_t& v : reference.data) v = 50;

  const ComposeResult result = compose_mosaic(warped, reference, canvas);
  EXPECT_EQ(result.hole_count_before, 0);
  EXPECT_EQ(result.hole_count_after, 0);
  for (size_t p = 0; p < result.overlap_mask.size(); ++p) {
    EXPECT_EQ(result.overlap_mask[p], 1);
    EXPECT_EQ(result.warped_mask[p], 1);
    EXPECT_EQ(result.reference_mask[p], 1);
  }
  for (uint8_t v : result.mosaic.data) EXPECT_EQ(v, 76);  // 75.5 rounds up
}

TEST(ComposeMosaic, ReferencePlacementHonorsTheCanvasOrigin) {
  const CanvasSpec canvas{-2, -1, 8, 6};
  const WarpRender warped = make_render(canvas, 1);
  ImageU8 reference(4, 4, 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      reference.at(x, y) = static_cast<uint8_t>(10 * y + x);

  const ComposeResult result = compose_mosaic(warped, reference, canvas);
  for (int j = 0; j < canvas.height; ++j)
    for (int i = 0; i < canvas.width; ++i) {
      const size_t p = static_cast<size_t>(j) * canvas.width + i;
      const int rx = i + canvas.origin_x;
      const int ry = j + canvas.origin_y;
      const bool inside = rx >= 0 && rx < 4 && ry >= 0 && ry < 4;
      EXPECT_EQ(result.reference_mask[p] != 0, inside) << i << "," << j;
      EXPECT_EQ(result.mosaic.at(i, j),
                inside ? reference.at(rx, ry) : uint8_t(0));
    }
  EXPECT_EQ(result.hole_count_before, 0);  // hull equals the covered block
}

TEST(ComposeMosaic, GapInsideTheHullBecomesAHoleAndIsFilled) {
  const CanvasSpec canvas{0, 0, 8, 4};
  WarpRender warped = make_render(canvas, 1);
  for (int j = 0; j < 4; ++j)
    for (int i = 5; i < 8; ++i) {
      const size_t p = static_cast<size_t>(j) * 8 + i;
      warped.covered[p] = 1;
      warped.color.at(i, j) = 200.0f;
    }
  ImageU8 reference(4, 4, 1);
  for (uint8_t& v : reference.data) v = 100;

  ComposeParams params;
  const ComposeResult filled = compose_mosaic(warped, reference, canvas, params);
  // Column 4 is uncovered but inside the hull of [0..3] u [5..7].
  EXPECT_EQ(filled.hole_count_before, 4);
  EXPECT_EQ(filled.hole_count_after, 0);
  for (int j = 0; j < 4; ++j) {
    const size_t p = static_cast<size_t>(j) * 8 + 4;
    EXPECT_EQ(filled.hole_mask[p], 1);
    EXPECT_GE(filled.mosaic.at(4, j), uint8_t(100));
    EXPECT_LE(filled.mosaic.at(4, j), uint8_t(200));
  }

  params.inpaint = false;
  const ComposeResult left = compose_mosaic(warped, reference, canvas, params);
  EXPECT_EQ(left.hole_count_before, 4);
  EXPECT_EQ(left.hole_count_after, 4);
  for (int j = 0; j < 4; ++j) EXPECT_EQ(left.mosaic.at(4, j), 0);
}

TEST(ComposeMosaic, WarpedOnlyRegionsKeepTheirColors) {
  const CanvasSpec canvas{0, 0, 6, 2};
  WarpRender warped = make_render(canvas, 3);
  Rng rng(111);
  for (int j = 0; j < 2; ++j)
    for (int i = 3; i < 6; ++i) {
      const size_t p = static_cast<size_t>(j) * 6 + i;
      warped.covered[p] = 1;
      for (int c = 0; c < 3; ++c)
        warped.color.at(i, j, c) = static_cast<float>(rng.bounded(256));
    }
  ImageU8 reference(3, 2, 3);
  for (uint8_t& v : reference.data) v = 9;

  const ComposeResult result = compose_mosaic(warped, reference, canvas);
  EXPECT_EQ(result.hole_count_before, 0);
  for (int j = 0; j < 2; ++j)
    for (int i = 3; i < 6; ++i)
      for (int c = 0; c < 3; ++c)
        EXPECT_EQ(result.mosaic.at(i, j, c),
                  static_cast<uint8_t>(std::lround(warped.color.at(i, j, c))));
}

TEST(ComposeMosaic, MismatchedCanvasOrChannelsThrow) {
  const CanvasSpec canvas{0, 0, 5, 4};
  const WarpRender warped = make_render({0, 0, 4, 4}, 1);
  const ImageU8 reference(4, 4, 1);
  expect_error([&] { compose_mosaic(warped, reference, canvas); },
               ErrorKind::CanvasMismatch);

  const WarpRender sized = make_render(canvas, 1);
  const ImageU8 rgb(4, 4, 3);
  expect_error([&] { compose_mosaic(sized, rgb, canvas); },
               ErrorKind::CanvasMismatch);
}

}  // namespace
