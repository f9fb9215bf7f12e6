#include "depthstitch/segmentation.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <vector>

#include "depthstitch/rng.hpp"

namespace {

using namespace depthstitch;

SegmentationParams params(int n, double compactness = 10.0) {
  SegmentationParams p;
  p.n_segments = n;
  p.compactness = compactness;
  return p;
}

// Every label id in [0, segment_count) must name one 4-connected, non-empty
// pixel set, and together they must cover the image.
void check_partition(const SegmentLabelMap& seg) {
  ASSERT_EQ(seg.labels.size(), static_cast<size_t>(seg.width) * seg.height);
  ASSERT_GE(seg.segment_count, 1);
  std::vector<int> first_x(seg.segment_count, -1), first_y(seg.segment_count, -1);
  std::vector<int> sizes(seg.segment_count, 0);
  for (int y = 0; y < seg.height; ++y)
    for (int x = 0; x < seg.width; ++x) {
      const int l = seg.label(x, y);
      ASSERT_GE(l, 0);
      ASSERT_LT(l, seg.segment_count);
      if (sizes[l]++ == 0) {
        first_x[l] = x;
        first_y[l] = y;
      }
    }
  for (int l = 0; l < seg.segment_count; ++l) {
    ASSERT_GT(sizes[l], 0) << "label " << l << " unused";
    std::vector<uint8_t> seen(seg.labels.size(), 0);
    std::queue<std::pair<int, int>> frontier;
    frontier.push({first_x[l], first_y[l]});
    seen[static_cast<size_t>(first_y[l]) * seg.width + first_x[l]] = 1;
    int reached = 0;
    while (!frontier.empty()) {
      const auto [x, y] = frontier.front();
      frontier.pop();
      ++reached;
      const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        const int nx = x + dx[k], ny = y + dy[k];
        if (nx < 0 || ny < 0 || nx >= seg.width || ny >= seg.height) continue;
        const size_t idx = static_cast<size_t>(ny) * seg.width + nx;
        if (seen[idx] || seg.label(nx, ny) != l) continue;
        seen[idx] = 1;
        frontier.push({nx, ny});
      }
    }
    EXPECT_EQ(reached, sizes[l]) << "label " << l << " is disconnected";
  }
}

TEST(SlicSegment, DepthStepSplitsExactlyAtTheEdge) {
  DepthMap depth(96, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 96; ++x) depth.set(x, y, x < 48 ? 1.0 : 0.5);
  const SegmentLabelMap seg = slic_segment(depth, params(2, 1.0));
  check_partition(seg);
  ASSERT_EQ(seg.segment_count, 2);
  EXPECT_EQ(seg.label(0, 0), 0);  // compact relabel in scan order
  EXPECT_EQ(seg.label(95, 31), 1);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 96; ++x)
      EXPECT_EQ(seg.label(x, y), x < 48 ? 0 : 1) << x << "," << y;
}

TEST(SlicSegment, ConstantDepthFallsBackToTheSeedGrid) {
  DepthMap depth(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) depth.set(x, y, 0.125);
  const SegmentLabelMap seg = slic_segment(depth, params(4));
  check_partition(seg);
  ASSERT_EQ(seg.segment_count, 4);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      EXPECT_EQ(seg.label(x, y), (y >= 32 ? 2 : 0) + (x >= 32 ? 1 : 0))
          << x << "," << y;
}

TEST(SlicSegment, NoisyRampStaysAValidPartition) {
  Rng rng(80);
  DepthMap depth(80, 60);
  for (int y = 0; y < 60; ++y)
    for (int x = 0; x < 80; ++x)
      depth.set(x, y, 0.1 + 0.4 * x / 79.0 + 0.03 * rng.uniform(-1.0, 1.0));
  const SegmentLabelMap seg = slic_segment(depth, params(12));
  check_partition(seg);
  EXPECT_GE(seg.segment_count, 2);
}

TEST(SlicSegment, InvalidPixelsAreStillLabeled) {
  DepthMap depth(32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      if (x < 16)
        depth.set_invalid(x, y);
      else
        depth.set(x, y, 0.2 + 0.3 * y / 31.0);
    }
  const SegmentLabelMap seg = slic_segment(depth, params(2));
  check_partition(seg);  // includes: every pixel carries a real label
}

TEST(SlicSegment, SingleSegmentCoversEverything) {
  DepthMap depth(20, 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 20; ++x) depth.set(x, y, 0.5);
  const SegmentLabelMap seg = slic_segment(depth, params(1));
  ASSERT_EQ(seg.segment_count, 1);
  for (int l : seg.labels) EXPECT_EQ(l, 0);
}

SegmentLabelMap two_label_block(int width, int height, int x0, int y0, int x1,
                                int y1) {
  SegmentLabelMap seg;
  seg.width = width;
  seg.height = height;
  seg.segment_count = 2;
  seg.labels.assign(static_cast<size_t>(width) * height, 0);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      seg.labels[static_cast<size_t>(y) * width + x] = 1;
  return seg;
}

bool eight_adjacent(const ImagePoint& a, const ImagePoint& b) {
  return std::abs(a.x() - b.x()) <= 1.0 + 1e-12 &&
         std::abs(a.y() - b.y()) <= 1.0 + 1e-12 &&
         (a - b).norm() > 1e-12;
}

TEST(TraceBoundary, SinglePixelSegment) {
  SegmentLabelMap seg = two_label_block(5, 5, 2, 3, 2, 3);
  const std::vector<ImagePoint> contour = trace_boundary(seg, 1);
  ASSERT_EQ(contour.size(), 1u);
  EXPECT_EQ(contour[0].x(), 2.0);
  EXPECT_EQ(contour[0].y(), 3.0);
}

TEST(TraceBoundary, BlockPerimeterIsAClosedOrderedRing) {
  const SegmentLabelMap seg = two_label_block(10, 10, 2, 2, 6, 6);
  const std::vector<ImagePoint> contour = trace_boundary(seg, 1);
  // 5x5 block: 16 perimeter pixels, 9 interior pixels excluded.
  ASSERT_EQ(contour.size(), 16u);
  EXPECT_EQ(contour.front().x(), 2.0);  // topmost-leftmost start
  EXPECT_EQ(contour.front().y(), 2.0);
  std::set<std::pair<int, int>> expected;
  for (int y = 2; y <= 6; ++y)
    for (int x = 2; x <= 6; ++x)
      if (x == 2 || x == 6 || y == 2 || y == 6) expected.insert({x, y});
  std::set<std::pair<int, int>> got;
  for (const ImagePoint& p : contour)
    got.insert({static_cast<int>(p.x()), static_cast<int>(p.y())});
  EXPECT_EQ(got, expected);
  for (size_t i = 0; i < contour.size(); ++i)
    EXPECT_TRUE(eight_adjacent(contour[i], contour[(i + 1) % contour.size()]))
        << "gap after point " << i;
}

TEST(TraceBoundary, ThinStripIsTraversedCompletely) {
  const SegmentLabelMap seg = two_label_block(12, 4, 1, 2, 10, 2);
  const std::vector<ImagePoint> contour = trace_boundary(seg, 1);
  std::set<std::pair<int, int>> got;
  for (const ImagePoint& p : contour)
    got.insert({static_cast<int>(p.x()), static_cast<int>(p.y())});
  EXPECT_EQ(got.size(), 10u);  // every strip pixel is on the boundary
  for (int x = 1; x <= 10; ++x) EXPECT_TRUE(got.count({x, 2})) << x;
}

double point_segment_distance(const ImagePoint& p, const ImagePoint& a,
                              const ImagePoint& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 < 1e-24) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

TEST(SimplifyPolygon, ZeroEpsilonKeepsEveryPoint) {
  const std::vector<ImagePoint> contour = {
      ImagePoint(0, 0), ImagePoint(1, 0), ImagePoint(2, 0), ImagePoint(2, 1)};
  const std::vector<ImagePoint> out = simplify_polygon(contour, 0.0);
  ASSERT_EQ(out.size(), contour.size());
  for (size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out[i].x(), contour[i].x());
    EXPECT_EQ(out[i].y(), contour[i].y());
  }
}

TEST(SimplifyPolygon, AxisAlignedRingCollapsesToCorners) {
  const SegmentLabelMap seg = two_label_block(10, 10, 2, 2, 6, 6);
  const std::vector<ImagePoint> contour = trace_boundary(seg, 1);
  const std::vector<ImagePoint> out = simplify_polygon(contour, 0.5);
  ASSERT_EQ(out.size(), 4u);
  std::set<std::pair<int, int>> corners;
  for (const ImagePoint& p : out)
    corners.insert({static_cast<int>(p.x()), static_cast<int>(p.y())});
  const std::set<std::pair<int, int>> expected = {
      {2, 2}, {6, 2}, {6, 6}, {2, 6}};
  EXPECT_EQ(corners, expected);
}

TEST(SimplifyPolygon, DroppedPointsStayWithinEpsilon) {
  Rng rng(81);
  for (int trial = 0; trial < 20; ++trial) {
    // Noisy closed ring around a circle.
    std::vector<ImagePoint> contour;
    const int n = 60;
    for (int i = 0; i < n; ++i) {
      const double a = 2.0 * M_PI * i / n;
      const double r = 20.0 + rng.uniform(-1.5, 1.5);
      contour.emplace_back(30.0 + r * std::cos(a), 30.0 + r * std::sin(a));
    }
    const double eps = rng.uniform(0.5, 4.0);
    const std::vector<ImagePoint> out = simplify_polygon(contour, eps);
    ASSERT_GE(out.size(), 2u);
    ASSERT_LE(out.size(), contour.size());
    for (const ImagePoint& p : contour) {
      double best = std::numeric_limits<double>::infinity();
      for (size_t i = 0; i < out.size(); ++i)
        best = std::min(best, point_segment_distance(
                                  p, out[i], out[(i + 1) % out.size()]));
      EXPECT_LE(best, eps + 1e-9);
    }
  }
}

TEST(ExtractSegmentPolygons, MatchesPerSegmentTraceAndSimplify) {
  DepthMap depth(96, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 96; ++x) depth.set(x, y, x < 48 ? 1.0 : 0.5);
  const SegmentLabelMap seg = slic_segment(depth, params(2, 1.0));
  const double eps = 1.5;
  const std::vector<std::vector<ImagePoint>> polys =
      extract_segment_polygons(seg, eps);
  ASSERT_EQ(polys.size(), static_cast<size_t>(seg.segment_count));
  for (int l = 0; l < seg.segment_count; ++l) {
    const std::vector<ImagePoint> expected =
        simplify_polygon(trace_boundary(seg, l), eps);
    ASSERT_EQ(polys[l].size(), expected.size());
    for (size_t i = 0; i < expected.size(); ++i)
      EXPECT_LT((polys[l][i] - expected[i]).norm(), 1e-15);
  }
}

}  // namespace
