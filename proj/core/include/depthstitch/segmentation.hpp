#pragma once

#include <vector>

#include "depthstitch/geometry.hpp"
#include "depthstitch/image.hpp"

namespace depthstitch {

struct SegmentationParams {
  int n_segments = 400;
  double compactness = 10.0;  // weight of the spatial terms vs. depth
  int iterations = 10;
};

struct SegmentLabelMap {
  int width = 0;
  int height = 0;
  std::vector<int> labels;  // compact ids in [0, segment_count)
  int segment_count = 0;

  int label(int x, int y) const {
    return labels[static_cast<size_t>(y) * width + x];
  }
};

// SLIC-style local k-means over (normalized inverse depth, x/S, y/S) with
// grid seeding, a 2S x 2S search window per center, and a final 4-connectivity
// cleanup that merges stray fragments into their largest adjacent segment.
// Invalid depth pixels participate with the mean feature value. The result
// always has at least one segment and labels form a compact range.
SegmentLabelMap slic_segment(const DepthMap& depth,
                             const SegmentationParams& params);

// Ordered closed contour of the segment's outer boundary pixels (Moore
// tracing, 8-connected walk around the 4-connected region), starting at the
// topmost-leftmost pixel. A single-pixel segment yields one point.
std::vector<ImagePoint> trace_boundary(const SegmentLabelMap& segments,
                                       int segment_id);

// Ramer-Douglas-Peucker simplification of a closed contour. The two anchors
// are the start point and the point farthest from it. epsilon = 0 returns the
// input unchanged (even exactly collinear points are kept).
std::vector<ImagePoint> simplify_polygon(const std::vector<ImagePoint>& contour,
                                         double epsilon);

// trace + simplify for every segment.
std::vector<std::vector<ImagePoint>> extract_segment_polygons(
    const SegmentLabelMap& segments, double epsilon);

}  // namespace depthstitch
