#include "depthstitch/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace depthstitch {

namespace {

struct Center {
  double x = 0.0;
  double y = 0.0;
  double f = 0.0;
};

std::vector<double> depth_feature(const DepthMap& depth) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  size_t valid = 0;
  for (size_t i = 0; i < depth.inv_depth.size(); ++i) {
    if (!depth.valid[i]) continue;
    lo = std::min(lo, depth.inv_depth[i]);
    hi = std::max(hi, depth.inv_depth[i]);
    sum += depth.inv_depth[i];
    ++valid;
  }
  std::vector<double> f(depth.inv_depth.size(), 0.5);
  if (valid == 0 || hi - lo < 1e-12) return f;  // constant map
  const double range = hi - lo;
  const double mean_f = (sum / valid - lo) / range;
  for (size_t i = 0; i < f.size(); ++i)
    f[i] = depth.valid[i] ? (depth.inv_depth[i] - lo) / range : mean_f;
  return f;
}

// Merge 4-connected fragments so every label is one region: each label keeps
// its largest component, every other component joins the largest adjacent
// region (deterministic: components in scan order, ties to the smaller root).
void enforce_connectivity(SegmentLabelMap& map) {
  const int w = map.width, h = map.height;
  const size_t n = static_cast<size_t>(w) * h;
  std::vector<int> comp(n, -1);
  std::vector<int> comp_label;
  std::vector<long> comp_size;
  std::deque<size_t> queue;
  for (size_t start = 0; start < n; ++start) {
    if (comp[start] >= 0) continue;
    const int id = static_cast<int>(comp_label.size());
    comp_label.push_back(map.labels[start]);
    comp_size.push_back(0);
    comp[start] = id;
    queue.push_back(start);
    while (!queue.empty()) {
      const size_t i = queue.front();
      queue.pop_front();
      ++comp_size[id];
      const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
      const int nx[4] = {x - 1, x + 1, x, x};
      const int ny[4] = {y, y, y - 1, y + 1};
      for (int k = 0; k < 4; ++k) {
        if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
        const size_t j = static_cast<size_t>(ny[k]) * w + nx[k];
        if (comp[j] < 0 && map.labels[j] == map.labels[start]) {
          comp[j] = id;
          queue.push_back(j);
        }
      }
    }
  }

  const int n_comp = static_cast<int>(comp_label.size());
  // Main component per label = the largest one (first in scan order on ties).
  std::vector<int> main_comp(map.segment_count, -1);
  for (int c = 0; c < n_comp; ++c) {
    const int l = comp_label[c];
    if (main_comp[l] < 0 || comp_size[c] > comp_size[main_comp[l]])
      main_comp[l] = c;
  }

  // Union-find over components; orphans attach to their largest neighbor.
  std::vector<int> parent(n_comp);
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<long> region_size = comp_size;
  auto find = [&](int c) {
    while (parent[c] != c) c = parent[c] = parent[parent[c]];
    return c;
  };
  for (int c = 0; c < n_comp; ++c) {
    if (main_comp[comp_label[c]] == c) continue;
    // Collect adjacent roots of this orphan component.
    int best_root = -1;
    long best_size = -1;
    for (size_t i = 0; i < n; ++i) {
      if (comp[i] != c) continue;
      const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
      const int nx[4] = {x - 1, x + 1, x, x};
      const int ny[4] = {y, y, y - 1, y + 1};
      for (int k = 0; k < 4; ++k) {
        if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
        const int other = comp[static_cast<size_t>(ny[k]) * w + nx[k]];
        if (other == c) continue;
        const int root = find(other);
        if (root == find(c)) continue;
        if (region_size[root] > best_size ||
            (region_size[root] == best_size && root < best_root)) {
          best_size = region_size[root];
          best_root = root;
        }
      }
    }
    if (best_root >= 0) {
      const int me = find(c);
      parent[me] = best_root;
      region_size[best_root] += region_size[me];
    }
  }

  // Compact relabel in scan order of first appearance.
  std::vector<int> new_label(n_comp, -1);
  int next = 0;
  for (size_t i = 0; i < n; ++i) {
    const int root = find(comp[i]);
    if (new_label[root] < 0) new_label[root] = next++;
    map.labels[i] = new_label[root];
  }
  map.segment_count = next;
}

}  // namespace

SegmentLabelMap slic_segment(const DepthMap& depth,
                             const SegmentationParams& params) {
  if (params.n_segments < 1 || params.iterations < 1 ||
      params.compactness < 0.0)
    throw StitchError(ErrorKind::InvalidParam, "bad segmentation parameters");
  const int w = depth.width, h = depth.height;
  if (w <= 0 || h <= 0)
    throw StitchError(ErrorKind::InvalidParam, "empty depth map");

  const std::vector<double> feature = depth_feature(depth);

  // Near-square seed grid with about n_segments cells.
  const double aspect = static_cast<double>(w) / h;
  int gw = std::max(1, static_cast<int>(std::lround(
                           std::sqrt(params.n_segments * aspect))));
  int gh = std::max(1, static_cast<int>(std::lround(
                           static_cast<double>(params.n_segments) / gw)));
  std::vector<Center> centers;
  for (int j = 0; j < gh; ++j)
    for (int i = 0; i < gw; ++i) {
      Center c;
      c.x = (i + 0.5) * w / gw - 0.5;
      c.y = (j + 0.5) * h / gh - 0.5;
      const int px = std::clamp(static_cast<int>(std::lround(c.x)), 0, w - 1);
      const int py = std::clamp(static_cast<int>(std::lround(c.y)), 0, h - 1);
      c.f = feature[static_cast<size_t>(py) * w + px];
      centers.push_back(c);
    }

  const int k = static_cast<int>(centers.size());
  const double s = std::sqrt(static_cast<double>(w) * h / k);
  const double spatial_w =
      (params.compactness * params.compactness) / (s * s);

  SegmentLabelMap map;
  map.width = w;
  map.height = h;
  map.labels.assign(static_cast<size_t>(w) * h, 0);
  std::vector<double> best_d(static_cast<size_t>(w) * h);

  for (int iter = 0; iter < params.iterations; ++iter) {
    std::fill(best_d.begin(), best_d.end(),
              std::numeric_limits<double>::infinity());
    for (int c = 0; c < k; ++c) {
      const int x0 = std::max(0, static_cast<int>(std::floor(centers[c].x - s)));
      const int x1 = std::min(w - 1, static_cast<int>(std::ceil(centers[c].x + s)));
      const int y0 = std::max(0, static_cast<int>(std::floor(centers[c].y - s)));
      const int y1 = std::min(h - 1, static_cast<int>(std::ceil(centers[c].y + s)));
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          const size_t i = static_cast<size_t>(y) * w + x;
          const double df = feature[i] - centers[c].f;
          const double dx = x - centers[c].x;
          const double dy = y - centers[c].y;
          const double d = df * df + spatial_w * (dx * dx + dy * dy);
          if (d < best_d[i]) {
            best_d[i] = d;
            map.labels[i] = c;
          }
        }
    }
    // Update step; empty clusters keep their previous center.
    std::vector<double> sx(k, 0.0), sy(k, 0.0), sf(k, 0.0);
    std::vector<long> cnt(k, 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const size_t i = static_cast<size_t>(y) * w + x;
        const int l = map.labels[i];
        sx[l] += x;
        sy[l] += y;
        sf[l] += feature[i];
        ++cnt[l];
      }
    for (int c = 0; c < k; ++c) {
      if (cnt[c] == 0) continue;
      centers[c].x = sx[c] / cnt[c];
      centers[c].y = sy[c] / cnt[c];
      centers[c].f = sf[c] / cnt[c];
    }
  }

  map.segment_count = k;
  enforce_connectivity(map);
  return map;
}

std::vector<ImagePoint> trace_boundary(const SegmentLabelMap& segments,
                                       int segment_id) {
  const int w = segments.width, h = segments.height;
  if (segment_id < 0 || segment_id >= segments.segment_count)
    throw StitchError(ErrorKind::InvalidParam, "no such segment");
  auto inside = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < w && y < h &&
           segments.label(x, y) == segment_id;
  };
  int sx = -1, sy = -1;
  for (int y = 0; y < h && sx < 0; ++y)
    for (int x = 0; x < w; ++x)
      if (segments.label(x, y) == segment_id) {
        sx = x;
        sy = y;
        break;
      }
  if (sx < 0) throw StitchError(ErrorKind::InvalidParam, "empty segment");

  // Clockwise (screen) 8-neighborhood ring starting west.
  static const int ring[8][2] = {{-1, 0}, {-1, -1}, {0, -1}, {1, -1},
                                 {1, 0},  {1, 1},   {0, 1},  {-1, 1}};
  bool isolated = true;
  for (auto& d : ring)
    if (inside(sx + d[0], sy + d[1])) {
      isolated = false;
      break;
    }
  std::vector<ImagePoint> contour;
  contour.emplace_back(sx, sy);
  if (isolated) return contour;

  // Moore tracing with the start state as the stopping criterion: the walk
  // ends when the start pixel is re-entered from the same backtrack pixel.
  int cx = sx, cy = sy;
  int bx = sx - 1, by = sy;  // scan-order start guarantees west is outside
  const int b0x = bx, b0y = by;
  const long budget = 8L * w * h + 16;
  for (long step = 0; step < budget; ++step) {
    int bi = 0;
    for (int i = 0; i < 8; ++i)
      if (cx + ring[i][0] == bx && cy + ring[i][1] == by) {
        bi = i;
        break;
      }
    int nx = cx, ny = cy;
    for (int k = 1; k <= 8; ++k) {
      const int idx = (bi + k) % 8;
      const int tx = cx + ring[idx][0];
      const int ty = cy + ring[idx][1];
      if (inside(tx, ty)) {
        nx = tx;
        ny = ty;
        break;
      }
      bx = tx;
      by = ty;
    }
    if (nx == sx && ny == sy && bx == b0x && by == b0y) break;
    cx = nx;
    cy = ny;
    contour.emplace_back(cx, cy);
  }
  return contour;
}

namespace {

double point_segment_distance(const ImagePoint& p, const ImagePoint& a,
                              const ImagePoint& b) {
  const ImagePoint ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 < 1e-24) return (p - a).norm();
  // Perpendicular distance to the chord line, as in classic RDP.
  return std::abs(ab.x() * (p.y() - a.y()) - ab.y() * (p.x() - a.x())) /
         std::sqrt(len2);
}

void rdp_open(const std::vector<ImagePoint>& pts, size_t lo, size_t hi,
              double epsilon, std::vector<char>* keep) {
  if (hi <= lo + 1) return;
  double worst = -1.0;
  size_t worst_i = lo;
  for (size_t i = lo + 1; i < hi; ++i) {
    const double d = point_segment_distance(pts[i], pts[lo], pts[hi]);
    if (d > worst) {
      worst = d;
      worst_i = i;
    }
  }
  if (worst > epsilon) {
    (*keep)[worst_i] = 1;
    rdp_open(pts, lo, worst_i, epsilon, keep);
    rdp_open(pts, worst_i, hi, epsilon, keep);
  }
}

}  // namespace

std::vector<ImagePoint> simplify_polygon(const std::vector<ImagePoint>& contour,
                                         double epsilon) {
  if (epsilon < 0.0)
    throw StitchError(ErrorKind::InvalidParam, "epsilon must be >= 0");
  if (epsilon == 0.0 || contour.size() <= 3) return contour;

  // Closed contour: anchor at the start point and the point farthest from
  // it, then simplify the two open chains (the second one wraps around).
  size_t far = 0;
  double far_d = -1.0;
  for (size_t i = 1; i < contour.size(); ++i) {
    const double d = (contour[i] - contour[0]).squaredNorm();
    if (d > far_d) {
      far_d = d;
      far = i;
    }
  }
  if (far == 0) return {contour[0]};  // all points coincide

  std::vector<ImagePoint> wrapped(contour.begin(), contour.end());
  wrapped.push_back(contour[0]);
  std::vector<char> keep(wrapped.size(), 0);
  keep[0] = keep[far] = 1;
  rdp_open(wrapped, 0, far, epsilon, &keep);
  rdp_open(wrapped, far, wrapped.size() - 1, epsilon, &keep);

  std::vector<ImagePoint> out;
  for (size_t i = 0; i + 1 < wrapped.size(); ++i)
    if (keep[i]) out.push_back(wrapped[i]);
  return out;
}

std::vector<std::vector<ImagePoint>> extract_segment_polygons(
    const SegmentLabelMap& segments, double epsilon) {
  std::vector<std::vector<ImagePoint>> polygons;
  polygons.reserve(segments.segment_count);
  for (int s = 0; s < segments.segment_count; ++s)
    polygons.push_back(simplify_polygon(trace_boundary(segments, s), epsilon));
  return polygons;
}

}  // namespace depthstitch
