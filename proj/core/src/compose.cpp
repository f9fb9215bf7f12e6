#include "depthstitch/compose.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace depthstitch {

std::vector<ImagePoint> convex_hull(std::vector<ImagePoint> points) {
  std::sort(points.begin(), points.end(),
            [](const ImagePoint& a, const ImagePoint& b) {
              return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
            });
  points.erase(std::unique(points.begin(), points.end(),
                           [](const ImagePoint& a, const ImagePoint& b) {
                             return a.x() == b.x() && a.y() == b.y();
                           }),
               points.end());
  const int n = static_cast<int>(points.size());
  if (n < 3) return points;
  auto cross = [](const ImagePoint& o, const ImagePoint& a,
                  const ImagePoint& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) -
           (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<ImagePoint> hull(2 * n);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], points[i]) <= 0.0) --k;
    hull[k++] = points[i];
  }
  const int lower = k + 1;
  for (int i = n - 2; i >= 0; --i) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], points[i]) <= 0.0)
      --k;
    hull[k++] = points[i];
  }
  hull.resize(k - 1);
  return hull;
}

namespace {

// Inclusive pixel span of a convex polygon on scanline y, or false when the
// polygon misses the row entirely.
bool hull_row_span(const std::vector<ImagePoint>& hull, double y, int* x_lo,
                   int* x_hi) {
  if (hull.empty()) return false;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  const int n = static_cast<int>(hull.size());
  if (n == 1) {
    if (hull[0].y() != y) return false;
    lo = hi = hull[0].x();
  }
  for (int i = 0; i < n && n >= 2; ++i) {
    const ImagePoint& a = hull[i];
    const ImagePoint& b = hull[(i + 1) % n];
    if (a.y() == y && b.y() == y) {
      lo = std::min({lo, a.x(), b.x()});
      hi = std::max({hi, a.x(), b.x()});
    } else if ((a.y() - y) * (b.y() - y) <= 0.0 && a.y() != b.y()) {
      const double x = a.x() + (y - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  if (lo > hi) return false;
  *x_lo = static_cast<int>(std::ceil(lo - 1e-9));
  *x_hi = static_cast<int>(std::floor(hi + 1e-9));
  return *x_lo <= *x_hi;
}

}  // namespace

int inpaint_holes(ImageF& color, const std::vector<uint8_t>& known,
                  const std::vector<uint8_t>& hole, int max_sweeps,
                  double tolerance) {
  const int w = color.width, h = color.height, ch = color.channels;
  if (ch < 1 || ch > 4)
    throw StitchError(ErrorKind::InvalidParam,
                      "inpainting supports 1 to 4 channels");
  std::vector<uint8_t> set = known;
  std::deque<int> queue;
  const int dx[4] = {1, -1, 0, 0};
  const int dy[4] = {0, 0, 1, -1};
  auto idx = [&](int x, int y) { return y * w + x; };

  // Seed the wave with hole pixels that touch known data.
  std::vector<uint8_t> queued(known.size(), 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!hole[idx(x, y)]) continue;
      for (int d = 0; d < 4; ++d) {
        const int nx = x + dx[d], ny = y + dy[d];
        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
        if (known[idx(nx, ny)]) {
          queue.push_back(idx(x, y));
          queued[idx(x, y)] = 1;
          break;
        }
      }
    }

  std::vector<int> filled_order;
  while (!queue.empty()) {
    const int p = queue.front();
    queue.pop_front();
    const int x = p % w, y = p / w;
    double acc[4] = {0, 0, 0, 0};
    int cnt = 0;
    for (int d = 0; d < 4; ++d) {
      const int nx = x + dx[d], ny = y + dy[d];
      if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
      if (!set[idx(nx, ny)]) continue;
      for (int c = 0; c < ch; ++c) acc[c] += color.at(nx, ny, c);
      ++cnt;
    }
    if (cnt > 0)
      for (int c = 0; c < ch; ++c)
        color.at(x, y, c) = static_cast<float>(acc[c] / cnt);
    set[p] = 1;
    filled_order.push_back(p);
    for (int d = 0; d < 4; ++d) {
      const int nx = x + dx[d], ny = y + dy[d];
      if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
      const int q = idx(nx, ny);
      if (hole[q] && !set[q] && !queued[q]) {
        queue.push_back(q);
        queued[q] = 1;
      }
    }
  }

  // Relax the seeded estimates toward the harmonic fill.
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_delta = 0.0;
    for (int p : filled_order) {
      const int x = p % w, y = p / w;
      double acc[4] = {0, 0, 0, 0};
      int cnt = 0;
      for (int d = 0; d < 4; ++d) {
        const int nx = x + dx[d], ny = y + dy[d];
        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
        if (!set[idx(nx, ny)]) continue;
        for (int c = 0; c < ch; ++c) acc[c] += color.at(nx, ny, c);
        ++cnt;
      }
      if (cnt == 0) continue;
      for (int c = 0; c < ch; ++c) {
        const double next = acc[c] / cnt;
        max_delta = std::max(
            max_delta, std::abs(next - static_cast<double>(color.at(x, y, c))));
        color.at(x, y, c) = static_cast<float>(next);
      }
    }
    if (max_delta < tolerance) break;
  }

  int unreached = 0;
  for (size_t p = 0; p < hole.size(); ++p)
    if (hole[p] && !set[p]) ++unreached;
  return unreached;
}

ComposeResult compose_mosaic(const WarpRender& warped,
                             const ImageU8& reference,
                             const CanvasSpec& canvas,
                             const ComposeParams& params) {
  const int w = canvas.width, h = canvas.height;
  if (warped.color.width != w || warped.color.height != h)
    throw StitchError(ErrorKind::CanvasMismatch,
                      "warped render does not match the canvas");
  if (warped.color.channels != reference.channels)
    throw StitchError(ErrorKind::CanvasMismatch,
                      "channel count differs between warped and reference");
  const int ch = reference.channels;
  const size_t count = static_cast<size_t>(w) * h;

  ComposeResult out;
  out.warped_mask = warped.covered;
  out.reference_mask.assign(count, 0);
  out.overlap_mask.assign(count, 0);
  out.hole_mask.assign(count, 0);

  ImageF blended(w, h, ch);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const size_t p = static_cast<size_t>(y) * w + x;
      const int rx = x + canvas.origin_x;
      const int ry = y + canvas.origin_y;
      const bool has_ref = rx >= 0 && rx < reference.width && ry >= 0 &&
                           ry < reference.height;
      const bool has_warp = warped.covered[p] != 0;
      out.reference_mask[p] = has_ref ? 1 : 0;
      out.overlap_mask[p] = (has_ref && has_warp) ? 1 : 0;
      for (int c = 0; c < ch; ++c) {
        const double wv = has_warp ? warped.color.at(x, y, c) : 0.0;
        const double rv = has_ref ? reference.at(rx, ry, c) : 0.0;
        double v = 0.0;
        if (has_ref && has_warp)
          v = 0.5 * (wv + rv);
        else if (has_warp)
          v = wv;
        else if (has_ref)
          v = rv;
        blended.at(x, y, c) = static_cast<float>(v);
      }
    }

  // Gaps inside the hull of everything covered are stitching holes; outside
  // the hull is legitimate background.
  std::vector<ImagePoint> covered_extremes;
  for (int y = 0; y < h; ++y) {
    int lo = -1, hi = -1;
    for (int x = 0; x < w; ++x) {
      const size_t p = static_cast<size_t>(y) * w + x;
      if (out.warped_mask[p] || out.reference_mask[p]) {
        if (lo < 0) lo = x;
        hi = x;
      }
    }
    if (lo >= 0) {
      covered_extremes.push_back(ImagePoint(lo, y));
      if (hi != lo) covered_extremes.push_back(ImagePoint(hi, y));
    }
  }
  const std::vector<ImagePoint> hull = convex_hull(std::move(covered_extremes));
  std::vector<uint8_t> known(count, 0);
  for (size_t p = 0; p < count; ++p)
    known[p] = (out.warped_mask[p] || out.reference_mask[p]) ? 1 : 0;
  for (int y = 0; y < h; ++y) {
    int x_lo = 0, x_hi = -1;
    if (!hull_row_span(hull, y, &x_lo, &x_hi)) continue;
    x_lo = std::max(0, x_lo);
    x_hi = std::min(w - 1, x_hi);
    for (int x = x_lo; x <= x_hi; ++x) {
      const size_t p = static_cast<size_t>(y) * w + x;
      if (!known[p]) {
        out.hole_mask[p] = 1;
        ++out.hole_count_before;
      }
    }
  }

  out.hole_count_after = out.hole_count_before;
  if (params.inpaint && out.hole_count_before > 0)
    out.hole_count_after = inpaint_holes(blended, known, out.hole_mask,
                                         params.max_sweeps, params.tolerance);

  out.mosaic = to_u8(blended);
  return out;
}

}  // namespace depthstitch
