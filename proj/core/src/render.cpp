#include "depthstitch/render.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace depthstitch {

std::optional<std::array<ImagePoint, 3>> warp_triangle_corners(
    const EpipolarModel& model, const TriangleMesh& mesh,
    const LocalWarpSet& warps, int triangle_index) {
  const auto& tri = mesh.triangles[triangle_index];
  const TriangleWarp& warp = warps.triangles[triangle_index];
  std::array<ImagePoint, 3> out;
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector3d v =
        model.h_inf * homogeneous(mesh.vertices[tri[k]].position) +
        warp.vertex_inv_depth[k] * model.epipole;
    if (!(v(2) > 1e-12) || !v.allFinite()) return std::nullopt;
    out[k] = ImagePoint(v(0) / v(2), v(1) / v(2));
  }
  return out;
}

CanvasSpec compute_canvas(const EpipolarModel& model, const TriangleMesh& mesh,
                          const LocalWarpSet& warps, int ref_width,
                          int ref_height) {
  if (ref_width <= 0 || ref_height <= 0)
    throw StitchError(ErrorKind::InvalidParam, "empty reference frame");
  double min_x = 0.0, min_y = 0.0;
  double max_x = ref_width - 1.0, max_y = ref_height - 1.0;
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    const auto corners = warp_triangle_corners(model, mesh, warps, t);
    if (!corners) continue;
    for (const ImagePoint& c : *corners) {
      min_x = std::min(min_x, c.x());
      min_y = std::min(min_y, c.y());
      max_x = std::max(max_x, c.x());
      max_y = std::max(max_y, c.y());
    }
  }
  CanvasSpec spec;
  spec.origin_x = static_cast<int>(std::floor(min_x));
  spec.origin_y = static_cast<int>(std::floor(min_y));
  spec.width = static_cast<int>(std::ceil(max_x)) - spec.origin_x + 1;
  spec.height = static_cast<int>(std::ceil(max_y)) - spec.origin_y + 1;
  const double area = static_cast<double>(spec.width) * spec.height;
  const double budget = 8.0 * ref_width * ref_height;
  if (area > budget) {
    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "canvas %dx%d exceeds 8x the reference area (%dx%d)",
                  spec.width, spec.height, ref_width, ref_height);
    throw StitchError(ErrorKind::CanvasOverflow, msg);
  }
  return spec;
}

void bilinear_sample(const ImageU8& image, double x, double y, double* out) {
  const double cx = std::clamp(x, 0.0, static_cast<double>(image.width - 1));
  const double cy = std::clamp(y, 0.0, static_cast<double>(image.height - 1));
  const int x0 =
      std::clamp(static_cast<int>(cx), 0, std::max(0, image.width - 2));
  const int y0 =
      std::clamp(static_cast<int>(cy), 0, std::max(0, image.height - 2));
  const int x1 = std::min(x0 + 1, image.width - 1);
  const int y1 = std::min(y0 + 1, image.height - 1);
  const double fx = cx - x0;
  const double fy = cy - y0;
  for (int c = 0; c < image.channels; ++c) {
    const double v00 = image.at(x0, y0, c);
    const double v10 = image.at(x1, y0, c);
    const double v01 = image.at(x0, y1, c);
    const double v11 = image.at(x1, y1, c);
    out[c] = (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) +
             fy * ((1.0 - fx) * v01 + fx * v11);
  }
}

namespace {

// Shared-edge pixels must be drawn by exactly one of the two adjacent
// triangles. With the triangle oriented to positive signed area, a boundary
// pixel (edge value 0) belongs to the triangle whose edge direction satisfies
// this predicate; the neighbour traverses the same edge reversed, so exactly
// one side claims it.
bool owns_zero_edge(double dx, double dy) {
  return dy > 0.0 || (dy == 0.0 && dx > 0.0);
}

}  // namespace

WarpRender render_warped(const EpipolarModel& model, const TriangleMesh& mesh,
                         const LocalWarpSet& warps, const ImageU8& target,
                         const CanvasSpec& canvas) {
  if (canvas.width <= 0 || canvas.height <= 0)
    throw StitchError(ErrorKind::InvalidParam, "empty canvas");
  WarpRender out;
  out.color = ImageF(canvas.width, canvas.height, target.channels);
  out.z.assign(static_cast<size_t>(canvas.width) * canvas.height,
               std::numeric_limits<double>::infinity());
  out.triangle.assign(out.z.size(), -1);
  out.covered.assign(out.z.size(), 0);

  std::vector<double> sample(target.channels);
  for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
    const auto warped = warp_triangle_corners(model, mesh, warps, t);
    if (!warped) continue;
    std::array<ImagePoint, 3> c = *warped;
    const double area2 = (c[1] - c[0]).x() * (c[2] - c[0]).y() -
                         (c[1] - c[0]).y() * (c[2] - c[0]).x();
    if (area2 == 0.0 || !std::isfinite(area2)) continue;
    if (area2 < 0.0) std::swap(c[1], c[2]);

    const Eigen::Matrix3d h_inv =
        warps.triangles[t].h.partialPivLu().inverse();
    const PlaneParam& plane = warps.triangles[t].plane;

    const double min_x = std::min({c[0].x(), c[1].x(), c[2].x()});
    const double max_x = std::max({c[0].x(), c[1].x(), c[2].x()});
    const double min_y = std::min({c[0].y(), c[1].y(), c[2].y()});
    const double max_y = std::max({c[0].y(), c[1].y(), c[2].y()});
    const int i0 = std::max(0, static_cast<int>(std::ceil(
                                   min_x - canvas.origin_x)));
    const int i1 = std::min(canvas.width - 1, static_cast<int>(std::floor(
                                                  max_x - canvas.origin_x)));
    const int j0 = std::max(0, static_cast<int>(std::ceil(
                                   min_y - canvas.origin_y)));
    const int j1 = std::min(canvas.height - 1, static_cast<int>(std::floor(
                                                   max_y - canvas.origin_y)));
    if (i0 > i1 || j0 > j1) continue;

    struct Edge {
      double a, b, c;  // E(x, y) = a x + b y + c
      bool own_zero;
    };
    std::array<Edge, 3> edges;
    for (int k = 0; k < 3; ++k) {
      const ImagePoint& u = c[k];
      const ImagePoint& v = c[(k + 1) % 3];
      const double dx = v.x() - u.x();
      const double dy = v.y() - u.y();
      edges[k] = {-dy, dx, dy * u.x() - dx * u.y(), owns_zero_edge(dx, dy)};
    }

    for (int j = j0; j <= j1; ++j) {
      const double py = canvas.origin_y + j;
      for (int i = i0; i <= i1; ++i) {
        const double px = canvas.origin_x + i;
        bool inside = true;
        for (const Edge& e : edges) {
          const double val = e.a * px + e.b * py + e.c;
          if (val < 0.0 || (val == 0.0 && !e.own_zero)) {
            inside = false;
            break;
          }
        }
        if (!inside) continue;

        const Eigen::Vector3d back = h_inv * Eigen::Vector3d(px, py, 1.0);
        if (!(back(2) > 1e-12)) continue;
        const double bx = back(0) / back(2);
        const double by = back(1) / back(2);
        const double w = plane.dot(Eigen::Vector3d(bx, by, 1.0));
        if (!(w > 0.0)) continue;
        const double z = 1.0 / w;
        const size_t idx = static_cast<size_t>(j) * canvas.width + i;
        if (!(z < out.z[idx])) continue;

        bilinear_sample(target, bx, by, sample.data());
        for (int ch = 0; ch < target.channels; ++ch)
          out.color.at(i, j, ch) = static_cast<float>(sample[ch]);
        out.z[idx] = z;
        out.triangle[idx] = t;
        out.covered[idx] = 1;
      }
    }
  }
  return out;
}

}  // namespace depthstitch
