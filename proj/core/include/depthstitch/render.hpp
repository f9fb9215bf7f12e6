#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "depthstitch/error.hpp"
#include "depthstitch/geometry.hpp"
#include "depthstitch/image.hpp"
#include "depthstitch/mesh.hpp"
#include "depthstitch/rectify.hpp"

namespace depthstitch {

// Integer-anchored canvas in reference-image coordinates: canvas pixel (i, j)
// has its center at (origin_x + i, origin_y + j).
struct CanvasSpec {
  int origin_x = 0;
  int origin_y = 0;
  int width = 0;
  int height = 0;
};

// Triangle corners pushed through the warp. All three corners of a triangle
// and the shared corners of its neighbours go through the identical
// depth-transfer expression, so triangles that agree on a vertex depth meet
// bit-exactly on the canvas. Returns nullopt when a corner maps behind the
// camera.
std::optional<std::array<ImagePoint, 3>> warp_triangle_corners(
    const EpipolarModel& model, const TriangleMesh& mesh,
    const LocalWarpSet& warps, int triangle_index);

// Bounding canvas of the reference frame united with every warped triangle.
// Throws CanvasOverflow when the result exceeds eight times the reference
// area (a runaway warp, not a stitchable pair).
CanvasSpec compute_canvas(const EpipolarModel& model, const TriangleMesh& mesh,
                          const LocalWarpSet& warps, int ref_width,
                          int ref_height);

struct WarpRender {
  ImageF color;                    // warped target colors, canvas-sized
  std::vector<double> z;           // committed depth per pixel (1 / w)
  std::vector<int32_t> triangle;   // committing triangle index, -1 if none
  std::vector<uint8_t> covered;    // 1 where any triangle committed
};

// Clamped bilinear sample; writes image.channels values to `out`.
void bilinear_sample(const ImageU8& image, double x, double y, double* out);

// Rasterizes every warped triangle onto the canvas with a top-left fill rule
// and a strict-less z-buffer on z = 1/w, backward-mapping each covered pixel
// through the triangle homography to sample the target image bilinearly.
WarpRender render_warped(const EpipolarModel& model, const TriangleMesh& mesh,
                         const LocalWarpSet& warps, const ImageU8& target,
                         const CanvasSpec& canvas);

}  // namespace depthstitch
