#pragma once

#include <cstdint>
#include <vector>

#include "depthstitch/error.hpp"
#include "depthstitch/geometry.hpp"
#include "depthstitch/image.hpp"
#include "depthstitch/render.hpp"

namespace depthstitch {

struct ComposeParams {
  bool inpaint = true;
  int max_sweeps = 500;       // diffusion iterations cap
  double tolerance = 1e-3;    // stop when the largest per-sweep change drops
};

struct ComposeResult {
  ImageU8 mosaic;
  std::vector<uint8_t> warped_mask;
  std::vector<uint8_t> reference_mask;
  std::vector<uint8_t> overlap_mask;
  std::vector<uint8_t> hole_mask;     // uncovered pixels inside the hull
  int hole_count_before = 0;
  int hole_count_after = 0;           // holes the diffusion could not reach
};

// Upper convex hull boundary of a point set (Andrew's monotone chain,
// collinear points dropped). Returns the hull in counter-clockwise order;
// fewer than three points come back unchanged.
std::vector<ImagePoint> convex_hull(std::vector<ImagePoint> points);

// Fills `hole` pixels of a multi-channel raster by diffusion: a breadth-first
// wave from the known boundary seeds estimates, then Gauss-Seidel sweeps
// relax them. Returns the number of hole pixels no wave could reach.
int inpaint_holes(ImageF& color, const std::vector<uint8_t>& known,
                  const std::vector<uint8_t>& hole, int max_sweeps,
                  double tolerance);

// Averages the warped target with the reference on their overlap, keeps the
// single contributor elsewhere, and fills hull-interior gaps by diffusion.
ComposeResult compose_mosaic(const WarpRender& warped,
                             const ImageU8& reference,
                             const CanvasSpec& canvas,
                             const ComposeParams& params = {});

}  // namespace depthstitch
