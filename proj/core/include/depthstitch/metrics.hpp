#pragma once

#include <cstdint>
#include <vector>

#include "depthstitch/error.hpp"
#include "depthstitch/image.hpp"

namespace depthstitch {

// Peak signal-to-noise ratio in dB over the masked pixels (every pixel when
// `mask` is null), averaging squared error across channels. Identical inputs
// return +infinity.
double psnr(const ImageU8& a, const ImageU8& b,
            const std::vector<uint8_t>* mask = nullptr);

// Multi-scale structural similarity on luma. The scale count adapts to the
// masked bounding box (a full 11x11 window must fit), the validity mask is
// eroded to full window support at every scale and AND-downsampled between
// scales, and per-scale weights are renormalized over the scales kept.
// Returns a value in [0, 1]; negative per-scale terms clamp to 0.
double ms_ssim(const ImageU8& a, const ImageU8& b,
               const std::vector<uint8_t>* mask = nullptr);

}  // namespace depthstitch
