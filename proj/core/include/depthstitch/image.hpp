#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "depthstitch/error.hpp"

namespace depthstitch {

// Interleaved row-major image, `channels` samples per pixel.
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, int c, T fill = T{})
      : width(w), height(h), channels(c),
        data(static_cast<size_t>(w) * h * c, fill) {
    if (w < 0 || h < 0 || c < 1)
      throw StitchError(ErrorKind::InvalidParam, "bad image dimensions");
  }

  bool empty() const { return width == 0 || height == 0; }
  size_t pixel_count() const { return static_cast<size_t>(width) * height; }

  T* pixel(int x, int y) {
    return data.data() + (static_cast<size_t>(y) * width + x) * channels;
  }
  const T* pixel(int x, int y) const {
    return data.data() + (static_cast<size_t>(y) * width + x) * channels;
  }

  T& at(int x, int y, int c = 0) { return pixel(x, y)[c]; }
  const T& at(int x, int y, int c = 0) const { return pixel(x, y)[c]; }

  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width && y < height;
  }
};

using ImageU8 = Image<uint8_t>;
using ImageU16 = Image<uint16_t>;
using ImageF = Image<float>;

// Per-pixel inverse depth (1/z) with a validity mask. Inverse depth is the
// working representation everywhere in the library; metric depth exists only
// at the file boundary.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> inv_depth;
  std::vector<uint8_t> valid;

  DepthMap() = default;
  DepthMap(int w, int h)
      : width(w), height(h),
        inv_depth(static_cast<size_t>(w) * h, 0.0),
        valid(static_cast<size_t>(w) * h, 0) {
    if (w <= 0 || h <= 0)
      throw StitchError(ErrorKind::InvalidParam, "bad depth map dimensions");
  }

  size_t index(int x, int y) const { return static_cast<size_t>(y) * width + x; }
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width && y < height;
  }
  double w(int x, int y) const { return inv_depth[index(x, y)]; }
  bool is_valid(int x, int y) const { return valid[index(x, y)] != 0; }

  void set(int x, int y, double w_value) {
    inv_depth[index(x, y)] = w_value;
    valid[index(x, y)] = 1;
  }
  void set_invalid(int x, int y) {
    inv_depth[index(x, y)] = 0.0;
    valid[index(x, y)] = 0;
  }
};

inline ImageF to_float(const ImageU8& in) {
  ImageF out(in.width, in.height, in.channels);
  for (size_t i = 0; i < in.data.size(); ++i)
    out.data[i] = static_cast<float>(in.data[i]);
  return out;
}

// Round-to-nearest with clamping; ties away from zero as per std::lround.
inline ImageU8 to_u8(const ImageF& in) {
  ImageU8 out(in.width, in.height, in.channels);
  for (size_t i = 0; i < in.data.size(); ++i) {
    const float v = in.data[i];
    const long q = std::lround(v);
    out.data[i] = static_cast<uint8_t>(q < 0 ? 0 : (q > 255 ? 255 : q));
  }
  return out;
}

// Rec.601 luma; metric code evaluates structural similarity on this plane.
inline ImageF luma(const ImageF& in) {
  if (in.channels == 1) return in;
  if (in.channels < 3)
    throw StitchError(ErrorKind::InvalidParam, "luma needs 1 or >=3 channels");
  ImageF out(in.width, in.height, 1);
  for (size_t p = 0; p < in.pixel_count(); ++p) {
    const float* px = in.data.data() + p * in.channels;
    out.data[p] = 0.299f * px[0] + 0.587f * px[1] + 0.114f * px[2];
  }
  return out;
}

}  // namespace depthstitch
