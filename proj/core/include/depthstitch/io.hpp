#pragma once

#include <string>
#include <vector>

#include "depthstitch/error.hpp"
#include "depthstitch/geometry.hpp"
#include "depthstitch/image.hpp"

namespace depthstitch {

// 8-bit RGB PNG. Grayscale, palette and alpha inputs are expanded or
// flattened to three channels on read.
ImageU8 read_png(const std::string& path);
void write_png(const std::string& path, const ImageU8& image);

// 16-bit single-channel PNG, the common storage for quantized depth maps.
// Anything but 16-bit grayscale (alpha is stripped) is a ParseError.
ImageU16 read_png16(const std::string& path);
void write_png16(const std::string& path, const ImageU16& image);

// Binary mask as an 8-bit grayscale PNG (0 or 255).
void write_mask_png(const std::string& path, const std::vector<uint8_t>& mask,
                    int width, int height);

// Single-channel PFM raster (header "Pf"); the sign of the scale field
// carries the byte order and rows are stored bottom-up.
ImageF read_pfm(const std::string& path);
void write_pfm(const std::string& path, const ImageF& image);

// Metric depth (z > 0) to inverse depth; zero, negative and non-finite
// samples become invalid pixels, and back again with 0 marking invalid.
DepthMap depth_from_metric(const ImageF& z);
ImageF depth_to_metric(const DepthMap& depth);

// Quantized depth to inverse depth: z = raw * depth_unit meters. Raw value 0
// marks an invalid pixel; depth_unit must be positive and finite.
DepthMap depth_from_quantized(const ImageU16& raw, double depth_unit);

struct MatchLoad {
  std::vector<MatchRecord> records;
  int dropped = 0;  // matches without a valid depth sample under p
};

// One JSON object per line with keys px, py, qx, qy. The inverse depth of
// each match comes from the depth map pixel nearest to p; matches landing
// outside the map or on invalid pixels are dropped and counted.
MatchLoad load_matches_jsonl(const std::string& path, const DepthMap& depth);
void write_matches_jsonl(const std::string& path,
                         const std::vector<MatchRecord>& records);

}  // namespace depthstitch
