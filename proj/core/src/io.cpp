#include "depthstitch/io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace depthstitch {

namespace {

[[noreturn]] void fail_io(const std::string& path, const char* what) {
  throw StitchError(ErrorKind::IoError, path + ": " + what);
}

struct FileCloser {
  FILE* f = nullptr;
  ~FileCloser() {
    if (f) std::fclose(f);
  }
};

bool host_is_little_endian() {
  const uint16_t probe = 1;
  return *reinterpret_cast<const uint8_t*>(&probe) == 1;
}

}  // namespace

ImageU8 read_png(const std::string& path) {
  FileCloser file{std::fopen(path.c_str(), "rb")};
  if (!file.f) fail_io(path, "cannot open for reading");

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail_io(path, "libpng initialization failed");
  }

  ImageU8 image;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw StitchError(ErrorKind::ParseError, path + ": malformed PNG");
  }

  png_init_io(png, file.f);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
      png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  if (png_get_channels(png, info) != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw StitchError(ErrorKind::ParseError,
                      path + ": could not normalize to RGB");
  }
  image = ImageU8(width, height, 3);
  rows.resize(height);
  for (int y = 0; y < height; ++y)
    rows[y] = image.data.data() + static_cast<size_t>(y) * width * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

ImageU16 read_png16(const std::string& path) {
  FileCloser file{std::fopen(path.c_str(), "rb")};
  if (!file.f) fail_io(path, "cannot open for reading");

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail_io(path, "libpng initialization failed");
  }

  ImageU16 image;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw StitchError(ErrorKind::ParseError, path + ": malformed PNG");
  }

  png_init_io(png, file.f);
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) != 16 ||
      (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_GRAY_ALPHA)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw StitchError(ErrorKind::ParseError,
                      path + ": depth PNG must be 16-bit grayscale");
  }
  if (color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_strip_alpha(png);
  // PNG stores 16-bit samples big-endian.
  if (host_is_little_endian()) png_set_swap(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  image = ImageU16(width, height, 1);
  rows.resize(height);
  for (int y = 0; y < height; ++y)
    rows[y] = reinterpret_cast<png_bytep>(image.data.data() +
                                          static_cast<size_t>(y) * width);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

namespace {

void write_png_rows(const std::string& path, int width, int height,
                    int color_type, int bit_depth,
                    const std::vector<png_bytep>& rows) {
  FileCloser file{std::fopen(path.c_str(), "wb")};
  if (!file.f) fail_io(path, "cannot open for writing");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail_io(path, "libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail_io(path, "PNG write failed");
  }
  png_init_io(png, file.f);
  png_set_IHDR(png, info, width, height, bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_png(const std::string& path, const ImageU8& image) {
  if (image.channels != 3)
    throw StitchError(ErrorKind::InvalidParam, "write_png expects RGB");
  std::vector<png_bytep> rows(image.height);
  for (int y = 0; y < image.height; ++y)
    rows[y] = const_cast<png_bytep>(image.data.data() +
                                    static_cast<size_t>(y) * image.width * 3);
  write_png_rows(path, image.width, image.height, PNG_COLOR_TYPE_RGB, 8, rows);
}

void write_png16(const std::string& path, const ImageU16& image) {
  if (image.channels != 1)
    throw StitchError(ErrorKind::InvalidParam,
                      "write_png16 expects a single channel");
  // PNG stores 16-bit samples big-endian; assemble bytes explicitly.
  std::vector<uint8_t> bytes(image.data.size() * 2);
  for (size_t i = 0; i < image.data.size(); ++i) {
    bytes[2 * i] = static_cast<uint8_t>(image.data[i] >> 8);
    bytes[2 * i + 1] = static_cast<uint8_t>(image.data[i] & 0xff);
  }
  std::vector<png_bytep> rows(image.height);
  for (int y = 0; y < image.height; ++y)
    rows[y] = bytes.data() + static_cast<size_t>(y) * image.width * 2;
  write_png_rows(path, image.width, image.height, PNG_COLOR_TYPE_GRAY, 16,
                 rows);
}

void write_mask_png(const std::string& path, const std::vector<uint8_t>& mask,
                    int width, int height) {
  if (static_cast<size_t>(width) * height != mask.size())
    throw StitchError(ErrorKind::DimensionMismatch,
                      "mask size does not match its dimensions");
  std::vector<uint8_t> bytes(mask.size());
  for (size_t i = 0; i < mask.size(); ++i) bytes[i] = mask[i] ? 255 : 0;
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y)
    rows[y] = bytes.data() + static_cast<size_t>(y) * width;
  write_png_rows(path, width, height, PNG_COLOR_TYPE_GRAY, 8, rows);
}

ImageF read_pfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io(path, "cannot open for reading");
  std::string magic;
  int width = 0, height = 0;
  double scale = 0.0;
  in >> magic >> width >> height >> scale;
  if (!in || magic != "Pf" || width <= 0 || height <= 0 || scale == 0.0)
    throw StitchError(ErrorKind::ParseError,
                      path + ": not a single-channel PFM");
  in.get();  // single whitespace byte terminating the header

  ImageF image(width, height, 1);
  const size_t row_bytes = static_cast<size_t>(width) * sizeof(float);
  std::vector<char> row(row_bytes);
  const bool file_little = scale < 0.0;
  const bool swap = file_little != host_is_little_endian();
  for (int y = height - 1; y >= 0; --y) {  // stored bottom-up
    in.read(row.data(), static_cast<std::streamsize>(row_bytes));
    if (!in)
      throw StitchError(ErrorKind::ParseError, path + ": truncated PFM data");
    if (swap)
      for (int x = 0; x < width; ++x) {
        std::swap(row[4 * x], row[4 * x + 3]);
        std::swap(row[4 * x + 1], row[4 * x + 2]);
      }
    std::memcpy(image.data.data() + static_cast<size_t>(y) * width, row.data(),
                row_bytes);
  }
  return image;
}

void write_pfm(const std::string& path, const ImageF& image) {
  if (image.channels != 1)
    throw StitchError(ErrorKind::InvalidParam,
                      "write_pfm expects a single channel");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail_io(path, "cannot open for writing");
  const double scale = host_is_little_endian() ? -1.0 : 1.0;
  out << "Pf\n" << image.width << " " << image.height << "\n" << scale << "\n";
  const size_t row_bytes = static_cast<size_t>(image.width) * sizeof(float);
  for (int y = image.height - 1; y >= 0; --y)
    out.write(reinterpret_cast<const char*>(image.data.data() +
                                            static_cast<size_t>(y) *
                                                image.width),
              static_cast<std::streamsize>(row_bytes));
  if (!out) fail_io(path, "short write");
}

DepthMap depth_from_metric(const ImageF& z) {
  if (z.channels != 1)
    throw StitchError(ErrorKind::InvalidParam,
                      "metric depth must be single channel");
  DepthMap depth(z.width, z.height);
  for (int y = 0; y < z.height; ++y)
    for (int x = 0; x < z.width; ++x) {
      const float v = z.at(x, y, 0);
      if (std::isfinite(v) && v > 0.0f)
        depth.set(x, y, 1.0 / static_cast<double>(v));
      else
        depth.set_invalid(x, y);
    }
  return depth;
}

DepthMap depth_from_quantized(const ImageU16& raw, double depth_unit) {
  if (raw.channels != 1)
    throw StitchError(ErrorKind::InvalidParam,
                      "quantized depth must be single channel");
  if (!std::isfinite(depth_unit) || depth_unit <= 0.0)
    throw StitchError(ErrorKind::InvalidParam,
                      "depth_unit must be positive and finite");
  DepthMap depth(raw.width, raw.height);
  for (int y = 0; y < raw.height; ++y)
    for (int x = 0; x < raw.width; ++x) {
      const uint16_t v = raw.at(x, y, 0);
      if (v == 0)
        depth.set_invalid(x, y);
      else
        depth.set(x, y, 1.0 / (static_cast<double>(v) * depth_unit));
    }
  return depth;
}

ImageF depth_to_metric(const DepthMap& depth) {
  ImageF z(depth.width, depth.height, 1);
  for (int y = 0; y < depth.height; ++y)
    for (int x = 0; x < depth.width; ++x) {
      const double w = depth.w(x, y);
      z.at(x, y, 0) = (depth.is_valid(x, y) && w > 0.0)
                          ? static_cast<float>(1.0 / w)
                          : 0.0f;
    }
  return z;
}

MatchLoad load_matches_jsonl(const std::string& path, const DepthMap& depth) {
  std::ifstream in(path);
  if (!in) fail_io(path, "cannot open for reading");
  MatchLoad out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw StitchError(ErrorKind::ParseError,
                        path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("px") || !obj.contains("py") ||
        !obj.contains("qx") || !obj.contains("qy"))
      throw StitchError(ErrorKind::ParseError,
                        path + ":" + std::to_string(line_no) +
                            ": expected keys px, py, qx, qy");
    MatchRecord rec;
    try {
      rec.p = ImagePoint(obj.at("px").get<double>(), obj.at("py").get<double>());
      rec.q = ImagePoint(obj.at("qx").get<double>(), obj.at("qy").get<double>());
    } catch (const nlohmann::json::exception& e) {
      throw StitchError(ErrorKind::ParseError,
                        path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!rec.p.allFinite() || !rec.q.allFinite())
      throw StitchError(ErrorKind::ParseError,
                        path + ":" + std::to_string(line_no) +
                            ": coordinates must be finite");
    const long nx = std::lround(rec.p.x());
    const long ny = std::lround(rec.p.y());
    if (nx < 0 || nx >= depth.width || ny < 0 || ny >= depth.height ||
        !depth.is_valid(static_cast<int>(nx), static_cast<int>(ny))) {
      ++out.dropped;
      continue;
    }
    rec.inv_depth = depth.w(static_cast<int>(nx), static_cast<int>(ny));
    out.records.push_back(rec);
  }
  return out;
}

void write_matches_jsonl(const std::string& path,
                         const std::vector<MatchRecord>& records) {
  std::ofstream out(path);
  if (!out) fail_io(path, "cannot open for writing");
  char line[256];
  for (const MatchRecord& rec : records) {
    std::snprintf(line, sizeof(line),
                  "{\"px\":%.17g,\"py\":%.17g,\"qx\":%.17g,\"qy\":%.17g}\n",
                  rec.p.x(), rec.p.y(), rec.q.x(), rec.q.y());
    out << line;
  }
  if (!out) fail_io(path, "short write");
}

}  // namespace depthstitch
