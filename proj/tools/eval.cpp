#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "common.hpp"
#include "depthstitch/io.hpp"
#include "depthstitch/metrics.hpp"

int main(int argc, char** argv) {
  CLI::App app{"PSNR and MS-SSIM between two images, optionally masked"};
  std::string a_path, b_path, mask_path;
  app.add_option("--a", a_path, "First image (PNG)")->required();
  app.add_option("--b", b_path, "Second image (PNG)")->required();
  app.add_option("--mask", mask_path,
                 "Validity mask (PNG, non-black pixels count)");
  CLI11_PARSE(app, argc, argv);

  try {
    depthstitch::ImageU8 a, b;
    std::vector<uint8_t> mask;
    tool::stage("load", [&] {
      a = depthstitch::read_png(a_path);
      b = depthstitch::read_png(b_path);
      if (!mask_path.empty()) {
        const depthstitch::ImageU8 m = depthstitch::read_png(mask_path);
        if (m.width != a.width || m.height != a.height)
          throw depthstitch::StitchError(
              depthstitch::ErrorKind::DimensionMismatch,
              "mask size does not match the images");
        mask.resize(m.pixel_count());
        for (size_t p = 0; p < m.pixel_count(); ++p) {
          const uint8_t* px = m.data.data() + p * m.channels;
          mask[p] = (px[0] || px[1] || px[2]) ? 1 : 0;
        }
      }
    });
    const std::vector<uint8_t>* mask_ptr = mask.empty() ? nullptr : &mask;
    const double p = tool::stage(
        "metrics", [&] { return depthstitch::psnr(a, b, mask_ptr); });
    const double s = tool::stage(
        "metrics", [&] { return depthstitch::ms_ssim(a, b, mask_ptr); });
    std::printf("psnr=%.17g\nms_ssim=%.17g\n", p, s);
  } catch (const std::exception& e) {
    return tool::report_failure("eval", e);
  }
  return 0;
}
