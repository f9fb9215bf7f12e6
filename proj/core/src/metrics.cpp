#include "depthstitch/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace depthstitch {

namespace {

void check_pair(const ImageU8& a, const ImageU8& b,
                const std::vector<uint8_t>* mask) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels)
    throw StitchError(ErrorKind::DimensionMismatch,
                      "metric inputs differ in shape");
  if (mask && static_cast<int>(mask->size()) != a.width * a.height)
    throw StitchError(ErrorKind::DimensionMismatch,
                      "mask does not match the image size");
}

constexpr int kWindow = 11;
constexpr int kHalf = kWindow / 2;

std::array<double, kWindow * kWindow> gaussian_window() {
  std::array<double, kWindow * kWindow> w{};
  const double sigma = 1.5;
  double sum = 0.0;
  for (int y = 0; y < kWindow; ++y)
    for (int x = 0; x < kWindow; ++x) {
      const double dx = x - kHalf, dy = y - kHalf;
      w[y * kWindow + x] = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
      sum += w[y * kWindow + x];
    }
  for (double& v : w) v /= sum;
  return w;
}

struct Level {
  std::vector<double> a, b;
  std::vector<uint8_t> valid;
  int width = 0, height = 0;
};

// Mean luminance term and contrast-structure term averaged over window
// centers whose full 11x11 support is valid. Returns the number of such
// centers.
int ssim_terms(const Level& lv, double* mean_l, double* mean_cs) {
  static const std::array<double, kWindow * kWindow> window =
      gaussian_window();
  const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
  const double c2 = (0.03 * 255.0) * (0.03 * 255.0);

  // Integral image of invalid counts makes the support check O(1).
  const int w = lv.width, h = lv.height;
  std::vector<int> bad((w + 1) * (h + 1), 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      bad[(y + 1) * (w + 1) + (x + 1)] = bad[y * (w + 1) + (x + 1)] +
                                         bad[(y + 1) * (w + 1) + x] -
                                         bad[y * (w + 1) + x] +
                                         (lv.valid[y * w + x] ? 0 : 1);
  auto window_clean = [&](int x0, int y0) {
    const int x1 = x0 + kWindow, y1 = y0 + kWindow;
    return bad[y1 * (w + 1) + x1] - bad[y0 * (w + 1) + x1] -
               bad[y1 * (w + 1) + x0] + bad[y0 * (w + 1) + x0] ==
           0;
  };

  double sum_l = 0.0, sum_cs = 0.0;
  int count = 0;
  for (int cy = kHalf; cy < h - kHalf; ++cy)
    for (int cx = kHalf; cx < w - kHalf; ++cx) {
      if (!window_clean(cx - kHalf, cy - kHalf)) continue;
      double ma = 0, mb = 0;
      for (int dy = 0; dy < kWindow; ++dy)
        for (int dx = 0; dx < kWindow; ++dx) {
          const double g = window[dy * kWindow + dx];
          const int p = (cy - kHalf + dy) * w + (cx - kHalf + dx);
          ma += g * lv.a[p];
          mb += g * lv.b[p];
        }
      double va = 0, vb = 0, cov = 0;
      for (int dy = 0; dy < kWindow; ++dy)
        for (int dx = 0; dx < kWindow; ++dx) {
          const double g = window[dy * kWindow + dx];
          const int p = (cy - kHalf + dy) * w + (cx - kHalf + dx);
          const double da = lv.a[p] - ma, db = lv.b[p] - mb;
          va += g * da * da;
          vb += g * db * db;
          cov += g * da * db;
        }
      sum_l += (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
      sum_cs += (2 * cov + c2) / (va + vb + c2);
      ++count;
    }
  if (count == 0) return 0;
  *mean_l = sum_l / count;
  *mean_cs = sum_cs / count;
  return count;
}

Level downsample(const Level& lv) {
  Level out;
  out.width = lv.width / 2;
  out.height = lv.height / 2;
  out.a.resize(static_cast<size_t>(out.width) * out.height);
  out.b.resize(out.a.size());
  out.valid.resize(out.a.size());
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      double sa = 0, sb = 0;
      bool ok = true;
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          const int p = (2 * y + dy) * lv.width + (2 * x + dx);
          sa += lv.a[p];
          sb += lv.b[p];
          ok = ok && lv.valid[p];
        }
      const int q = y * out.width + x;
      out.a[q] = sa / 4.0;
      out.b[q] = sb / 4.0;
      out.valid[q] = ok ? 1 : 0;
    }
  return out;
}

}  // namespace

double psnr(const ImageU8& a, const ImageU8& b,
            const std::vector<uint8_t>* mask) {
  check_pair(a, b, mask);
  double sum = 0.0;
  long long count = 0;
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) {
      if (mask && !(*mask)[static_cast<size_t>(y) * a.width + x]) continue;
      for (int c = 0; c < a.channels; ++c) {
        const double d =
            static_cast<double>(a.at(x, y, c)) - static_cast<double>(b.at(x, y, c));
        sum += d * d;
      }
      count += a.channels;
    }
  if (count == 0)
    throw StitchError(ErrorKind::RegionTooSmall, "no pixels selected");
  const double mse = sum / static_cast<double>(count);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ms_ssim(const ImageU8& a, const ImageU8& b,
               const std::vector<uint8_t>* mask) {
  check_pair(a, b, mask);
  const ImageF la = luma(to_float(a));
  const ImageF lb = luma(to_float(b));

  Level lv;
  lv.width = a.width;
  lv.height = a.height;
  lv.a.assign(la.data.begin(), la.data.end());
  lv.b.assign(lb.data.begin(), lb.data.end());
  if (mask)
    lv.valid.assign(mask->begin(), mask->end());
  else
    lv.valid.assign(lv.a.size(), 1);

  // Scale count from the masked bounding box: each scale halves it, and the
  // coarsest must still admit an 11x11 window.
  int min_x = lv.width, max_x = -1, min_y = lv.height, max_y = -1;
  for (int y = 0; y < lv.height; ++y)
    for (int x = 0; x < lv.width; ++x)
      if (lv.valid[y * lv.width + x]) {
        min_x = std::min(min_x, x);
        max_x = std::max(max_x, x);
        min_y = std::min(min_y, y);
        max_y = std::max(max_y, y);
      }
  if (max_x < 0)
    throw StitchError(ErrorKind::RegionTooSmall, "validity mask is empty");
  const int extent = std::min(max_x - min_x + 1, max_y - min_y + 1);
  int scales = 1;
  if (extent >= kWindow)
    scales = std::clamp(
        static_cast<int>(std::floor(std::log2(
            static_cast<double>(extent) / kWindow))) + 1,
        1, 5);

  const std::array<double, 5> base_weights = {0.0448, 0.2856, 0.3001, 0.2363,
                                              0.1333};
  std::vector<double> l_terms, cs_terms;
  for (int s = 0; s < scales; ++s) {
    double ml = 0, mcs = 0;
    const int count = ssim_terms(lv, &ml, &mcs);
    if (count == 0) break;  // keep the scales measured so far
    l_terms.push_back(ml);
    cs_terms.push_back(mcs);
    if (s + 1 < scales) {
      if (lv.width / 2 < kWindow || lv.height / 2 < kWindow) break;
      lv = downsample(lv);
    }
  }
  if (l_terms.empty())
    throw StitchError(ErrorKind::RegionTooSmall,
                      "no full similarity window fits the masked region");

  const int kept = static_cast<int>(l_terms.size());
  double weight_sum = 0.0;
  for (int s = 0; s < kept; ++s) weight_sum += base_weights[s];
  double score = 1.0;
  for (int s = 0; s < kept; ++s) {
    const double w = base_weights[s] / weight_sum;
    const double term =
        std::max(0.0, s + 1 == kept ? l_terms[s] * cs_terms[s] : cs_terms[s]);
    score *= std::pow(term, w);
  }
  return std::clamp(score, 0.0, 1.0);
}

}  // namespace depthstitch
