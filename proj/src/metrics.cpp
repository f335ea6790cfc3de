#include "depthfill/metrics.hpp"

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "depthfill/error.hpp"

namespace depthfill::metrics {
namespace {

void require_same_size(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw InvalidArgument("metric inputs differ in size: " + std::to_string(a.width()) + "x" +
                          std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                          std::to_string(b.height()));
  }
}

double psnr_from_mse(double mse) { return mse == 0.0 ? kPsnrCap : 10.0 * std::log10(255.0 * 255.0 / mse); }

template <typename InRegion>
double psnr_impl(const Image& reference, const Image& test, InRegion&& in_region) {
  require_same_size(reference, test);
  const LumaImage a = rgb_to_luma(reference);
  const LumaImage b = rgb_to_luma(test);
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < a.height; ++y) {
    for (int x = 0; x < a.width; ++x) {
      if (!in_region(x, y)) continue;
      const double d = a.at(x, y) - b.at(x, y);
      sum += d * d;
      ++count;
    }
  }
  if (count == 0) throw InvalidArgument("PSNR region is empty");
  return psnr_from_mse(sum / static_cast<double>(count));
}

std::array<double, kSsimWindow> gaussian_kernel() {
  std::array<double, kSsimWindow> k{};
  double total = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    k[i] = std::exp(-(d * d) / (2.0 * kSsimSigma * kSsimSigma));
    total += k[i];
  }
  for (auto& v : k) v /= total;
  return k;
}

// Separable "valid" filtering: output is (w - 10) x (h - 10).
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h) {
  static const auto kernel = gaussian_kernel();
  const int ow = w - kSsimWindow + 1;
  const int oh = h - kSsimWindow + 1;
  std::vector<double> horiz(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += kernel[k] * src[static_cast<std::size_t>(y) * w + x + k];
      horiz[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) acc += kernel[k] * horiz[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

template <typename InRegion>
double ssim_impl(const Image& reference, const Image& test, InRegion&& in_region) {
  require_same_size(reference, test);
  const int w = reference.width();
  const int h = reference.height();
  if (w < kSsimWindow || h < kSsimWindow) {
    throw InvalidArgument("SSIM needs at least an " + std::to_string(kSsimWindow) + "x" +
                          std::to_string(kSsimWindow) + " image");
  }
  const LumaImage a = rgb_to_luma(reference);
  const LumaImage b = rgb_to_luma(test);
  const std::size_t n = a.values.size();
  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = a.values[i] * a.values[i];
    bb[i] = b.values[i] * b.values[i];
    ab[i] = a.values[i] * b.values[i];
  }
  const auto mu_a = filter_valid(a.values, w, h);
  const auto mu_b = filter_valid(b.values, w, h);
  const auto e_aa = filter_valid(aa, w, h);
  const auto e_bb = filter_valid(bb, w, h);
  const auto e_ab = filter_valid(ab, w, h);

  const double c1 = (kSsimK1 * 255.0) * (kSsimK1 * 255.0);
  const double c2 = (kSsimK2 * 255.0) * (kSsimK2 * 255.0);
  const int ow = w - kSsimWindow + 1;
  const int oh = h - kSsimWindow + 1;
  const int half = kSsimWindow / 2;
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      if (!in_region(x + half, y + half)) continue;
      const std::size_t i = static_cast<std::size_t>(y) * ow + x;
      const double var_a = e_aa[i] - mu_a[i] * mu_a[i];
      const double var_b = e_bb[i] - mu_b[i] * mu_b[i];
      const double cov = e_ab[i] - mu_a[i] * mu_b[i];
      sum += ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
             ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (var_a + var_b + c2));
      ++count;
    }
  }
  if (count == 0) throw InvalidArgument("SSIM region contains no complete window");
  return sum / static_cast<double>(count);
}

}  // namespace

double psnr_y(const Image& reference, const Image& test) {
  return psnr_impl(reference, test, [](int, int) { return true; });
}

double psnr_y(const Image& reference, const Image& test, const HoleMask& region) {
  if (region.width() != reference.width() || region.height() != reference.height()) {
    throw InvalidArgument("PSNR region mask differs in size from the images");
  }
  return psnr_impl(reference, test, [&](int x, int y) { return region.hole(x, y); });
}

double ssim(const Image& reference, const Image& test) {
  return ssim_impl(reference, test, [](int, int) { return true; });
}

double ssim(const Image& reference, const Image& test, const HoleMask& region) {
  if (region.width() != reference.width() || region.height() != reference.height()) {
    throw InvalidArgument("SSIM region mask differs in size from the images");
  }
  return ssim_impl(reference, test, [&](int x, int y) { return region.hole(x, y); });
}

QualityReport evaluate(const Image& reference, const Image& test, const HoleMask& holes) {
  QualityReport report;
  report.psnr_y_full = psnr_y(reference, test);
  report.ssim_full = ssim(reference, test);
  report.hole_pixel_count = holes.hole_count();
  if (report.hole_pixel_count > 0) {
    report.psnr_y_holes = psnr_y(reference, test, holes);
    try {
      report.ssim_holes = ssim(reference, test, holes);
    } catch (const InvalidArgument&) {
      report.ssim_holes.reset();
    }
  }
  return report;
}

}  // namespace depthfill::metrics
