#pragma once

#include <cstddef>
#include <optional>

#include "depthfill/imaging.hpp"

namespace depthfill::metrics {

// Reported instead of +inf when the luma MSE is exactly zero.
inline constexpr double kPsnrCap = 99.0;

// SSIM parameters (Wang et al.): 11x11 Gaussian window, sigma 1.5,
// K1 = 0.01, K2 = 0.03, dynamic range 255. Only windows fully inside the
// image are evaluated.
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

// PSNR on BT.601 luma over the whole frame.
[[nodiscard]] double psnr_y(const Image& reference, const Image& test);
// PSNR restricted to the hole pixels of `region`. Throws on an empty region.
[[nodiscard]] double psnr_y(const Image& reference, const Image& test, const HoleMask& region);

// Mean SSIM on luma over every valid window.
[[nodiscard]] double ssim(const Image& reference, const Image& test);
// Mean SSIM over windows whose center pixel is a hole of `region`. Throws
// when no such window exists.
[[nodiscard]] double ssim(const Image& reference, const Image& test, const HoleMask& region);

struct QualityReport {
  double psnr_y_full = 0.0;
  std::optional<double> psnr_y_holes;
  double ssim_full = 0.0;
  // Empty when every hole pixel is too close to the border for a window.
  std::optional<double> ssim_holes;
  std::size_t hole_pixel_count = 0;
};

[[nodiscard]] QualityReport evaluate(const Image& reference, const Image& test, const HoleMask& holes);

}  // namespace depthfill::metrics
