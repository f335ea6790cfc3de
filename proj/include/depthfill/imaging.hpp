#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "depthfill/geometry.hpp"

namespace depthfill {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend constexpr bool operator==(Rgb, Rgb) = default;
};

// 8-bit RGB raster, row-major, channels interleaved.
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = {});
  Image(int width, int height, std::vector<std::uint8_t> samples);

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] static constexpr int channels() { return 3; }
  [[nodiscard]] bool empty() const { return samples_.empty(); }
  [[nodiscard]] Rect bounds() const { return {0, 0, width_, height_}; }

  [[nodiscard]] Rgb at(int x, int y) const {
    const auto* s = &samples_[index(x, y)];
    return {s[0], s[1], s[2]};
  }
  void set(int x, int y, Rgb c) {
    auto* s = &samples_[index(x, y)];
    s[0] = c.r;
    s[1] = c.g;
    s[2] = c.b;
  }
  [[nodiscard]] std::uint8_t sample(int x, int y, int c) const { return samples_[index(x, y) + c]; }

  [[nodiscard]] std::span<const std::uint8_t> samples() const { return samples_; }
  [[nodiscard]] std::span<std::uint8_t> samples() { return samples_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  [[nodiscard]] std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> samples_;
};

// 8-bit depth raster. Larger values are nearer to the camera (255 = nearest).
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height, std::uint8_t fill = 0);
  DepthMap(int width, int height, std::vector<std::uint8_t> samples);

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] Rect bounds() const { return {0, 0, width_, height_}; }
  [[nodiscard]] std::uint8_t at(int x, int y) const { return samples_[index(x, y)]; }
  void set(int x, int y, std::uint8_t d) { samples_[index(x, y)] = d; }

  [[nodiscard]] std::span<const std::uint8_t> samples() const { return samples_; }
  [[nodiscard]] std::span<std::uint8_t> samples() { return samples_; }

  friend bool operator==(const DepthMap&, const DepthMap&) = default;

 private:
  [[nodiscard]] std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> samples_;
};

// Binary mask: 1 = known (source region), 0 = hole (target region).
class HoleMask {
 public:
  HoleMask() = default;
  // All pixels start known.
  HoleMask(int width, int height);

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] Rect bounds() const { return {0, 0, width_, height_}; }
  [[nodiscard]] bool known(int x, int y) const { return bits_[index(x, y)] != 0; }
  [[nodiscard]] bool hole(int x, int y) const { return bits_[index(x, y)] == 0; }
  [[nodiscard]] std::uint8_t value(int x, int y) const { return bits_[index(x, y)]; }
  void set_known(int x, int y, bool known) { bits_[index(x, y)] = known ? 1 : 0; }
  void mark_hole(const Rect& r);

  [[nodiscard]] std::size_t hole_count() const;
  [[nodiscard]] bool any_hole() const { return hole_count() != 0; }
  // Bounding box of all hole pixels; empty when there are none.
  [[nodiscard]] Rect hole_bounds() const;

  friend bool operator==(const HoleMask&, const HoleMask&) = default;

 private:
  [[nodiscard]] std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Real-valued working copy, samples normalized to [0, 1], channels
// interleaved. Potentials are evaluated on planes so that color and depth
// SSD share one code path.
class Plane {
 public:
  Plane() = default;
  Plane(int width, int height, int channels, float fill = 0.f);

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] int channels() const { return channels_; }
  [[nodiscard]] Rect bounds() const { return {0, 0, width_, height_}; }
  [[nodiscard]] float at(int x, int y, int c = 0) const { return data_[index(x, y) + c]; }
  float& at(int x, int y, int c = 0) { return data_[index(x, y) + c]; }
  // Pointer to the first channel of pixel (x, y); a row is contiguous.
  [[nodiscard]] const float* row(int x, int y) const { return &data_[index(x, y)]; }

 private:
  [[nodiscard]] std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

[[nodiscard]] Plane to_plane(const Image& img);
[[nodiscard]] Plane to_plane(const DepthMap& depth);

struct LumaImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  [[nodiscard]] double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

// BT.601 full-range luma: 0.299 R + 0.587 G + 0.114 B.
[[nodiscard]] LumaImage rgb_to_luma(const Image& img);
[[nodiscard]] double luma(Rgb c);

[[nodiscard]] Image load_image(const std::filesystem::path& path);
// Format chosen by extension: .png, .ppm (P6) or .pgm (P5, requires a gray
// image, i.e. R = G = B everywhere).
void save_image(const Image& img, const std::filesystem::path& path);

[[nodiscard]] DepthMap load_depth(const std::filesystem::path& path);
void save_depth(const DepthMap& depth, const std::filesystem::path& path);
[[nodiscard]] DepthMap invert_depth(const DepthMap& depth);

// Masks are stored as 8-bit grayscale, 0 = hole and 255 = known. On load,
// values >= 128 count as known.
[[nodiscard]] HoleMask load_mask(const std::filesystem::path& path);
void save_mask(const HoleMask& mask, const std::filesystem::path& path);

}  // namespace depthfill
