#include "depthfill/imaging.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

#include "depthfill/error.hpp"

namespace depthfill {
namespace {

void check_dimensions(int width, int height) {
  if (width < 1 || height < 1) {
    throw InvalidArgument("image dimensions must be positive, got " + std::to_string(width) + "x" +
                          std::to_string(height));
  }
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::ranges::transform(ext, ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

// Decoded 8-bit raster with 1 or 3 channels.
struct RawRaster {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> samples;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

// --- PNM -------------------------------------------------------------------

class PnmHeaderReader {
 public:
  PnmHeaderReader(std::span<const std::uint8_t> bytes, const std::filesystem::path& path)
      : bytes_(bytes), path_(path) {}

  int next_int() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw CorruptFileError("malformed PNM header in '" + path_.string() + "'");
    }
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_++] - '0');
      if (value > (1L << 24)) throw CorruptFileError("PNM header value too large in '" + path_.string() + "'");
    }
    return static_cast<int>(value);
  }

  // Exactly one whitespace byte separates the header from the payload.
  std::size_t payload_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw CorruptFileError("malformed PNM header in '" + path_.string() + "'");
    }
    return pos_ + 1;
  }

  void seek(std::size_t pos) { pos_ = pos; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

RawRaster decode_pnm(std::span<const std::uint8_t> bytes, const std::filesystem::path& path) {
  RawRaster raster;
  raster.channels = bytes[1] == '6' ? 3 : 1;
  PnmHeaderReader header(bytes, path);
  header.seek(2);
  raster.width = header.next_int();
  raster.height = header.next_int();
  const int maxval = header.next_int();
  if (raster.width < 1 || raster.height < 1) {
    throw CorruptFileError("PNM with zero dimension in '" + path.string() + "'");
  }
  if (maxval != 255) {
    throw UnsupportedFormatError("only 8-bit PNM (maxval 255) is supported, '" + path.string() + "' has maxval " +
                                 std::to_string(maxval));
  }
  const std::size_t offset = header.payload_offset();
  const std::size_t expected = static_cast<std::size_t>(raster.width) * raster.height * raster.channels;
  if (bytes.size() < offset + expected) {
    throw CorruptFileError("truncated PNM payload in '" + path.string() + "': expected " + std::to_string(expected) +
                           " bytes, found " + std::to_string(bytes.size() - std::min(bytes.size(), offset)));
  }
  raster.samples.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                        bytes.begin() + static_cast<std::ptrdiff_t>(offset + expected));
  return raster;
}

void write_pnm(const std::filesystem::path& path, int width, int height, int channels,
               std::span<const std::uint8_t> samples) {
  const std::string header =
      std::string(channels == 3 ? "P6" : "P5") + "\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), samples.begin(), samples.end());
  write_file(path, bytes);
}

// --- PNG -------------------------------------------------------------------

RawRaster decode_png(std::span<const std::uint8_t> bytes, const std::filesystem::path& path, bool want_gray) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()) == 0) {
    throw CorruptFileError("bad PNG '" + path.string() + "': " + image.message);
  }
  if (want_gray && (image.format & PNG_FORMAT_FLAG_COLOR) != 0) {
    png_image_free(&image);
    throw UnsupportedFormatError("expected single-channel grayscale PNG, '" + path.string() + "' has color channels");
  }
  RawRaster raster;
  raster.width = static_cast<int>(image.width);
  raster.height = static_cast<int>(image.height);
  raster.channels = want_gray ? 1 : 3;
  image.format = want_gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  raster.samples.resize(PNG_IMAGE_SIZE(image));
  if (png_image_finish_read(&image, nullptr, raster.samples.data(), 0, nullptr) == 0) {
    const std::string message = image.message;
    png_image_free(&image);
    throw CorruptFileError("corrupt PNG payload in '" + path.string() + "': " + message);
  }
  return raster;
}

void write_png(const std::filesystem::path& path, int width, int height, int channels,
               std::span<const std::uint8_t> samples) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (png_image_write_to_memory(&image, nullptr, &size, 0, samples.data(), 0, nullptr) == 0) {
    throw IoError("PNG encode failed for '" + path.string() + "': " + image.message);
  }
  std::vector<std::uint8_t> bytes(size);
  if (png_image_write_to_memory(&image, bytes.data(), &size, 0, samples.data(), 0, nullptr) == 0) {
    throw IoError("PNG encode failed for '" + path.string() + "': " + image.message);
  }
  bytes.resize(size);
  write_file(path, bytes);
}

enum class FileKind { png, ppm, pgm };

FileKind sniff(std::span<const std::uint8_t> bytes, const std::filesystem::path& path) {
  static constexpr std::array<std::uint8_t, 8> png_magic{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= png_magic.size() && std::equal(png_magic.begin(), png_magic.end(), bytes.begin())) {
    return FileKind::png;
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return FileKind::ppm;
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return FileKind::pgm;
  throw UnsupportedFormatError("unsupported image format in '" + path.string() +
                               "' (expected PNG, binary PPM or binary PGM)");
}

RawRaster load_raw(const std::filesystem::path& path, bool want_gray) {
  const auto bytes = read_file(path);
  switch (sniff(bytes, path)) {
    case FileKind::png:
      return decode_png(bytes, path, want_gray);
    case FileKind::ppm:
      if (want_gray) {
        throw UnsupportedFormatError("expected single-channel grayscale file, '" + path.string() +
                                     "' is a 3-channel PPM");
      }
      return decode_pnm(bytes, path);
    case FileKind::pgm:
      return decode_pnm(bytes, path);
  }
  return {};
}

void save_raw(const std::filesystem::path& path, int width, int height, int channels,
              std::span<const std::uint8_t> samples) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") {
    write_png(path, width, height, channels, samples);
  } else if (ext == ".ppm" && channels == 3) {
    write_pnm(path, width, height, 3, samples);
  } else if (ext == ".pgm" && channels == 1) {
    write_pnm(path, width, height, 1, samples);
  } else {
    throw UnsupportedFormatError("cannot write " + std::to_string(channels) + "-channel raster as '" + ext + "' (" +
                                 path.string() + ")");
  }
}

}  // namespace

// --- rasters ----------------------------------------------------------------

Image::Image(int width, int height, Rgb fill) : width_(width), height_(height) {
  check_dimensions(width, height);
  samples_.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < samples_.size(); i += 3) {
    samples_[i] = fill.r;
    samples_[i + 1] = fill.g;
    samples_[i + 2] = fill.b;
  }
}

Image::Image(int width, int height, std::vector<std::uint8_t> samples)
    : width_(width), height_(height), samples_(std::move(samples)) {
  check_dimensions(width, height);
  if (samples_.size() != static_cast<std::size_t>(width) * height * 3) {
    throw InvalidArgument("image sample count does not match " + std::to_string(width) + "x" +
                          std::to_string(height) + "x3");
  }
}

DepthMap::DepthMap(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  check_dimensions(width, height);
  samples_.assign(static_cast<std::size_t>(width) * height, fill);
}

DepthMap::DepthMap(int width, int height, std::vector<std::uint8_t> samples)
    : width_(width), height_(height), samples_(std::move(samples)) {
  check_dimensions(width, height);
  if (samples_.size() != static_cast<std::size_t>(width) * height) {
    throw InvalidArgument("depth sample count does not match " + std::to_string(width) + "x" +
                          std::to_string(height));
  }
}

HoleMask::HoleMask(int width, int height) : width_(width), height_(height) {
  check_dimensions(width, height);
  bits_.assign(static_cast<std::size_t>(width) * height, 1);
}

void HoleMask::mark_hole(const Rect& r) {
  const Rect clipped = intersect(r, bounds());
  for (int y = clipped.y0; y < clipped.y1; ++y) {
    for (int x = clipped.x0; x < clipped.x1; ++x) set_known(x, y, false);
  }
}

std::size_t HoleMask::hole_count() const {
  return static_cast<std::size_t>(std::ranges::count(bits_, std::uint8_t{0}));
}

Rect HoleMask::hole_bounds() const {
  Rect box{width_, height_, 0, 0};
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      if (!hole(x, y)) continue;
      box.x0 = std::min(box.x0, x);
      box.y0 = std::min(box.y0, y);
      box.x1 = std::max(box.x1, x + 1);
      box.y1 = std::max(box.y1, y + 1);
    }
  }
  return box.empty() ? Rect{} : box;
}

Plane::Plane(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
  check_dimensions(width, height);
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Plane to_plane(const Image& img) {
  Plane plane(img.width(), img.height(), 3);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) plane.at(x, y, c) = static_cast<float>(img.sample(x, y, c)) / 255.f;
    }
  }
  return plane;
}

Plane to_plane(const DepthMap& depth) {
  Plane plane(depth.width(), depth.height(), 1);
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) plane.at(x, y) = static_cast<float>(depth.at(x, y)) / 255.f;
  }
  return plane;
}

double luma(Rgb c) { return 0.299 * c.r + 0.587 * c.g + 0.114 * c.b; }

LumaImage rgb_to_luma(const Image& img) {
  LumaImage out{img.width(), img.height(), {}};
  out.values.resize(static_cast<std::size_t>(img.width()) * img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      out.values[static_cast<std::size_t>(y) * img.width() + x] = luma(img.at(x, y));
    }
  }
  return out;
}

// --- file I/O ---------------------------------------------------------------

Image load_image(const std::filesystem::path& path) {
  RawRaster raw = load_raw(path, false);
  if (raw.channels == 1) {
    std::vector<std::uint8_t> rgb(raw.samples.size() * 3);
    for (std::size_t i = 0; i < raw.samples.size(); ++i) {
      rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = raw.samples[i];
    }
    return Image(raw.width, raw.height, std::move(rgb));
  }
  return Image(raw.width, raw.height, std::move(raw.samples));
}

void save_image(const Image& img, const std::filesystem::path& path) {
  if (lower_extension(path) == ".pgm") {
    std::vector<std::uint8_t> gray(static_cast<std::size_t>(img.width()) * img.height());
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) {
        const Rgb c = img.at(x, y);
        if (c.r != c.g || c.g != c.b) {
          throw UnsupportedFormatError("cannot store a color image as PGM (" + path.string() + ")");
        }
        gray[static_cast<std::size_t>(y) * img.width() + x] = c.r;
      }
    }
    save_raw(path, img.width(), img.height(), 1, gray);
    return;
  }
  save_raw(path, img.width(), img.height(), 3, img.samples());
}

DepthMap load_depth(const std::filesystem::path& path) {
  RawRaster raw = load_raw(path, true);
  return DepthMap(raw.width, raw.height, std::move(raw.samples));
}

void save_depth(const DepthMap& depth, const std::filesystem::path& path) {
  save_raw(path, depth.width(), depth.height(), 1, depth.samples());
}

DepthMap invert_depth(const DepthMap& depth) {
  DepthMap out = depth;
  for (auto& d : out.samples()) d = static_cast<std::uint8_t>(255 - d);
  return out;
}

HoleMask load_mask(const std::filesystem::path& path) {
  const RawRaster raw = load_raw(path, true);
  HoleMask mask(raw.width, raw.height);
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      mask.set_known(x, y, raw.samples[static_cast<std::size_t>(y) * raw.width + x] >= 128);
    }
  }
  return mask;
}

void save_mask(const HoleMask& mask, const std::filesystem::path& path) {
  std::vector<std::uint8_t> gray(static_cast<std::size_t>(mask.width()) * mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      gray[static_cast<std::size_t>(y) * mask.width() + x] = mask.known(x, y) ? 255 : 0;
    }
  }
  save_raw(path, mask.width(), mask.height(), 1, gray);
}

}  // namespace depthfill
