#include "depthfill/dibr.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "depthfill/error.hpp"

namespace depthfill::dibr {

double WarpConfig::disparity(std::uint8_t depth) const {
  return baseline_gain * (static_cast<double>(depth) / 255.0) + depth_offset;
}

int WarpConfig::shift(std::uint8_t depth) const {
  const auto magnitude = static_cast<int>(std::lround(disparity(depth)));
  return direction == Direction::right ? -magnitude : magnitude;
}

void WarpConfig::validate() const {
  if (!std::isfinite(baseline_gain) || !std::isfinite(depth_offset)) {
    throw InvalidArgument("baseline-gain and depth-offset must be finite");
  }
  if (baseline_gain < 0.0) {
    throw InvalidArgument("baseline-gain must be >= 0 so that disparity grows with nearness, got " +
                          std::to_string(baseline_gain));
  }
}

WarpResult forward_warp(const Image& img, const DepthMap& depth, const WarpConfig& cfg) {
  cfg.validate();
  if (img.width() != depth.width() || img.height() != depth.height()) {
    throw InvalidArgument("texture is " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                          " but depth is " + std::to_string(depth.width()) + "x" + std::to_string(depth.height()));
  }
  const int width = img.width();
  const int height = img.height();
  WarpResult out{Image(width, height), DepthMap(width, height), HoleMask(width, height)};

  std::vector<int> winner(static_cast<std::size_t>(width));
  for (int y = 0; y < height; ++y) {
    // winner[x] = source column that landed on x, -1 if none. Sources are
    // visited left to right so a strict comparison keeps the leftmost on ties.
    std::ranges::fill(winner, -1);
    for (int sx = 0; sx < width; ++sx) {
      const std::uint8_t d = depth.at(sx, y);
      const int tx = sx + cfg.shift(d);
      if (tx < 0 || tx >= width) continue;
      const int current = winner[static_cast<std::size_t>(tx)];
      if (current < 0 || d > depth.at(current, y)) winner[static_cast<std::size_t>(tx)] = sx;
    }
    for (int x = 0; x < width; ++x) {
      const int sx = winner[static_cast<std::size_t>(x)];
      if (sx < 0) {
        out.holes.set_known(x, y, false);
        continue;
      }
      out.virtual_image.set(x, y, img.at(sx, y));
      out.virtual_depth.set(x, y, depth.at(sx, y));
    }
  }

  if (cfg.close_cracks) {
    const HoleMask before = out.holes;
    auto mid = [](std::uint8_t a, std::uint8_t b) { return static_cast<std::uint8_t>((a + b + 1) / 2); };
    for (int y = 0; y < height; ++y) {
      for (int x = 1; x + 1 < width; ++x) {
        if (!before.hole(x, y) || !before.known(x - 1, y) || !before.known(x + 1, y)) continue;
        const Rgb l = out.virtual_image.at(x - 1, y);
        const Rgb r = out.virtual_image.at(x + 1, y);
        out.virtual_image.set(x, y, {mid(l.r, r.r), mid(l.g, r.g), mid(l.b, r.b)});
        out.virtual_depth.set(x, y, mid(out.virtual_depth.at(x - 1, y), out.virtual_depth.at(x + 1, y)));
        out.holes.set_known(x, y, true);
      }
    }
  }
  return out;
}

DepthMap fill_depth_holes(const DepthMap& depth, const HoleMask& holes, const WarpConfig& cfg) {
  if (depth.width() != holes.width() || depth.height() != holes.height()) {
    throw InvalidArgument("depth and hole mask dimensions differ");
  }
  const int width = depth.width();
  const int height = depth.height();
  if (holes.hole_count() == static_cast<std::size_t>(width) * height) {
    throw InvalidArgument("cannot fill depth: every pixel is a hole");
  }

  DepthMap out = depth;
  const int primary_step = cfg.direction == Direction::right ? 1 : -1;
  std::vector<bool> row_defined(static_cast<std::size_t>(height), false);

  auto scan = [&](int x, int y, int step) -> std::optional<std::uint8_t> {
    for (int sx = x + step; sx >= 0 && sx < width; sx += step) {
      if (holes.known(sx, y)) return depth.at(sx, y);
    }
    return std::nullopt;
  };

  for (int y = 0; y < height; ++y) {
    bool any_known = false;
    for (int x = 0; x < width && !any_known; ++x) any_known = holes.known(x, y);
    if (!any_known) continue;
    row_defined[static_cast<std::size_t>(y)] = true;
    for (int x = 0; x < width; ++x) {
      if (holes.known(x, y)) continue;
      auto value = scan(x, y, primary_step);
      if (!value) value = scan(x, y, -primary_step);
      out.set(x, y, *value);
    }
  }

  // Rows without any known pixel copy the nearest defined row, upper first.
  for (int y = 0; y < height; ++y) {
    if (row_defined[static_cast<std::size_t>(y)]) continue;
    for (int dist = 1; dist < height; ++dist) {
      int source = -1;
      if (y - dist >= 0 && row_defined[static_cast<std::size_t>(y - dist)]) {
        source = y - dist;
      } else if (y + dist < height && row_defined[static_cast<std::size_t>(y + dist)]) {
        source = y + dist;
      }
      if (source < 0) continue;
      for (int x = 0; x < width; ++x) out.set(x, y, out.at(x, source));
      break;
    }
  }
  return out;
}

}  // namespace depthfill::dibr
