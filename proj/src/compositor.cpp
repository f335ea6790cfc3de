#include "depthfill/compositor.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "depthfill/error.hpp"

namespace depthfill::compositor {
namespace {

double tent(int offset, int half) {
  // Offsets run over [-half, half); the center of the footprint is at -0.5.
  return 1.0 - std::abs(offset + 0.5) / half;
}

// Accumulates patch contributions for `channels`-channel rasters read
// through `sample(x, y, c)` and returns the blended value of hole pixels.
template <typename Sample>
std::vector<double> blend_holes(int width, int height, int channels, const HoleMask& mask,
                                const lattice::PatchLattice& lattice, std::span<const lattice::LabelId> assignment,
                                const CompositeConfig& cfg, Sample&& sample) {
  if (mask.width() != width || mask.height() != height) throw InvalidArgument("mask and image dimensions differ");
  if (assignment.size() != lattice.nodes.size()) {
    throw InvalidArgument("assignment covers " + std::to_string(assignment.size()) + " of " +
                          std::to_string(lattice.nodes.size()) + " nodes");
  }
  const auto& lc = lattice.config;
  const auto [hw, hh] = lc.half();
  const std::size_t pixels = static_cast<std::size_t>(width) * height;
  std::vector<double> sums(pixels * channels, 0.0);
  std::vector<double> weights(pixels, 0.0);

  for (std::size_t n = 0; n < lattice.nodes.size(); ++n) {
    if (assignment[n] >= lattice.labels.size()) throw InvalidArgument("node " + std::to_string(n) + " is unassigned");
    const PixelCoord center = lattice.nodes[n].center;
    const PixelCoord source = lattice.labels[assignment[n]].source_center;
    for (int dy = -hh; dy < hh; ++dy) {
      for (int dx = -hw; dx < hw; ++dx) {
        const int x = center.x + dx;
        const int y = center.y + dy;
        if (x < 0 || y < 0 || x >= width || y >= height || mask.known(x, y)) continue;
        const double w = cfg.blend == Blend::uniform ? 1.0 : tent(dx, hw) * tent(dy, hh);
        const std::size_t i = static_cast<std::size_t>(y) * width + x;
        weights[i] += w;
        for (int c = 0; c < channels; ++c) sums[i * channels + c] += w * sample(source.x + dx, source.y + dy, c);
      }
    }
  }

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (mask.known(x, y)) continue;
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      if (weights[i] <= 0.0) {
        throw InvalidArgument("hole pixel (" + std::to_string(x) + ", " + std::to_string(y) +
                              ") is not covered by any lattice node");
      }
      for (int c = 0; c < channels; ++c) sums[i * channels + c] /= weights[i];
    }
  }
  return sums;
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255)); }

}  // namespace

Image composite(const Image& img, const HoleMask& mask, const lattice::PatchLattice& lattice,
                std::span<const lattice::LabelId> assignment, const CompositeConfig& cfg) {
  const auto blended = blend_holes(img.width(), img.height(), 3, mask, lattice, assignment, cfg,
                                   [&](int x, int y, int c) { return static_cast<double>(img.sample(x, y, c)); });
  Image out = img;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (mask.known(x, y)) continue;
      const std::size_t i = (static_cast<std::size_t>(y) * img.width() + x) * 3;
      out.set(x, y, {to_byte(blended[i]), to_byte(blended[i + 1]), to_byte(blended[i + 2])});
    }
  }
  return out;
}

DepthMap composite_depth(const DepthMap& depth, const HoleMask& mask, const lattice::PatchLattice& lattice,
                         std::span<const lattice::LabelId> assignment, const CompositeConfig& cfg) {
  const auto blended = blend_holes(depth.width(), depth.height(), 1, mask, lattice, assignment, cfg,
                                   [&](int x, int y, int) { return static_cast<double>(depth.at(x, y)); });
  DepthMap out = depth;
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (!mask.known(x, y)) out.set(x, y, to_byte(blended[static_cast<std::size_t>(y) * depth.width() + x]));
    }
  }
  return out;
}

Image render_boundary_overlay(const Image& completed, const HoleMask& mask) {
  Image out = completed;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.hole(x, y)) continue;
      bool edge = false;
      for (const auto& [dx, dy] : {std::pair{1, 0}, std::pair{-1, 0}, std::pair{0, 1}, std::pair{0, -1}}) {
        const PixelCoord q{x + dx, y + dy};
        if (mask.bounds().contains(q) && mask.known(q.x, q.y)) edge = true;
      }
      if (edge) out.set(x, y, {0, 255, 0});
    }
  }
  return out;
}

}  // namespace depthfill::compositor
