#pragma once

#include <cstdint>

#include "depthfill/imaging.hpp"

namespace depthfill::dibr {

// Direction the virtual camera moves relative to the reference camera.
enum class Direction { left, right };

struct WarpConfig {
  // Disparity in pixels at depth 255, on top of depth_offset.
  double baseline_gain = 10.0;
  // Disparity in pixels at depth 0.
  double depth_offset = 0.0;
  Direction direction = Direction::right;
  // Close isolated one-pixel hole columns produced by integer rounding.
  bool close_cracks = true;

  // disparity(d) = baseline_gain * d / 255 + depth_offset.
  [[nodiscard]] double disparity(std::uint8_t depth) const;
  // Signed horizontal displacement of a source pixel with the given depth.
  // Moving the camera right shifts content left, nearer content further.
  [[nodiscard]] int shift(std::uint8_t depth) const;

  // Throws InvalidArgument when a parameter is non-finite or the disparity
  // would decrease with depth.
  void validate() const;
};

struct WarpResult {
  Image virtual_image;
  DepthMap virtual_depth;
  HoleMask holes;
};

// Forward-warps texture + depth to the virtual viewpoint. Collisions keep
// the nearest source pixel (largest depth), ties go to the leftmost source.
// Unhit pixels are holes; see WarpConfig::close_cracks for the crack pass.
[[nodiscard]] WarpResult forward_warp(const Image& img, const DepthMap& depth, const WarpConfig& cfg);

// Extrapolates depth into the holes so that depth is defined everywhere.
// Each hole pixel takes the nearest known depth in its row on the
// background side of the disocclusion (right of it for rightward camera
// movement, left for leftward), falling back to the other side. Rows with
// no known pixel copy the nearest filled row.
[[nodiscard]] DepthMap fill_depth_holes(const DepthMap& depth, const HoleMask& holes, const WarpConfig& cfg);

}  // namespace depthfill::dibr
