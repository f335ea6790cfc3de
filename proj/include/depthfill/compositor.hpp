#pragma once

#include <span>

#include "depthfill/imaging.hpp"
#include "depthfill/lattice.hpp"

namespace depthfill::compositor {

enum class Blend {
  // Every covering patch weighs the same.
  uniform,
  // Tent weight falling off linearly from the patch center.
  feathered,
};

struct CompositeConfig {
  Blend blend = Blend::feathered;
};

// Known pixels are copied unchanged. Each hole pixel becomes the weighted
// average of the assigned source patches covering it, accumulated in node
// order and rounded half away from zero. `assignment` holds one global label
// id per node. Throws if a hole pixel is not covered by any node.
[[nodiscard]] Image composite(const Image& img, const HoleMask& mask, const lattice::PatchLattice& lattice,
                              std::span<const lattice::LabelId> assignment, const CompositeConfig& cfg);

[[nodiscard]] DepthMap composite_depth(const DepthMap& depth, const HoleMask& mask,
                                       const lattice::PatchLattice& lattice,
                                       std::span<const lattice::LabelId> assignment, const CompositeConfig& cfg);

// Completed image with the hole outline (hole pixels touching the known
// region) drawn in green.
[[nodiscard]] Image render_boundary_overlay(const Image& completed, const HoleMask& mask);

}  // namespace depthfill::compositor
