#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "depthfill/geometry.hpp"
#include "depthfill/imaging.hpp"

namespace depthfill::lattice {

using NodeId = std::size_t;
using LabelId = std::size_t;

struct LatticeConfig {
  int patch_w = 14;
  int patch_h = 14;
  int gap_x = 7;
  int gap_y = 7;
  // Spacing of candidate source-patch centers.
  int label_stride = 2;

  // Requires even patch sizes, 1 <= gap < patch, stride >= 1.
  void validate() const;

  // Patch footprint around `center`: offsets [-w/2, w/2) x [-h/2, h/2).
  [[nodiscard]] Rect footprint(PixelCoord center) const {
    return {center.x - patch_w / 2, center.y - patch_h / 2, center.x + patch_w / 2, center.y + patch_h / 2};
  }
  [[nodiscard]] PixelCoord half() const { return {patch_w / 2, patch_h / 2}; }
};

enum class PotentialMode {
  normal,
  // Node lies over foreground next to a disocclusion; its node potential is
  // forced to 0 so it behaves like an interior node.
  zeroed,
};

struct Node {
  NodeId id = 0;
  PixelCoord center;
  // Position on the node grid; adjacency is defined on this grid.
  PixelCoord grid;
  PotentialMode mode = PotentialMode::normal;
  std::vector<NodeId> neighbors;
  // Mean (normalized) filled depth over the hole pixels of the footprint.
  double ref_depth = 0.0;
  std::size_t known_pixels = 0;
  std::size_t hole_pixels = 0;
};

struct Label {
  PixelCoord source_center;
  // Mean normalized depth over the footprint.
  double mean_depth = 0.0;
};

struct Edge {
  NodeId a = 0;
  NodeId b = 0;
  friend constexpr bool operator==(Edge, Edge) = default;
};

struct PatchLattice {
  LatticeConfig config;
  std::vector<Node> nodes;
  // Undirected, a < b, sorted.
  std::vector<Edge> edges;
  std::vector<Label> labels;
  // Per node, indices into `labels`, ascending.
  std::vector<std::vector<LabelId>> node_labels;

  [[nodiscard]] bool empty() const { return nodes.empty(); }
};

// Nodes sit on a (gap_x, gap_y) grid anchored at the hole bounding box
// origin; every grid position whose footprint touches a hole pixel becomes a
// node. Footprints crossing the image border are shifted inward, and grid
// positions that collapse onto the same center are merged. An all-known mask
// yields an empty lattice.
[[nodiscard]] PatchLattice build_lattice(const HoleMask& mask, const LatticeConfig& cfg);

// Every center on the label_stride grid whose full footprint is inside the
// image and hole-free, ordered by (y, x). Throws when none exist.
[[nodiscard]] std::vector<Label> enumerate_labels(const Image& img, const HoleMask& mask, const DepthMap& depth,
                                                  const LatticeConfig& cfg);

// Gives every node the full label list and fills Node::ref_depth,
// known_pixels and hole_pixels from the filled depth map.
void attach_labels(PatchLattice& lattice, std::vector<Label> labels, const DepthMap& filled_depth,
                   const HoleMask& mask);

// Connected hole regions (8-connectivity). Entry is the component index, or
// -1 for known pixels.
struct HoleComponents {
  int width = 0;
  int height = 0;
  std::size_t count = 0;
  std::vector<int> index;

  [[nodiscard]] int at(int x, int y) const { return index[static_cast<std::size_t>(y) * width + x]; }
};
[[nodiscard]] HoleComponents label_hole_components(const HoleMask& mask);

// Two-class Otsu threshold over 8-bit samples. Values > threshold form the
// upper class. Returns nullopt when fewer than two distinct values occur.
[[nodiscard]] std::optional<std::uint8_t> otsu_threshold(std::span<const std::uint8_t> values);

struct DepthSplit {
  std::uint8_t threshold = 0;
  double near_mean = 0.0;
  double far_mean = 0.0;
};

// Classes whose means differ by less than this (in 8-bit depth levels) are
// treated as one depth layer: no foreground is detected.
inline constexpr double kMinLayerSeparation = 24.0;

// Per hole component: Otsu split of the filled depth of every pixel within
// 2 px of the component boundary (known side and hole side).
[[nodiscard]] std::vector<std::optional<DepthSplit>> split_boundary_depths(const DepthMap& filled_depth,
                                                                           const HoleMask& mask,
                                                                           const HoleComponents& components);

// Marks border nodes as zeroed when more than 25 % of their known pixels
// fall in the near class of their hole component. Nodes without known
// pixels keep PotentialMode::normal.
[[nodiscard]] PatchLattice classify_nodes(PatchLattice lattice, const DepthMap& filled_depth, const HoleMask& mask);

inline constexpr double kZeroedNearFraction = 0.25;

// Debug view: holes in magenta, zeroed node footprints tinted yellow, node
// centers marked (white = normal, yellow = zeroed).
[[nodiscard]] Image render_overlay(const Image& image, const HoleMask& mask, const PatchLattice& lattice);

}  // namespace depthfill::lattice
