#include "depthfill/lattice.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <string>

#include "depthfill/error.hpp"
#include "depthfill/parallel.hpp"

namespace depthfill::lattice {
namespace {

// Summed-area table over an integer-valued raster.
class IntegralImage {
 public:
  template <typename Fn>
  IntegralImage(int width, int height, Fn&& value) : width_(width), sums_((width + 1) * std::size_t(height + 1), 0) {
    for (int y = 0; y < height; ++y) {
      long long row = 0;
      for (int x = 0; x < width; ++x) {
        row += value(x, y);
        sums_[idx(x + 1, y + 1)] = sums_[idx(x + 1, y)] + row;
      }
    }
  }

  [[nodiscard]] long long sum(const Rect& r) const {
    return sums_[idx(r.x1, r.y1)] - sums_[idx(r.x0, r.y1)] - sums_[idx(r.x1, r.y0)] + sums_[idx(r.x0, r.y0)];
  }

 private:
  [[nodiscard]] std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * (width_ + 1) + x; }

  int width_;
  std::vector<long long> sums_;
};

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
int ceil_div(int a, int b) { return -floor_div(-a, b); }

}  // namespace

void LatticeConfig::validate() const {
  auto fail = [](const std::string& what) { throw InvalidArgument("lattice: " + what); };
  if (patch_w < 2 || patch_h < 2 || patch_w % 2 != 0 || patch_h % 2 != 0) {
    fail("patch size must be even and >= 2, got " + std::to_string(patch_w) + "x" + std::to_string(patch_h));
  }
  if (gap_x < 1 || gap_y < 1) fail("gap must be >= 1");
  if (gap_x >= patch_w || gap_y >= patch_h) {
    fail("gap " + std::to_string(gap_x) + "x" + std::to_string(gap_y) + " must be smaller than patch " +
         std::to_string(patch_w) + "x" + std::to_string(patch_h));
  }
  if (label_stride < 1) fail("label-stride must be >= 1");
}

PatchLattice build_lattice(const HoleMask& mask, const LatticeConfig& cfg) {
  cfg.validate();
  PatchLattice lattice;
  lattice.config = cfg;
  const Rect box = mask.hole_bounds();
  if (box.empty()) return lattice;
  if (mask.width() < cfg.patch_w || mask.height() < cfg.patch_h) {
    throw InvalidArgument("image " + std::to_string(mask.width()) + "x" + std::to_string(mask.height()) +
                          " is smaller than the " + std::to_string(cfg.patch_w) + "x" + std::to_string(cfg.patch_h) +
                          " patch");
  }

  const IntegralImage holes(mask.width(), mask.height(), [&](int x, int y) { return mask.hole(x, y) ? 1 : 0; });
  const auto [hw, hh] = cfg.half();

  // Grid index range whose (unclamped) footprint can reach the bounding box.
  const int i0 = ceil_div(1 - hw, cfg.gap_x);
  const int i1 = floor_div(box.width() - 1 + hw, cfg.gap_x);
  const int j0 = ceil_div(1 - hh, cfg.gap_y);
  const int j1 = floor_div(box.height() - 1 + hh, cfg.gap_y);

  std::map<PixelCoord, NodeId> by_center;
  std::map<std::pair<int, int>, NodeId> by_grid;
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      const PixelCoord raw{box.x0 + i * cfg.gap_x, box.y0 + j * cfg.gap_y};
      const Rect reach = intersect(cfg.footprint(raw), mask.bounds());
      if (reach.empty() || holes.sum(reach) == 0) continue;
      const PixelCoord center{std::clamp(raw.x, hw, mask.width() - hw), std::clamp(raw.y, hh, mask.height() - hh)};
      auto [it, inserted] = by_center.try_emplace(center, lattice.nodes.size());
      if (inserted) {
        Node node;
        node.id = it->second;
        node.center = center;
        node.grid = {i, j};
        lattice.nodes.push_back(node);
      }
      by_grid[{i, j}] = it->second;
    }
  }

  std::set<std::pair<NodeId, NodeId>> edges;
  for (const auto& [grid, id] : by_grid) {
    for (const auto& step : {std::pair{1, 0}, std::pair{0, 1}}) {
      auto other = by_grid.find({grid.first + step.first, grid.second + step.second});
      if (other == by_grid.end() || other->second == id) continue;
      edges.insert(std::minmax(id, other->second));
    }
  }
  for (const auto& [a, b] : edges) {
    lattice.edges.push_back({a, b});
    lattice.nodes[a].neighbors.push_back(b);
    lattice.nodes[b].neighbors.push_back(a);
  }
  for (auto& node : lattice.nodes) std::ranges::sort(node.neighbors);
  return lattice;
}

std::vector<Label> enumerate_labels(const Image& img, const HoleMask& mask, const DepthMap& depth,
                                    const LatticeConfig& cfg) {
  cfg.validate();
  if (img.width() != mask.width() || img.height() != mask.height() || depth.width() != mask.width() ||
      depth.height() != mask.height()) {
    throw InvalidArgument("image, mask and depth dimensions differ");
  }
  const IntegralImage holes(mask.width(), mask.height(), [&](int x, int y) { return mask.hole(x, y) ? 1 : 0; });
  const IntegralImage depth_sum(depth.width(), depth.height(), [&](int x, int y) { return int{depth.at(x, y)}; });
  const auto [hw, hh] = cfg.half();
  const double area = static_cast<double>(cfg.patch_w) * cfg.patch_h;

  std::vector<Label> labels;
  for (int y = hh; y <= mask.height() - hh; y += cfg.label_stride) {
    for (int x = hw; x <= mask.width() - hw; x += cfg.label_stride) {
      const Rect fp = cfg.footprint({x, y});
      if (holes.sum(fp) != 0) continue;
      labels.push_back({{x, y}, static_cast<double>(depth_sum.sum(fp)) / (255.0 * area)});
    }
  }
  if (labels.empty()) throw InvalidArgument("no hole-free source patch exists for the configured patch size");
  return labels;
}

void attach_labels(PatchLattice& lattice, std::vector<Label> labels, const DepthMap& filled_depth,
                   const HoleMask& mask) {
  lattice.labels = std::move(labels);
  std::vector<LabelId> all(lattice.labels.size());
  for (LabelId l = 0; l < all.size(); ++l) all[l] = l;
  lattice.node_labels.assign(lattice.nodes.size(), all);

  for (auto& node : lattice.nodes) {
    const Rect fp = lattice.config.footprint(node.center);
    double hole_depth = 0.0;
    node.known_pixels = node.hole_pixels = 0;
    for (int y = fp.y0; y < fp.y1; ++y) {
      for (int x = fp.x0; x < fp.x1; ++x) {
        if (mask.known(x, y)) {
          ++node.known_pixels;
        } else {
          ++node.hole_pixels;
          hole_depth += filled_depth.at(x, y);
        }
      }
    }
    node.ref_depth = node.hole_pixels == 0 ? 0.0 : hole_depth / (255.0 * static_cast<double>(node.hole_pixels));
  }
}

HoleComponents label_hole_components(const HoleMask& mask) {
  HoleComponents comps{mask.width(), mask.height(), 0, {}};
  comps.index.assign(static_cast<std::size_t>(mask.width()) * mask.height(), -1);
  auto at = [&](int x, int y) -> int& { return comps.index[static_cast<std::size_t>(y) * mask.width() + x]; };
  std::queue<PixelCoord> frontier;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.hole(x, y) || at(x, y) >= 0) continue;
      const int id = static_cast<int>(comps.count++);
      at(x, y) = id;
      frontier.push({x, y});
      while (!frontier.empty()) {
        const PixelCoord p = frontier.front();
        frontier.pop();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const PixelCoord q{p.x + dx, p.y + dy};
            if (!mask.bounds().contains(q) || !mask.hole(q.x, q.y) || at(q.x, q.y) >= 0) continue;
            at(q.x, q.y) = id;
            frontier.push(q);
          }
        }
      }
    }
  }
  return comps;
}

std::optional<std::uint8_t> otsu_threshold(std::span<const std::uint8_t> values) {
  std::array<double, 256> hist{};
  for (const auto v : values) hist[v] += 1.0;
  const auto distinct = std::ranges::count_if(hist, [](double h) { return h > 0; });
  if (distinct < 2) return std::nullopt;

  const double total = static_cast<double>(values.size());
  double sum_all = 0.0;
  for (int v = 0; v < 256; ++v) sum_all += v * hist[v];

  double weight_low = 0.0;
  double sum_low = 0.0;
  double best_score = -1.0;
  int best = 0;
  for (int t = 0; t < 255; ++t) {
    weight_low += hist[t];
    sum_low += t * hist[t];
    const double weight_high = total - weight_low;
    if (weight_low == 0.0 || weight_high == 0.0) continue;
    const double mean_low = sum_low / weight_low;
    const double mean_high = (sum_all - sum_low) / weight_high;
    const double score = weight_low * weight_high * (mean_low - mean_high) * (mean_low - mean_high);
    if (score > best_score) {
      best_score = score;
      best = t;
    }
  }
  return static_cast<std::uint8_t>(best);
}

std::vector<std::optional<DepthSplit>> split_boundary_depths(const DepthMap& filled_depth, const HoleMask& mask,
                                                             const HoleComponents& components) {
  constexpr int kRadius = 2;
  std::vector<std::vector<std::uint8_t>> samples(components.count);
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      // A pixel is in the boundary band of component c when it is within
      // kRadius of a pixel on the opposite side of the hole boundary.
      const int own = components.at(x, y);
      std::vector<int> touched;
      for (int dy = -kRadius; dy <= kRadius; ++dy) {
        for (int dx = -kRadius; dx <= kRadius; ++dx) {
          const PixelCoord q{x + dx, y + dy};
          if (!mask.bounds().contains(q)) continue;
          const int other = components.at(q.x, q.y);
          if (own < 0 && other >= 0) touched.push_back(other);
          if (own >= 0 && other < 0) touched.push_back(own);
        }
      }
      std::ranges::sort(touched);
      const auto [first, last] = std::ranges::unique(touched);
      touched.erase(first, last);
      for (const int c : touched) samples[static_cast<std::size_t>(c)].push_back(filled_depth.at(x, y));
    }
  }

  std::vector<std::optional<DepthSplit>> splits(components.count);
  for (std::size_t c = 0; c < components.count; ++c) {
    const auto threshold = otsu_threshold(samples[c]);
    if (!threshold) continue;
    double near_sum = 0.0;
    double far_sum = 0.0;
    std::size_t near_count = 0;
    for (const auto v : samples[c]) {
      if (v > *threshold) {
        near_sum += v;
        ++near_count;
      } else {
        far_sum += v;
      }
    }
    DepthSplit split{*threshold, near_sum / static_cast<double>(near_count),
                     far_sum / static_cast<double>(samples[c].size() - near_count)};
    if (split.near_mean - split.far_mean >= kMinLayerSeparation) splits[c] = split;
  }
  return splits;
}

PatchLattice classify_nodes(PatchLattice lattice, const DepthMap& filled_depth, const HoleMask& mask) {
  if (lattice.empty()) return lattice;
  const HoleComponents components = label_hole_components(mask);
  const auto splits = split_boundary_depths(filled_depth, mask, components);

  for (auto& node : lattice.nodes) {
    node.mode = PotentialMode::normal;
    const Rect fp = lattice.config.footprint(node.center);
    std::map<int, std::size_t> hole_share;
    for (int y = fp.y0; y < fp.y1; ++y) {
      for (int x = fp.x0; x < fp.x1; ++x) {
        if (const int c = components.at(x, y); c >= 0) ++hole_share[c];
      }
    }
    if (hole_share.empty()) continue;
    // Component owning most of the footprint's hole pixels; ties to lowest id.
    const auto owner = std::ranges::max_element(hole_share, [](const auto& a, const auto& b) {
                         return a.second < b.second || (a.second == b.second && a.first > b.first);
                       })->first;
    const auto& split = splits[static_cast<std::size_t>(owner)];
    if (!split) continue;

    std::size_t known = 0;
    std::size_t near = 0;
    for (int y = fp.y0; y < fp.y1; ++y) {
      for (int x = fp.x0; x < fp.x1; ++x) {
        if (!mask.known(x, y)) continue;
        ++known;
        if (filled_depth.at(x, y) > split->threshold) ++near;
      }
    }
    if (known > 0 && static_cast<double>(near) > kZeroedNearFraction * static_cast<double>(known)) {
      node.mode = PotentialMode::zeroed;
    }
  }
  return lattice;
}

Image render_overlay(const Image& image, const HoleMask& mask, const PatchLattice& lattice) {
  Image out = image;
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      if (mask.hole(x, y)) out.set(x, y, {255, 0, 255});
    }
  }
  for (const auto& node : lattice.nodes) {
    if (node.mode != PotentialMode::zeroed) continue;
    const Rect fp = intersect(lattice.config.footprint(node.center), out.bounds());
    for (int y = fp.y0; y < fp.y1; ++y) {
      for (int x = fp.x0; x < fp.x1; ++x) {
        const Rgb c = out.at(x, y);
        out.set(x, y, {static_cast<std::uint8_t>((c.r + 255) / 2), static_cast<std::uint8_t>((c.g + 255) / 2),
                       static_cast<std::uint8_t>(c.b / 2)});
      }
    }
  }
  for (const auto& node : lattice.nodes) {
    const Rgb marker = node.mode == PotentialMode::zeroed ? Rgb{255, 255, 0} : Rgb{255, 255, 255};
    for (int d = -1; d <= 1; ++d) {
      for (const PixelCoord p : {PixelCoord{node.center.x + d, node.center.y}, PixelCoord{node.center.x, node.center.y + d}}) {
        if (out.bounds().contains(p)) out.set(p.x, p.y, marker);
      }
    }
  }
  return out;
}

}  // namespace depthfill::lattice
