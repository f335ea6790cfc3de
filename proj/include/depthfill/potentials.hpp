#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "depthfill/geometry.hpp"
#include "depthfill/imaging.hpp"
#include "depthfill/lattice.hpp"
#include "depthfill/solver.hpp"

namespace depthfill::potentials {

struct EnergyParams {
  // Weight of the depth SSD relative to the color SSD.
  double lambda_d = 3.0;
  // Penalty for adjacent nodes not filled from adjacent source patches.
  double w0 = 0.02 * 14 * 14;
  // Labels whose mean depth differs from the node's reference depth by more
  // than this (normalized units) are pruned.
  double depth_prune_delta = 0.1;

  void validate() const;
};

// w0 = 0.02 * w * h.
[[nodiscard]] double default_w0(const lattice::LatticeConfig& cfg);

// Normalized inputs shared by all potential evaluations. `depth` must be the
// hole-filled depth map.
struct Scene {
  Plane color;
  Plane depth;
  HoleMask mask;

  Scene(const Image& img, const DepthMap& filled_depth, HoleMask mask);
};

// Masked SSD between the footprint around `p` and the one around `x_p`:
//   sum_dp M(p + dp) * |plane(p + dp) - plane(x_p + dp)|^2, all channels.
[[nodiscard]] double masked_ssd(const Plane& plane, const HoleMask& mask, PixelCoord p, PixelCoord x_p,
                                const lattice::LatticeConfig& cfg);

// Color term V_I of the node potential.
[[nodiscard]] double node_potential_image(const Plane& color, const HoleMask& mask, PixelCoord p, PixelCoord x_p,
                                          const lattice::LatticeConfig& cfg);
// Depth term V_D of the node potential.
[[nodiscard]] double node_potential_depth(const Plane& depth, const HoleMask& mask, PixelCoord p, PixelCoord x_p,
                                          const lattice::LatticeConfig& cfg);
// V_I + lambda_d * V_D, or exactly 0 for a zeroed node.
[[nodiscard]] double node_potential(const lattice::Node& node, const lattice::Label& label, const EnergyParams& params,
                                    const Scene& scene, const lattice::LatticeConfig& cfg);

// SSD over the overlap of the footprints of p and q between the content of
// the patches x_p and x_q placed there. Throws when the footprints do not
// overlap.
[[nodiscard]] double pairwise_potential(const Plane& plane, PixelCoord p, PixelCoord q, PixelCoord x_p, PixelCoord x_q,
                                        const lattice::LatticeConfig& cfg);

// w0 unless x_p - x_q == p - q.
[[nodiscard]] double coherence_term(PixelCoord p, PixelCoord q, PixelCoord x_p, PixelCoord x_q,
                                    const EnergyParams& params);

// Keeps, per node, labels with |ref_depth - mean_depth| <= depth_prune_delta.
// If fewer than `min_labels` survive, the `min_labels` labels closest in
// depth are kept instead (ties to the lower label id).
[[nodiscard]] lattice::PatchLattice prune_labels_by_depth(lattice::PatchLattice lattice, const EnergyParams& params,
                                                          std::size_t min_labels);

struct EnergyBreakdown {
  double node = 0.0;
  // Color overlap SSD plus lambda_d times depth overlap SSD.
  double pairwise = 0.0;
  double coherence = 0.0;
  [[nodiscard]] double total() const { return node + pairwise + coherence; }
};

// Energy terms for one lattice over one scene. Builds the solver's MRF with
// precomputed node-potential tables.
class EnergyModel {
 public:
  EnergyModel(const lattice::PatchLattice& lattice, const Scene& scene, const EnergyParams& params);

  [[nodiscard]] const lattice::PatchLattice& lattice() const { return lattice_; }
  [[nodiscard]] const EnergyParams& params() const { return params_; }

  // Node potential table, parallel over node x label, schedule independent.
  [[nodiscard]] std::vector<std::vector<double>> node_tables() const;
  // Full pairwise term for edge `e` with global label ids.
  [[nodiscard]] double edge_cost(std::size_t e, lattice::LabelId la, lattice::LabelId lb) const;
  [[nodiscard]] solver::Mrf build_mrf() const;

  // Batched min-sum message over edge `e` (see solver::MessageFn), with
  // per-node label indices. Sender labels are visited in ascending `h` and
  // overlap sums stop as soon as they cannot beat the running minimum.
  void min_message(std::size_t e, bool sender_is_a, std::span<const solver::LabelIndex> sender_labels,
                   std::span<const double> h, std::span<const solver::LabelIndex> receiver_labels,
                   std::span<double> out) const;

  // Breakdown of F for an assignment of global label ids, one per node.
  // Each undirected edge is counted once.
  [[nodiscard]] EnergyBreakdown total_energy(std::span<const lattice::LabelId> assignment) const;
  // Converts the solver's per-node label indices to global label ids.
  [[nodiscard]] std::vector<lattice::LabelId> to_label_ids(std::span<const solver::LabelIndex> local) const;

 private:
  [[nodiscard]] double edge_pairwise(std::size_t e, lattice::LabelId la, lattice::LabelId lb) const;
  [[nodiscard]] double edge_coherence(std::size_t e, lattice::LabelId la, lattice::LabelId lb) const;

  [[nodiscard]] PixelCoord source_of(lattice::NodeId n, solver::LabelIndex l) const {
    return lattice_.labels[lattice_.node_labels[n][l]].source_center;
  }

  const lattice::PatchLattice& lattice_;
  const Scene& scene_;
  EnergyParams params_;
  // Color channels followed by sqrt(lambda_d) * depth, so one SSD over it
  // equals color SSD + lambda_d * depth SSD.
  Plane features_;
  // Running sums of features_ along each row, width + 1 entries per row.
  std::vector<double> row_prefix_;

  // Adds the channel sums of the `w` pixels starting at `at` to `out`.
  void add_row_sum(PixelCoord at, int w, double* out) const;
};

}  // namespace depthfill::potentials
