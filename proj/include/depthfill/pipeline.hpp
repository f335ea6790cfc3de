#pragma once

#include <cstddef>
#include <vector>

#include "depthfill/compositor.hpp"
#include "depthfill/dibr.hpp"
#include "depthfill/imaging.hpp"
#include "depthfill/lattice.hpp"
#include "depthfill/potentials.hpp"
#include "depthfill/solver.hpp"

namespace depthfill::pipeline {

struct InpaintConfig {
  lattice::LatticeConfig lattice;
  potentials::EnergyParams energy;
  solver::SolverParams solver;
  compositor::CompositeConfig composite;
  // Zero the node potential of foreground-side border nodes.
  bool classify_nodes = true;

  void validate() const;
};

// Defaults with w0 and b_conf derived from the patch size.
[[nodiscard]] InpaintConfig default_inpaint_config(const lattice::LatticeConfig& lattice = {});

struct InpaintResult {
  Image completed;
  DepthMap completed_depth;
  // Warped depth with holes extrapolated from the background side.
  DepthMap filled_depth;
  lattice::PatchLattice lattice;
  // Global label id per node.
  std::vector<lattice::LabelId> assignment;
  potentials::EnergyBreakdown energy;
  solver::SolveResult solve;
  bool solver_invoked = false;
  std::size_t zeroed_nodes = 0;
  std::size_t candidate_labels = 0;
  // Sum over nodes of labels surviving depth pruning.
  std::size_t labels_after_depth_pruning = 0;
};

// Fills the holes of a warped view. `warp` only supplies the camera
// movement direction used to extrapolate depth into the holes. With no
// holes the input is returned unchanged and the solver is not run.
[[nodiscard]] InpaintResult inpaint(const Image& image, const DepthMap& depth, const HoleMask& holes,
                                    const dibr::WarpConfig& warp, const InpaintConfig& cfg);

}  // namespace depthfill::pipeline
