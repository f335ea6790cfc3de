#include "depthfill/pipeline.hpp"

#include <algorithm>

#include "depthfill/error.hpp"

namespace depthfill::pipeline {

void InpaintConfig::validate() const {
  lattice.validate();
  energy.validate();
  solver.validate();
}

InpaintConfig default_inpaint_config(const lattice::LatticeConfig& lattice) {
  InpaintConfig cfg;
  cfg.lattice = lattice;
  cfg.energy.w0 = potentials::default_w0(lattice);
  cfg.solver.b_conf = solver::default_b_conf(lattice.patch_w, lattice.patch_h);
  return cfg;
}

InpaintResult inpaint(const Image& image, const DepthMap& depth, const HoleMask& holes, const dibr::WarpConfig& warp,
                      const InpaintConfig& cfg) {
  cfg.validate();
  if (image.width() != depth.width() || image.height() != depth.height() || image.width() != holes.width() ||
      image.height() != holes.height()) {
    throw InvalidArgument("virtual image, depth and mask dimensions differ");
  }

  InpaintResult result;
  if (!holes.any_hole()) {
    result.completed = image;
    result.completed_depth = depth;
    result.filled_depth = depth;
    result.lattice.config = cfg.lattice;
    result.solve.converged = true;
    return result;
  }

  result.filled_depth = dibr::fill_depth_holes(depth, holes, warp);
  result.lattice = lattice::build_lattice(holes, cfg.lattice);
  auto labels = lattice::enumerate_labels(image, holes, result.filled_depth, cfg.lattice);
  result.candidate_labels = labels.size();
  lattice::attach_labels(result.lattice, std::move(labels), result.filled_depth, holes);
  if (cfg.classify_nodes) result.lattice = lattice::classify_nodes(std::move(result.lattice), result.filled_depth, holes);
  result.lattice = potentials::prune_labels_by_depth(std::move(result.lattice), cfg.energy, cfg.solver.labels_min);
  for (const auto& node : result.lattice.nodes) {
    if (node.mode == lattice::PotentialMode::zeroed) ++result.zeroed_nodes;
  }
  for (const auto& ids : result.lattice.node_labels) result.labels_after_depth_pruning += ids.size();

  const potentials::Scene scene(image, result.filled_depth, holes);
  const potentials::EnergyModel model(result.lattice, scene, cfg.energy);
  const solver::Mrf mrf = model.build_mrf();
  result.solve = solver::run_priority_bp(mrf, cfg.solver);
  result.solver_invoked = true;
  result.assignment = model.to_label_ids(result.solve.assignment);
  result.energy = model.total_energy(result.assignment);

  result.completed = compositor::composite(image, holes, result.lattice, result.assignment, cfg.composite);
  result.completed_depth =
      compositor::composite_depth(result.filled_depth, holes, result.lattice, result.assignment, cfg.composite);
  return result;
}

}  // namespace depthfill::pipeline
