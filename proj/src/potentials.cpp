#include "depthfill/potentials.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "depthfill/error.hpp"
#include "depthfill/parallel.hpp"

namespace depthfill::potentials {
namespace {

void require_inside(const Plane& plane, const Rect& footprint, const char* what) {
  if (!plane.bounds().contains(footprint)) {
    throw InvalidArgument(std::string(what) + " footprint at (" + std::to_string(footprint.x0) + ", " +
                          std::to_string(footprint.y0) + ") leaves the image");
  }
}

// SSD between plane(a0 + t) and plane(b0 + t) for t in [0, w) x [0, h).
double region_ssd(const Plane& plane, PixelCoord a0, PixelCoord b0, int w, int h) {
  const int n = w * plane.channels();
  double total = 0.0;
  for (int y = 0; y < h; ++y) {
    const float* pa = plane.row(a0.x, a0.y + y);
    const float* pb = plane.row(b0.x, b0.y + y);
    float row = 0.f;
    for (int i = 0; i < n; ++i) {
      const float d = pa[i] - pb[i];
      row += d * d;
    }
    total += row;
  }
  return total;
}

}  // namespace

void EnergyParams::validate() const {
  auto check = [](double v, const char* key) {
    if (!std::isfinite(v) || v < 0.0) {
      throw InvalidArgument(std::string(key) + " must be finite and >= 0, got " + std::to_string(v));
    }
  };
  check(lambda_d, "lambda-d");
  check(w0, "w0");
  if (std::isnan(depth_prune_delta) || depth_prune_delta < 0.0) {
    throw InvalidArgument("depth-delta must be >= 0, got " + std::to_string(depth_prune_delta));
  }
}

double default_w0(const lattice::LatticeConfig& cfg) { return 0.02 * cfg.patch_w * cfg.patch_h; }

Scene::Scene(const Image& img, const DepthMap& filled_depth, HoleMask m)
    : color(to_plane(img)), depth(to_plane(filled_depth)), mask(std::move(m)) {
  if (img.width() != mask.width() || img.height() != mask.height() || filled_depth.width() != mask.width() ||
      filled_depth.height() != mask.height()) {
    throw InvalidArgument("image, depth and mask dimensions differ");
  }
}

double masked_ssd(const Plane& plane, const HoleMask& mask, PixelCoord p, PixelCoord x_p,
                  const lattice::LatticeConfig& cfg) {
  const Rect target = cfg.footprint(p);
  const Rect source = cfg.footprint(x_p);
  require_inside(plane, target, "node");
  require_inside(plane, source, "label");
  const int channels = plane.channels();
  double total = 0.0;
  for (int y = 0; y < cfg.patch_h; ++y) {
    const float* pt = plane.row(target.x0, target.y0 + y);
    const float* ps = plane.row(source.x0, source.y0 + y);
    float row = 0.f;
    for (int x = 0; x < cfg.patch_w; ++x) {
      if (!mask.known(target.x0 + x, target.y0 + y)) continue;
      for (int c = 0; c < channels; ++c) {
        const float d = pt[x * channels + c] - ps[x * channels + c];
        row += d * d;
      }
    }
    total += row;
  }
  return total;
}

double node_potential_image(const Plane& color, const HoleMask& mask, PixelCoord p, PixelCoord x_p,
                            const lattice::LatticeConfig& cfg) {
  return masked_ssd(color, mask, p, x_p, cfg);
}

double node_potential_depth(const Plane& depth, const HoleMask& mask, PixelCoord p, PixelCoord x_p,
                            const lattice::LatticeConfig& cfg) {
  return masked_ssd(depth, mask, p, x_p, cfg);
}

double node_potential(const lattice::Node& node, const lattice::Label& label, const EnergyParams& params,
                      const Scene& scene, const lattice::LatticeConfig& cfg) {
  if (node.mode == lattice::PotentialMode::zeroed) return 0.0;
  double v = node_potential_image(scene.color, scene.mask, node.center, label.source_center, cfg);
  if (params.lambda_d != 0.0) {
    v += params.lambda_d * node_potential_depth(scene.depth, scene.mask, node.center, label.source_center, cfg);
  }
  return v;
}

double pairwise_potential(const Plane& plane, PixelCoord p, PixelCoord q, PixelCoord x_p, PixelCoord x_q,
                          const lattice::LatticeConfig& cfg) {
  const Rect overlap = intersect(cfg.footprint(p), cfg.footprint(q));
  if (overlap.empty()) throw InvalidArgument("pairwise potential requested for nodes whose patches do not overlap");
  const PixelCoord t0{overlap.x0, overlap.y0};
  const PixelCoord a0 = x_p + (t0 - p);
  const PixelCoord b0 = x_q + (t0 - q);
  require_inside(plane, {a0.x, a0.y, a0.x + overlap.width(), a0.y + overlap.height()}, "label");
  require_inside(plane, {b0.x, b0.y, b0.x + overlap.width(), b0.y + overlap.height()}, "label");
  return region_ssd(plane, a0, b0, overlap.width(), overlap.height());
}

double coherence_term(PixelCoord p, PixelCoord q, PixelCoord x_p, PixelCoord x_q, const EnergyParams& params) {
  return (x_p - x_q) == (p - q) ? 0.0 : params.w0;
}

lattice::PatchLattice prune_labels_by_depth(lattice::PatchLattice lattice, const EnergyParams& params,
                                            std::size_t min_labels) {
  for (std::size_t n = 0; n < lattice.nodes.size(); ++n) {
    const double ref = lattice.nodes[n].ref_depth;
    auto& ids = lattice.node_labels[n];
    auto gap = [&](lattice::LabelId id) { return std::abs(lattice.labels[id].mean_depth - ref); };

    std::vector<lattice::LabelId> kept;
    for (const auto id : ids) {
      if (gap(id) <= params.depth_prune_delta) kept.push_back(id);
    }
    if (kept.size() < min_labels) {
      kept = ids;
      std::ranges::stable_sort(kept, [&](auto a, auto b) { return gap(a) < gap(b); });
      kept.resize(std::min(min_labels, kept.size()));
      std::ranges::sort(kept);
    }
    ids = std::move(kept);
  }
  return lattice;
}

EnergyModel::EnergyModel(const lattice::PatchLattice& lattice, const Scene& scene, const EnergyParams& params)
    : lattice_(lattice), scene_(scene), params_(params) {
  params_.validate();
  if (lattice_.node_labels.size() != lattice_.nodes.size()) {
    throw InvalidArgument("lattice has no label sets attached");
  }
  const bool with_depth = params_.lambda_d != 0.0;
  const int width = scene_.color.width();
  const int height = scene_.color.height();
  features_ = Plane(width, height, with_depth ? 4 : 3);
  const auto depth_scale = static_cast<float>(std::sqrt(params_.lambda_d));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) features_.at(x, y, c) = scene_.color.at(x, y, c);
      if (with_depth) features_.at(x, y, 3) = depth_scale * scene_.depth.at(x, y);
    }
  }
  const int channels = features_.channels();
  const std::size_t stride = static_cast<std::size_t>(width + 1) * channels;
  row_prefix_.assign(stride * height, 0.0);
  for (int y = 0; y < height; ++y) {
    double* prefix = &row_prefix_[y * stride];
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) prefix[(x + 1) * channels + c] = prefix[x * channels + c] + features_.at(x, y, c);
    }
  }
}

void EnergyModel::add_row_sum(PixelCoord at, int w, double* out) const {
  const int channels = features_.channels();
  const double* row = &row_prefix_[static_cast<std::size_t>(at.y) * (features_.width() + 1) * channels];
  const double* lo = row + static_cast<std::size_t>(at.x) * channels;
  const double* hi = lo + static_cast<std::size_t>(w) * channels;
  for (int c = 0; c < channels; ++c) out[c] += hi[c] - lo[c];
}

std::vector<std::vector<double>> EnergyModel::node_tables() const {
  std::vector<std::vector<double>> tables(lattice_.nodes.size());
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t n = 0; n < lattice_.nodes.size(); ++n) {
    tables[n].assign(lattice_.node_labels[n].size(), 0.0);
    if (lattice_.nodes[n].mode == lattice::PotentialMode::zeroed) continue;
    for (std::size_t k = 0; k < tables[n].size(); ++k) jobs.emplace_back(n, k);
  }
  parallel::parallel_for(jobs.size(), [&](std::size_t j) {
    const auto [n, k] = jobs[j];
    const auto& label = lattice_.labels[lattice_.node_labels[n][k]];
    tables[n][k] = node_potential(lattice_.nodes[n], label, params_, scene_, lattice_.config);
  });
  return tables;
}

double EnergyModel::edge_pairwise(std::size_t e, lattice::LabelId la, lattice::LabelId lb) const {
  const auto& edge = lattice_.edges[e];
  const PixelCoord p = lattice_.nodes[edge.a].center;
  const PixelCoord q = lattice_.nodes[edge.b].center;
  const PixelCoord xp = lattice_.labels[la].source_center;
  const PixelCoord xq = lattice_.labels[lb].source_center;
  double v = pairwise_potential(scene_.color, p, q, xp, xq, lattice_.config);
  if (params_.lambda_d != 0.0) v += params_.lambda_d * pairwise_potential(scene_.depth, p, q, xp, xq, lattice_.config);
  return v;
}

double EnergyModel::edge_coherence(std::size_t e, lattice::LabelId la, lattice::LabelId lb) const {
  const auto& edge = lattice_.edges[e];
  return coherence_term(lattice_.nodes[edge.a].center, lattice_.nodes[edge.b].center,
                        lattice_.labels[la].source_center, lattice_.labels[lb].source_center, params_);
}

double EnergyModel::edge_cost(std::size_t e, lattice::LabelId la, lattice::LabelId lb) const {
  return edge_pairwise(e, la, lb) + edge_coherence(e, la, lb);
}

solver::Mrf EnergyModel::build_mrf() const {
  solver::Mrf mrf;
  mrf.unary = node_tables();
  mrf.edges.reserve(lattice_.edges.size());
  for (const auto& e : lattice_.edges) mrf.edges.push_back({e.a, e.b});
  // Captures this model; the model, lattice and scene must outlive the MRF.
  mrf.pairwise = [this](std::size_t e, solver::LabelIndex la, solver::LabelIndex lb) {
    const auto& edge = lattice_.edges[e];
    return edge_cost(e, lattice_.node_labels[edge.a][la], lattice_.node_labels[edge.b][lb]);
  };
  mrf.message = [this](std::size_t e, bool sender_is_a, std::span<const solver::LabelIndex> sender_labels,
                       std::span<const double> h, std::span<const solver::LabelIndex> receiver_labels,
                       std::span<double> out) { min_message(e, sender_is_a, sender_labels, h, receiver_labels, out); };
  return mrf;
}

void EnergyModel::min_message(std::size_t e, bool sender_is_a, std::span<const solver::LabelIndex> sender_labels,
                              std::span<const double> h, std::span<const solver::LabelIndex> receiver_labels,
                              std::span<double> out) const {
  const auto& edge = lattice_.edges[e];
  const lattice::NodeId s = sender_is_a ? edge.a : edge.b;
  const lattice::NodeId r = sender_is_a ? edge.b : edge.a;
  const PixelCoord ps = lattice_.nodes[s].center;
  const PixelCoord pr = lattice_.nodes[r].center;
  const auto& cfg = lattice_.config;
  const Rect overlap = intersect(cfg.footprint(ps), cfg.footprint(pr));
  if (overlap.empty()) throw InvalidArgument("pairwise potential requested for nodes whose patches do not overlap");
  const PixelCoord corner{overlap.x0, overlap.y0};
  const PixelCoord from_s = corner - ps;
  const PixelCoord from_r = corner - pr;
  const int rows = overlap.height();
  const int row_len = overlap.width() * features_.channels();
  const std::size_t block = static_cast<std::size_t>(rows) * row_len;

  std::vector<std::size_t> order(sender_labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return h[a] < h[b]; });

  // Sender overlap content, one contiguous block per sender label.
  const int width = overlap.width();
  const int channels = features_.channels();

  // Sender overlap content, one contiguous block per sender label, plus its
  // channel sums.
  std::vector<float> blocks(order.size() * block);
  std::vector<double> sender_totals(order.size() * channels, 0.0);
  std::vector<PixelCoord> sources(order.size());
  std::vector<double> base(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    sources[k] = source_of(s, sender_labels[order[k]]);
    base[k] = h[order[k]];
    const PixelCoord at = sources[k] + from_s;
    for (int y = 0; y < rows; ++y) {
      const float* src = features_.row(at.x, at.y + y);
      std::copy(src, src + row_len, blocks.begin() + static_cast<std::ptrdiff_t>(k * block + y * row_len));
      add_row_sum({at.x, at.y + y}, width, &sender_totals[k * channels]);
    }
  }

  const PixelCoord coherent_offset = ps - pr;
  // Cauchy-Schwarz: the SSD of n pixels is at least sum_c (sum difference)^2 / n.
  // Slightly loosened so float rounding never prunes the true minimum.
  const double inv_block = (1.0 - 1e-6) / (static_cast<double>(width) * rows);
  const double w0 = params_.w0;
  parallel::parallel_for(receiver_labels.size(), [&](std::size_t j) {
    // Neighbouring receiver labels are neighbouring patches, so the previous
    // winner on this thread is tried first to tighten the bound early.
    thread_local std::size_t hint = 0;
    const PixelCoord xr = source_of(r, receiver_labels[j]);
    const PixelCoord at = xr + from_r;
    const PixelCoord coherent_source = xr + coherent_offset;
    std::array<double, 4> own{};
    for (int y = 0; y < rows; ++y) add_row_sum({at.x, at.y + y}, width, own.data());

    double best = std::numeric_limits<double>::infinity();
    std::size_t winner = 0;
    auto consider = [&](std::size_t k) {
      const double fixed = base[k] + (sources[k] == coherent_source ? 0.0 : w0);
      const double budget = best - fixed;
      if (budget <= 0.0) return;
      double bound = 0.0;
      for (int c = 0; c < channels; ++c) {
        const double d = sender_totals[k * channels + c] - own[c];
        bound += d * d;
      }
      if (bound * inv_block >= budget) return;
      const float* a = &blocks[k * block];
      double ssd = 0.0;
      for (int y = 0; y < rows && ssd < budget; ++y, a += row_len) {
        const float* b = features_.row(at.x, at.y + y);
        float acc[4] = {0.f, 0.f, 0.f, 0.f};
        int i = 0;
        for (; i + 4 <= row_len; i += 4) {
          for (int lane = 0; lane < 4; ++lane) {
            const float d = a[i + lane] - b[i + lane];
            acc[lane] += d * d;
          }
        }
        for (; i < row_len; ++i) {
          const float d = a[i] - b[i];
          acc[0] += d * d;
        }
        ssd += (acc[0] + acc[1]) + (acc[2] + acc[3]);
      }
      if (ssd < budget) {
        best = fixed + ssd;
        winner = k;
      }
    };
    if (hint >= order.size()) hint = 0;
    consider(hint);
    for (std::size_t k = 0; k < order.size() && base[k] < best; ++k) {
      if (k != hint) consider(k);
    }
    hint = winner;
    out[j] = best;
  });
}

EnergyBreakdown EnergyModel::total_energy(std::span<const lattice::LabelId> assignment) const {
  if (assignment.size() != lattice_.nodes.size()) {
    throw InvalidArgument("assignment covers " + std::to_string(assignment.size()) + " of " +
                          std::to_string(lattice_.nodes.size()) + " nodes");
  }
  for (const auto id : assignment) {
    if (id >= lattice_.labels.size()) throw InvalidArgument("assignment contains an unassigned node");
  }
  EnergyBreakdown out;
  for (std::size_t n = 0; n < lattice_.nodes.size(); ++n) {
    out.node += node_potential(lattice_.nodes[n], lattice_.labels[assignment[n]], params_, scene_, lattice_.config);
  }
  for (std::size_t e = 0; e < lattice_.edges.size(); ++e) {
    const auto& edge = lattice_.edges[e];
    out.pairwise += edge_pairwise(e, assignment[edge.a], assignment[edge.b]);
    out.coherence += edge_coherence(e, assignment[edge.a], assignment[edge.b]);
  }
  return out;
}

std::vector<lattice::LabelId> EnergyModel::to_label_ids(std::span<const solver::LabelIndex> local) const {
  std::vector<lattice::LabelId> ids(local.size());
  for (std::size_t n = 0; n < local.size(); ++n) ids[n] = lattice_.node_labels[n].at(local[n]);
  return ids;
}

}  // namespace depthfill::potentials
