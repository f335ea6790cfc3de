#include "depthfill/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "depthfill/error.hpp"
#include "depthfill/parallel.hpp"

namespace depthfill::solver {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

double energy(const Mrf& mrf, std::span<const LabelIndex> assignment) {
  if (assignment.size() != mrf.node_count()) {
    throw InvalidArgument("assignment covers " + std::to_string(assignment.size()) + " of " +
                          std::to_string(mrf.node_count()) + " nodes");
  }
  double total = 0.0;
  for (NodeIndex p = 0; p < mrf.node_count(); ++p) {
    if (assignment[p] >= mrf.label_count(p)) throw InvalidArgument("node " + std::to_string(p) + " is unassigned");
    total += mrf.unary[p][assignment[p]];
  }
  for (std::size_t e = 0; e < mrf.edges.size(); ++e) {
    total += mrf.pairwise(e, assignment[mrf.edges[e].a], assignment[mrf.edges[e].b]);
  }
  return total;
}

void SolverParams::validate() const {
  if (!(b_conf <= 0.0)) throw InvalidArgument("bconf must be <= 0, got " + std::to_string(b_conf));
  if (labels_min < 1 || labels_min > labels_max) {
    throw InvalidArgument("labels-min/labels-max must satisfy 1 <= min <= max, got " + std::to_string(labels_min) +
                          "/" + std::to_string(labels_max));
  }
  if (max_iters < 1) throw InvalidArgument("iters must be >= 1");
  if (!(damping >= 0.0 && damping < 1.0)) throw InvalidArgument("damping must be in [0, 1)");
}

double default_b_conf(int patch_w, int patch_h) { return -0.15 * patch_w * patch_h * 4.0; }

double BeliefState::max_belief(NodeIndex p) const {
  double best = -kInf;
  for (const auto l : active_labels[p]) best = std::max(best, beliefs[p][l]);
  return best;
}

LabelIndex BeliefState::best_label(NodeIndex p) const {
  LabelIndex best = active_labels[p].front();
  for (const auto l : active_labels[p]) {
    if (beliefs[p][l] > beliefs[p][best]) best = l;
  }
  return best;
}

BeliefState init_beliefs(const Mrf& mrf) {
  BeliefState state;
  const std::size_t n = mrf.node_count();
  state.incidence.resize(n);
  state.messages.resize(2 * mrf.edges.size());
  for (std::size_t e = 0; e < mrf.edges.size(); ++e) {
    const auto [a, b] = mrf.edges[e];
    if (a >= n || b >= n || a == b) throw InvalidArgument("MRF edge " + std::to_string(e) + " is malformed");
    state.incidence[a].push_back({e, b, true});
    state.incidence[b].push_back({e, a, false});
  }
  state.beliefs.resize(n);
  state.active_labels.resize(n);
  state.committed.assign(n, false);
  for (NodeIndex p = 0; p < n; ++p) {
    if (mrf.label_count(p) == 0) throw InvalidArgument("node " + std::to_string(p) + " has no labels");
    state.active_labels[p].resize(mrf.label_count(p));
    for (LabelIndex l = 0; l < mrf.label_count(p); ++l) state.active_labels[p][l] = l;
    state.beliefs[p].resize(mrf.label_count(p));
    for (LabelIndex l = 0; l < mrf.label_count(p); ++l) state.beliefs[p][l] = -mrf.unary[p][l];
  }
  return state;
}

void update_belief(BeliefState& state, const Mrf& mrf, NodeIndex p) {
  auto& belief = state.beliefs[p];
  std::ranges::fill(belief, -kInf);
  const auto& active = state.active_labels[p];
  for (std::size_t k = 0; k < active.size(); ++k) {
    double acc = mrf.unary[p][active[k]];
    for (const auto& inc : state.incidence[p]) acc += state.incoming_at(inc, k);
    belief[active[k]] = -acc;
  }
}

std::size_t confident_label_count(const BeliefState& state, NodeIndex p, double b_conf) {
  const double top = state.max_belief(p);
  std::size_t count = 0;
  for (const auto l : state.active_labels[p]) {
    if (state.beliefs[p][l] - top >= b_conf) ++count;
  }
  return count;
}

double node_priority(const BeliefState& state, NodeIndex p, double b_conf) {
  return 1.0 / static_cast<double>(confident_label_count(state, p, b_conf));
}

void send_message(BeliefState& state, const Mrf& mrf, NodeIndex from, const BeliefState::Incidence& inc,
                  const SolverParams& params) {
  const NodeIndex to = inc.other;
  const auto& sender_labels = state.active_labels[from];
  const auto& receiver_labels = state.active_labels[to];

  // Sender-side cost without the receiver's own message.
  std::vector<double> h(sender_labels.size());
  for (std::size_t i = 0; i < sender_labels.size(); ++i) {
    double acc = mrf.unary[from][sender_labels[i]];
    for (const auto& other : state.incidence[from]) {
      if (other.edge != inc.edge) acc += state.incoming_at(other, i);
    }
    h[i] = acc;
  }

  std::vector<double> fresh(receiver_labels.size());
  if (mrf.message) {
    mrf.message(inc.edge, inc.is_a, sender_labels, h, receiver_labels, fresh);
  } else {
    parallel::parallel_for(receiver_labels.size(), [&](std::size_t j) {
      const LabelIndex lq = receiver_labels[j];
      double best = kInf;
      for (std::size_t i = 0; i < sender_labels.size(); ++i) {
        const LabelIndex lp = sender_labels[i];
        const double pair = inc.is_a ? mrf.pairwise(inc.edge, lp, lq) : mrf.pairwise(inc.edge, lq, lp);
        best = std::min(best, h[i] + pair);
      }
      fresh[j] = best;
    });
  }

  const double floor = *std::ranges::min_element(fresh);
  auto& message = state.messages[BeliefState::outgoing(inc)];
  if (message.empty()) message.assign(receiver_labels.size(), 0.0);
  for (std::size_t j = 0; j < receiver_labels.size(); ++j) {
    const double normalized = fresh[j] - floor;
    message[j] = params.damping == 0.0 ? normalized : (1.0 - params.damping) * normalized + params.damping * message[j];
  }
  update_belief(state, mrf, to);
}

std::size_t prune_labels(BeliefState& state, NodeIndex p, const SolverParams& params) {
  auto& active = state.active_labels[p];
  auto& belief = state.beliefs[p];
  const std::size_t confident = confident_label_count(state, p, params.b_conf);
  const std::size_t keep = std::min(active.size(), std::clamp(confident, params.labels_min, params.labels_max));
  if (keep == active.size()) return 0;

  // Positions into `active`, best belief first, then restored to label order.
  std::vector<std::size_t> kept(active.size());
  for (std::size_t k = 0; k < kept.size(); ++k) kept[k] = k;
  std::ranges::stable_sort(kept, [&](std::size_t a, std::size_t b) { return belief[active[a]] > belief[active[b]]; });
  kept.resize(keep);
  std::ranges::sort(kept);

  for (const auto& inc : state.incidence[p]) {
    auto& message = state.messages[BeliefState::incoming(inc)];
    if (message.empty()) continue;
    std::vector<double> compact(keep);
    for (std::size_t k = 0; k < keep; ++k) compact[k] = message[kept[k]];
    message = std::move(compact);
  }
  std::vector<LabelIndex> survivors(keep);
  for (std::size_t k = 0; k < keep; ++k) survivors[k] = active[kept[k]];
  for (std::size_t k = 0, s = 0; k < active.size(); ++k) {
    if (s < keep && kept[s] == k) {
      ++s;
    } else {
      belief[active[k]] = -kInf;
    }
  }
  const std::size_t removed = active.size() - keep;
  active = std::move(survivors);
  return removed;
}

SolveResult run_priority_bp(const Mrf& mrf, const SolverParams& params) {
  params.validate();
  SolveResult result;
  const std::size_t n = mrf.node_count();
  if (n == 0) {
    result.converged = true;
    return result;
  }

  BeliefState state = init_beliefs(mrf);
  std::vector<std::size_t> confident(n);
  std::vector<LabelIndex> previous;
  // The no-message argmin is the baseline every pass has to beat.
  for (NodeIndex p = 0; p < n; ++p) previous.push_back(state.best_label(p));
  result.assignment = previous;
  double best_energy = energy(mrf, previous);

  for (int iter = 0; iter < params.max_iters; ++iter) {
    std::fill(state.committed.begin(), state.committed.end(), false);
    for (NodeIndex p = 0; p < n; ++p) confident[p] = confident_label_count(state, p, params.b_conf);

    std::vector<NodeIndex> order;
    order.reserve(n);
    for (std::size_t step = 0; step < n; ++step) {
      // Highest priority = fewest confident labels; ties to the lowest id.
      NodeIndex next = n;
      for (NodeIndex p = 0; p < n; ++p) {
        if (state.committed[p]) continue;
        if (next == n || confident[p] < confident[next]) next = p;
      }
      result.labels_pruned += prune_labels(state, next, params);
      state.committed[next] = true;
      order.push_back(next);
      for (const auto& inc : state.incidence[next]) {
        send_message(state, mrf, next, inc, params);
        if (!state.committed[inc.other]) {
          confident[inc.other] = confident_label_count(state, inc.other, params.b_conf);
        }
      }
    }

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      for (const auto& inc : state.incidence[*it]) send_message(state, mrf, *it, inc, params);
    }

    std::vector<LabelIndex> assignment(n);
    for (NodeIndex p = 0; p < n; ++p) assignment[p] = state.best_label(p);
    const double e = energy(mrf, assignment);
    if (e < best_energy) {
      best_energy = e;
      result.assignment = assignment;
    }
    result.converged = assignment == previous;
    previous = std::move(assignment);
    result.commit_order = std::move(order);
    ++result.passes;
  }
  result.energy = best_energy;
  return result;
}

std::vector<LabelIndex> brute_force_solve(const Mrf& mrf) {
  const std::size_t n = mrf.node_count();
  std::size_t total = 1;
  for (NodeIndex p = 0; p < n; ++p) {
    if (mrf.label_count(p) == 0) throw InvalidArgument("node " + std::to_string(p) + " has no labels");
    if (total > kBruteForceLimit / mrf.label_count(p)) {
      throw InvalidArgument("brute force limited to " + std::to_string(kBruteForceLimit) + " assignments");
    }
    total *= mrf.label_count(p);
  }

  std::vector<LabelIndex> current(n, 0);
  std::vector<LabelIndex> best = current;
  double best_energy = kInf;
  for (std::size_t k = 0; k < total; ++k) {
    const double e = energy(mrf, current);
    if (e < best_energy) {
      best_energy = e;
      best = current;
    }
    // Odometer with the last node fastest: lexicographic enumeration.
    for (std::size_t p = n; p-- > 0;) {
      if (++current[p] < mrf.label_count(p)) break;
      current[p] = 0;
    }
  }
  return best;
}

}  // namespace depthfill::solver
