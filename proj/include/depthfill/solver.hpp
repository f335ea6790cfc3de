#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace depthfill::solver {

using NodeIndex = std::size_t;
// Index into a node's own label list (not a global label id).
using LabelIndex = std::size_t;

struct MrfEdge {
  NodeIndex a = 0;
  NodeIndex b = 0;
};

// Pairwise cost of edge `edge` when its node `a` takes label `la` and its
// node `b` takes label `lb`. Must be pure and thread-safe.
using PairwiseFn = std::function<double(std::size_t edge, LabelIndex la, LabelIndex lb)>;

// Optional batched form of the message minimization over edge `edge`:
//   out[j] = min_i h[i] + pairwise(sender_labels[i], receiver_labels[j])
// with the pairwise arguments in edge order. `sender_is_a` tells which end
// sends. Must agree with `pairwise` and be deterministic.
using MessageFn = std::function<void(std::size_t edge, bool sender_is_a, std::span<const LabelIndex> sender_labels,
                                     std::span<const double> h, std::span<const LabelIndex> receiver_labels,
                                     std::span<double> out)>;

// Discrete pairwise MRF in energy (min-sum) form:
//   E(x) = sum_p unary[p][x_p] + sum_(a,b) pairwise(e, x_a, x_b).
struct Mrf {
  std::vector<std::vector<double>> unary;
  std::vector<MrfEdge> edges;
  PairwiseFn pairwise;
  // When set, used by send_message instead of calling `pairwise` per pair.
  MessageFn message;

  [[nodiscard]] std::size_t node_count() const { return unary.size(); }
  [[nodiscard]] std::size_t label_count(NodeIndex p) const { return unary[p].size(); }
};

// Throws InvalidArgument when the assignment is incomplete or out of range.
[[nodiscard]] double energy(const Mrf& mrf, std::span<const LabelIndex> assignment);

struct SolverParams {
  // Confidence threshold on relative belief; labels with b_rel >= b_conf
  // count as confident. Must be <= 0.
  double b_conf = -117.6;
  std::size_t labels_min = 3;
  std::size_t labels_max = 50;
  // Number of forward/backward pass pairs.
  int max_iters = 2;
  // Message update is (1 - damping) * new + damping * old.
  double damping = 0.0;

  void validate() const;
};

// b_conf default: -0.15 * w * h * 4 channel-equivalents.
[[nodiscard]] double default_b_conf(int patch_w, int patch_h);

// Message and belief bookkeeping for priority BP. Messages are indexed by
// directed edge: 2e carries a->b, 2e+1 carries b->a. Entry k of a message
// belongs to the receiver's k-th active label; an empty message is all
// zeros. Pruning a node compacts its incoming messages. Beliefs are indexed
// by label, b_p = -(V_p + sum of incoming messages), and are -inf on
// inactive labels.
struct BeliefState {
  struct Incidence {
    std::size_t edge;
    NodeIndex other;
    bool is_a;  // this node is endpoint `a` of the edge
  };

  std::vector<std::vector<double>> messages;
  std::vector<std::vector<double>> beliefs;
  std::vector<std::vector<LabelIndex>> active_labels;
  std::vector<bool> committed;
  std::vector<std::vector<Incidence>> incidence;

  [[nodiscard]] std::size_t node_count() const { return beliefs.size(); }
  // Directed message index for the message sent from `from` along `inc`.
  [[nodiscard]] static std::size_t outgoing(const Incidence& inc) { return 2 * inc.edge + (inc.is_a ? 0 : 1); }
  [[nodiscard]] static std::size_t incoming(const Incidence& inc) { return 2 * inc.edge + (inc.is_a ? 1 : 0); }

  // Incoming message value along `inc` for the receiver's k-th active label.
  [[nodiscard]] double incoming_at(const Incidence& inc, std::size_t k) const {
    const auto& m = messages[incoming(inc)];
    return m.empty() ? 0.0 : m[k];
  }
  // Largest belief over active labels.
  [[nodiscard]] double max_belief(NodeIndex p) const;
  // b_p(l) - max belief.
  [[nodiscard]] double relative_belief(NodeIndex p, LabelIndex l) const { return beliefs[p][l] - max_belief(p); }
  // Active label with the largest belief, lowest index on ties.
  [[nodiscard]] LabelIndex best_label(NodeIndex p) const;
};

// All messages empty (zero), every label active, b_p = -V_p.
[[nodiscard]] BeliefState init_beliefs(const Mrf& mrf);

// Recomputes b_p from unary and incoming messages.
void update_belief(BeliefState& state, const Mrf& mrf, NodeIndex p);

// Number of active labels with b_rel >= b_conf (always >= 1).
[[nodiscard]] std::size_t confident_label_count(const BeliefState& state, NodeIndex p, double b_conf);

// 1 / confident_label_count. Higher means the node is more certain.
[[nodiscard]] double node_priority(const BeliefState& state, NodeIndex p, double b_conf);

// Min-sum message from `from` over incidence `inc`:
//   m(x_q) = min over active x_p of [V_p(x_p) + V_pq(x_p, x_q) + sum_{r != q} m_{r->p}(x_p)]
// evaluated on the receiver's active labels, shifted so its minimum is 0,
// then blended with the previous message by `damping`. Updates the
// receiver's belief.
void send_message(BeliefState& state, const Mrf& mrf, NodeIndex from, const BeliefState::Incidence& inc,
                  const SolverParams& params);

// Keeps active labels with b_rel >= b_conf, clamped to [labels_min,
// labels_max] by descending belief (ties to lower index). The max-belief
// label always survives. Returns the number of labels removed.
std::size_t prune_labels(BeliefState& state, NodeIndex p, const SolverParams& params);

struct SolveResult {
  std::vector<LabelIndex> assignment;
  double energy = 0.0;
  int passes = 0;
  std::size_t labels_pruned = 0;
  // False when the per-pass assignment was still changing after the last
  // pass; the lowest-energy assignment seen is returned either way.
  bool converged = false;
  std::vector<NodeIndex> commit_order;
};

// Priority belief propagation with dynamic label pruning. Each iteration is
// a forward pass (commit uncommitted nodes in descending priority, prune,
// send messages to all neighbours) followed by a backward pass over the
// commit order in reverse (messages only). The result is the lowest-energy
// per-pass argmax, never worse than the per-node argmin of the unary terms.
// Deterministic for fixed inputs.
[[nodiscard]] SolveResult run_priority_bp(const Mrf& mrf, const SolverParams& params);

inline constexpr std::size_t kBruteForceLimit = 1'000'000;

// Exhaustive minimum of energy(); ties go to the lexicographically smallest
// assignment. Throws InvalidArgument above kBruteForceLimit assignments.
[[nodiscard]] std::vector<LabelIndex> brute_force_solve(const Mrf& mrf);

}  // namespace depthfill::solver
