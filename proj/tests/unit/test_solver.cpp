#include <algorithm>
#include <cmath>
#include <random>

#include "depthfill/error.hpp"
#include "depthfill/parallel.hpp"
#include "depthfill/solver.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace depthfill;
using namespace depthfill::solver;
namespace t = depthfill::testing;

namespace {

SolverParams no_pruning(std::size_t labels) {
  SolverParams p;
  p.labels_min = p.labels_max = labels;
  p.b_conf = -1.0;
  return p;
}

}  // namespace

TEST_CASE("init beliefs are negated unaries with zero messages") {
  const auto m = t::make_table_mrf({{0.0, 0.0, 0.0}, {0.2, 0.5, 0.1}}, {{0, 1}}, {std::vector<double>(9, 0.0)});
  const auto state = init_beliefs(m.mrf);
  for (const auto& msg : state.messages) {
    for (const double v : msg) CHECK(v == 0.0);
  }
  for (LabelIndex l = 0; l < 3; ++l) CHECK(state.relative_belief(0, l) == 0.0);
  CHECK(state.best_label(1) == 2);
  CHECK(state.relative_belief(1, 2) == 0.0);
  CHECK(state.relative_belief(1, 0) < 0.0);
  CHECK(state.relative_belief(1, 1) < 0.0);
}

TEST_CASE("node priority counts confident labels") {
  const auto m = t::make_table_mrf({{0.0, 5.0, 5.0}, {0.0, 0.0, 0.0, 0.0}, {1.0, 1.0}},
                                   {{0, 1}, {1, 2}}, {std::vector<double>(12, 0.0), std::vector<double>(8, 0.0)});
  const auto state = init_beliefs(m.mrf);
  CHECK(node_priority(state, 0, -1.0) == 1.0);
  CHECK(node_priority(state, 1, -1.0) == doctest::Approx(0.25));
  CHECK(node_priority(state, 2, -1.0) == doctest::Approx(0.5));
}

TEST_CASE("send_message hand example") {
  // V_p = [0, 1]; pairwise[lp][lq] = [[0.5, 2.0], [0.0, 0.3]]
  // m(0) = min(0.5, 1.0) = 0.5, m(1) = min(2.0, 1.3) = 1.3 -> [0, 0.8].
  const auto m = t::make_table_mrf({{0.0, 1.0}, {0.0, 0.0}}, {{0, 1}}, {{0.5, 2.0, 0.0, 0.3}});
  auto state = init_beliefs(m.mrf);
  send_message(state, m.mrf, 0, state.incidence[0][0], SolverParams{});
  const auto& msg = state.messages[0];
  CHECK(msg[0] == doctest::Approx(0.0));
  CHECK(msg[1] == doctest::Approx(0.8));
  CHECK(state.beliefs[1][1] == doctest::Approx(-0.8));

  // Reverse direction uses the transposed table.
  send_message(state, m.mrf, 1, state.incidence[1][0], SolverParams{});
  // m(xp) = min over xq of pairwise[xp][xq]: [0.5, 0.0] -> [0.5, 0.0].
  CHECK(state.messages[1][0] == doctest::Approx(0.5));
  CHECK(state.messages[1][1] == doctest::Approx(0.0));
}

TEST_CASE("all-zero energies send zero messages") {
  const auto m = t::make_table_mrf({{0, 0, 0}, {0, 0}}, {{0, 1}}, {std::vector<double>(6, 0.0)});
  auto state = init_beliefs(m.mrf);
  send_message(state, m.mrf, 0, state.incidence[0][0], SolverParams{});
  for (const double v : state.messages[0]) CHECK(v == 0.0);
}

TEST_CASE("a dominated label never changes a message") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    auto m = t::random_mrf(rng, {4, 3}, {{0, 1}});
    // Label 3 of node 0 costs more than any other combination could.
    m.mrf.unary[0][3] = 100.0;
    auto full = init_beliefs(m.mrf);
    send_message(full, m.mrf, 0, full.incidence[0][0], SolverParams{});
    auto pruned = init_beliefs(m.mrf);
    pruned.active_labels[0] = {0, 1, 2};
    send_message(pruned, m.mrf, 0, pruned.incidence[0][0], SolverParams{});
    CHECK(full.messages[0] == pruned.messages[0]);
  }
}

TEST_CASE("pruning compacts incoming messages") {
  const auto m = t::make_table_mrf({{0.0, 1.0}, {0.0, 3.0, 1.0, 9.0}}, {{0, 1}}, {{0, 0, 0, 0, 0.5, 0, 2, 0}});
  auto state = init_beliefs(m.mrf);
  CHECK(state.messages[0].empty());
  send_message(state, m.mrf, 0, state.incidence[0][0], SolverParams{});
  // m(x1) = min(0 + table[0][x1], 1 + table[1][x1]) = [0, 0, 0, 0].
  REQUIRE(state.messages[0].size() == 4);
  SolverParams p;
  p.b_conf = -1.5;
  p.labels_min = 1;
  CHECK(prune_labels(state, 1, p) == 2);
  CHECK(state.active_labels[1] == std::vector<LabelIndex>{0, 2});
  CHECK(state.messages[0].size() == 2);
  CHECK(state.best_label(1) == 0);
}

TEST_CASE("damping blends with the previous message") {
  const auto m = t::make_table_mrf({{0.0, 1.0}, {0.0, 0.0}}, {{0, 1}}, {{0.5, 2.0, 0.0, 0.3}});
  auto state = init_beliefs(m.mrf);
  SolverParams p;
  p.damping = 0.5;
  send_message(state, m.mrf, 0, state.incidence[0][0], p);
  CHECK(state.messages[0][1] == doctest::Approx(0.4));
  send_message(state, m.mrf, 0, state.incidence[0][0], p);
  CHECK(state.messages[0][1] == doctest::Approx(0.6));
}

TEST_CASE("label pruning") {
  SUBCASE("all confident within bounds is a no-op") {
    const auto m = t::make_table_mrf({{0.0, 0.1, 0.2, 0.0}}, {}, {});
    auto state = init_beliefs(m.mrf);
    SolverParams p;
    p.b_conf = -1.0;
    CHECK(prune_labels(state, 0, p) == 0);
    CHECK(state.active_labels[0].size() == 4);
  }
  SUBCASE("one dominant label keeps the floor") {
    const auto m = t::make_table_mrf({{5.0, 0.0, 9.0, 7.0, 6.0, 8.0}}, {}, {});
    auto state = init_beliefs(m.mrf);
    SolverParams p;
    p.b_conf = -0.5;
    p.labels_min = 3;
    CHECK(prune_labels(state, 0, p) == 3);
    CHECK(state.active_labels[0] == std::vector<LabelIndex>{0, 1, 4});
    CHECK(std::isinf(state.beliefs[0][2]));
  }
  SUBCASE("ceiling applies when too many are confident") {
    const auto m = t::make_table_mrf({std::vector<double>(10, 0.0)}, {}, {});
    auto state = init_beliefs(m.mrf);
    SolverParams p;
    p.labels_min = 1;
    p.labels_max = 4;
    prune_labels(state, 0, p);
    CHECK(state.active_labels[0] == std::vector<LabelIndex>{0, 1, 2, 3});
  }
  SUBCASE("max-belief label always survives") {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 100; ++trial) {
      const auto k = static_cast<std::size_t>(t::uniform_int(rng, 1, 12));
      const auto m = t::random_mrf(rng, {k}, {});
      auto state = init_beliefs(m.mrf);
      const LabelIndex best = state.best_label(0);
      SolverParams p;
      p.b_conf = -t::uniform01(rng);
      p.labels_min = static_cast<std::size_t>(t::uniform_int(rng, 1, 3));
      p.labels_max = p.labels_min + static_cast<std::size_t>(t::uniform_int(rng, 0, 4));
      prune_labels(state, 0, p);
      CHECK(std::ranges::count(state.active_labels[0], best) == 1);
      CHECK(state.active_labels[0].size() >= std::min(k, p.labels_min));
      CHECK(state.active_labels[0].size() <= p.labels_max);
    }
  }
}

TEST_CASE("solver params validation") {
  CHECK_NOTHROW(SolverParams{}.validate());
  SolverParams p;
  p.b_conf = 0.1;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = {};
  p.labels_min = 5;
  p.labels_max = 4;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = {};
  p.labels_min = 0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = {};
  p.max_iters = 0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = {};
  p.damping = 1.0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  CHECK(default_b_conf(14, 14) == doctest::Approx(-117.6));
}

TEST_CASE("energy evaluation") {
  // 0.1 + 0.2 + pairwise 0.3.
  const auto m = t::make_table_mrf({{0.1, 9.0}, {9.0, 0.2}}, {{0, 1}}, {{9.0, 0.3, 9.0, 9.0}});
  CHECK(energy(m.mrf, std::vector<LabelIndex>{0, 1}) == doctest::Approx(0.6));
  CHECK_THROWS_AS((void)energy(m.mrf, std::vector<LabelIndex>{0}), InvalidArgument);
  CHECK_THROWS_AS((void)energy(m.mrf, std::vector<LabelIndex>{0, 2}), InvalidArgument);
}

TEST_CASE("single node picks the unary argmin") {
  const auto m = t::make_table_mrf({{0.4, 0.2, 0.2, 0.9}}, {}, {});
  const auto bp = run_priority_bp(m.mrf, SolverParams{});
  CHECK(bp.assignment == std::vector<LabelIndex>{1});
  CHECK(brute_force_solve(m.mrf) == std::vector<LabelIndex>{1});
  CHECK(run_priority_bp(Mrf{}, SolverParams{}).assignment.empty());
}

TEST_CASE("two-node chain is solved exactly") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = t::random_mrf(rng, {3, 3}, {{0, 1}});
    const auto bp = run_priority_bp(m.mrf, no_pruning(3));
    CHECK(t::table_energy(m, bp.assignment) == t::enumerate_minimum(m));
  }
}

TEST_CASE("brute force matches an independent enumeration") {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = static_cast<std::size_t>(t::uniform_int(rng, 1, 5));
    std::vector<std::size_t> labels(n);
    for (auto& l : labels) l = static_cast<std::size_t>(t::uniform_int(rng, 1, 4));
    const auto m = t::random_mrf(rng, labels, t::chain_edges(n));
    CHECK(t::table_energy(m, brute_force_solve(m.mrf)) == t::enumerate_minimum(m));
  }
  Mrf big;
  big.unary.assign(7, std::vector<double>(10, 0.0));
  CHECK_THROWS_AS((void)brute_force_solve(big), InvalidArgument);
}

TEST_CASE("fixed 2x2 loop") {
  const auto m = t::make_table_mrf({{0.3, 0.1, 0.7}, {0.5, 0.2, 0.0}, {0.9, 0.4, 0.6}, {0.0, 0.8, 0.2}},
                                   {{0, 1}, {0, 2}, {1, 3}, {2, 3}},
                                   {{0.2, 0.9, 0.4, 0.6, 0.0, 0.8, 0.1, 0.7, 0.3},
                                    {0.5, 0.1, 0.9, 0.3, 0.6, 0.2, 0.8, 0.4, 0.0},
                                    {0.0, 0.7, 0.5, 0.9, 0.2, 0.6, 0.4, 0.8, 0.1},
                                    {0.6, 0.3, 0.8, 0.1, 0.9, 0.4, 0.7, 0.0, 0.5}});
  // Minimum found by exhaustive enumeration offline: 1.6 at (0, 0, 1, 0).
  const auto exact = brute_force_solve(m.mrf);
  CHECK(exact == std::vector<LabelIndex>{0, 0, 1, 0});
  CHECK(energy(m.mrf, exact) == doctest::Approx(1.6));
  const auto bp = run_priority_bp(m.mrf, no_pruning(3));
  CHECK(bp.energy <= 1.05 * 1.6);
}

TEST_CASE("BP never loses to the per-node argmin on loopy grids") {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 30; ++trial) {
    const auto m = t::random_mrf(rng, std::vector<std::size_t>(9, 4), t::grid_edges(3, 3));
    std::vector<LabelIndex> greedy(9);
    for (std::size_t p = 0; p < 9; ++p) {
      const auto& u = m.mrf.unary[p];
      greedy[p] = static_cast<LabelIndex>(std::ranges::min_element(u) - u.begin());
    }
    const auto bp = run_priority_bp(m.mrf, SolverParams{.b_conf = -0.3});
    CHECK(bp.energy <= energy(m.mrf, greedy));
    CHECK(bp.energy == energy(m.mrf, bp.assignment));
  }
}

TEST_CASE("messages stay finite and non-negative") {
  std::mt19937_64 rng(26);
  const auto m = t::random_mrf(rng, std::vector<std::size_t>(12, 5), t::grid_edges(4, 3), 3.0);
  auto state = init_beliefs(m.mrf);
  SolverParams p;
  p.b_conf = -0.2;
  for (int round = 0; round < 5; ++round) {
    for (NodeIndex q = 0; q < 12; ++q) {
      prune_labels(state, q, p);
      for (const auto& inc : state.incidence[q]) send_message(state, m.mrf, q, inc, p);
    }
    for (NodeIndex q = 0; q < 12; ++q) {
      for (const auto l : state.active_labels[q]) CHECK(state.relative_belief(q, l) <= 0.0);
      CHECK(state.relative_belief(q, state.best_label(q)) == 0.0);
    }
    for (std::size_t e = 0; e < m.mrf.edges.size(); ++e) {
      for (const auto dir : {2 * e, 2 * e + 1}) {
        const NodeIndex receiver = dir % 2 == 0 ? m.mrf.edges[e].b : m.mrf.edges[e].a;
        CHECK(state.messages[dir].size() == state.active_labels[receiver].size());
        for (const double v : state.messages[dir]) {
          CHECK(std::isfinite(v));
          CHECK(v >= 0.0);
        }
      }
    }
  }
}

TEST_CASE("flat nodes are committed last") {
  // Nodes 1 and 3 have flat unaries, like interior or zeroed nodes.
  std::mt19937_64 rng(27);
  auto m = t::random_mrf(rng, std::vector<std::size_t>(4, 6), t::chain_edges(4));
  m.mrf.unary[1].assign(6, 0.0);
  m.mrf.unary[3].assign(6, 0.0);
  m.mrf.unary[0] = {0.0, 9, 9, 9, 9, 9};
  m.mrf.unary[2] = {9, 9, 0.0, 9, 9, 9};
  const auto state = init_beliefs(m.mrf);
  for (const NodeIndex flat : {1, 3}) {
    for (const NodeIndex sharp : {0, 2}) {
      CHECK(node_priority(state, flat, -1.0) < node_priority(state, sharp, -1.0));
    }
  }
  SolverParams p;
  p.b_conf = -1.0;
  p.max_iters = 1;
  const auto bp = run_priority_bp(m.mrf, p);
  REQUIRE(bp.commit_order.size() == 4);
  CHECK(bp.commit_order[0] == 0);
}

TEST_CASE("solver is deterministic across thread counts") {
  std::mt19937_64 rng(28);
  const auto m = t::random_mrf(rng, std::vector<std::size_t>(16, 80), t::grid_edges(4, 4));
  parallel::set_thread_count(1);
  const auto a = run_priority_bp(m.mrf, SolverParams{.b_conf = -0.5});
  parallel::set_thread_count(8);
  const auto b = run_priority_bp(m.mrf, SolverParams{.b_conf = -0.5});
  parallel::set_thread_count(0);
  CHECK(a.assignment == b.assignment);
  CHECK(a.energy == b.energy);
  CHECK(a.commit_order == b.commit_order);
}
