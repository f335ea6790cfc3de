#include <limits>
#include <random>

#include "depthfill/error.hpp"
#include "depthfill/parallel.hpp"
#include "depthfill/potentials.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace depthfill;
using namespace depthfill::potentials;
using lattice::LatticeConfig;
namespace t = depthfill::testing;

namespace {

LatticeConfig cfg_of(int patch, int gap, int stride = 1) {
  LatticeConfig c;
  c.patch_w = c.patch_h = patch;
  c.gap_x = c.gap_y = gap;
  c.label_stride = stride;
  return c;
}

// Straight-line masked SSD used as the oracle for every footprint sum.
double oracle_masked_ssd(const Plane& plane, const HoleMask& mask, PixelCoord p, PixelCoord xp,
                         const LatticeConfig& cfg) {
  double total = 0.0;
  for (int dy = -cfg.patch_h / 2; dy < cfg.patch_h / 2; ++dy) {
    for (int dx = -cfg.patch_w / 2; dx < cfg.patch_w / 2; ++dx) {
      if (!mask.known(p.x + dx, p.y + dy)) continue;
      for (int c = 0; c < plane.channels(); ++c) {
        const double d = double{plane.at(p.x + dx, p.y + dy, c)} - plane.at(xp.x + dx, xp.y + dy, c);
        total += d * d;
      }
    }
  }
  return total;
}

double oracle_overlap_ssd(const Plane& plane, PixelCoord p, PixelCoord q, PixelCoord xp, PixelCoord xq,
                          const LatticeConfig& cfg) {
  double total = 0.0;
  const Rect o = intersect(cfg.footprint(p), cfg.footprint(q));
  for (int y = o.y0; y < o.y1; ++y) {
    for (int x = o.x0; x < o.x1; ++x) {
      const PixelCoord tt{x, y};
      const PixelCoord a = xp + (tt - p);
      const PixelCoord b = xq + (tt - q);
      for (int c = 0; c < plane.channels(); ++c) {
        const double d = double{plane.at(a.x, a.y, c)} - plane.at(b.x, b.y, c);
        total += d * d;
      }
    }
  }
  return total;
}

struct SmallScene {
  Image img;
  DepthMap depth;
  HoleMask mask;
};

SmallScene random_scene(std::mt19937_64& rng, int w, int h, Rect hole) {
  SmallScene s{t::random_image(rng, w, h), DepthMap(w, h), HoleMask(w, h)};
  for (auto& d : s.depth.samples()) d = static_cast<std::uint8_t>(rng());
  s.mask.mark_hole(hole);
  return s;
}

}  // namespace

TEST_CASE("image node potential examples") {
  const auto cfg = cfg_of(2, 1);
  Plane color(6, 2, 3, 0.25f);
  HoleMask mask(6, 2);
  mask.set_known(1, 0, false);
  mask.set_known(1, 1, false);
  // Node at (1, 1) covers x 0..1; label at (4, 1) covers x 3..4.
  color.at(3, 1, 2) = 0.75f;
  CHECK(node_potential_image(color, mask, {1, 1}, {4, 1}, cfg) == doctest::Approx(0.25));
  // Differences under the hole are ignored.
  color.at(4, 0, 0) = 1.0f;
  CHECK(node_potential_image(color, mask, {1, 1}, {4, 1}, cfg) == doctest::Approx(0.25));
  CHECK(node_potential_image(color, HoleMask(6, 2), {4, 1}, {4, 1}, cfg) == 0.0);

  HoleMask all_hole(6, 2);
  all_hole.mark_hole({0, 0, 6, 2});
  CHECK(node_potential_image(color, all_hole, {1, 1}, {4, 1}, cfg) == 0.0);
  CHECK_THROWS_AS((void)node_potential_image(color, mask, {1, 1}, {6, 1}, cfg), InvalidArgument);
}

TEST_CASE("depth node potential examples") {
  const auto cfg = cfg_of(2, 1);
  Plane depth(6, 2, 1, 0.2f);
  for (int y = 0; y < 2; ++y) {
    for (int x = 3; x < 6; ++x) depth.at(x, y) = 0.7f;
  }
  HoleMask mask(6, 2);
  mask.set_known(1, 0, false);
  mask.set_known(1, 1, false);
  CHECK(node_potential_depth(depth, mask, {1, 1}, {4, 1}, cfg) == doctest::Approx(0.5));
  CHECK(node_potential_depth(depth, mask, {4, 1}, {5, 1}, cfg) == 0.0);
}

TEST_CASE("combined node potential") {
  std::mt19937_64 rng(8);
  const auto s = random_scene(rng, 20, 20, {8, 8, 12, 12});
  const Scene scene(s.img, s.depth, s.mask);
  const auto cfg = cfg_of(4, 2);
  lattice::Node node;
  node.center = {9, 9};
  const lattice::Label label{{3, 3}, 0.0};
  const double vi = node_potential_image(scene.color, scene.mask, node.center, label.source_center, cfg);
  const double vd = node_potential_depth(scene.depth, scene.mask, node.center, label.source_center, cfg);
  EnergyParams params;
  CHECK(node_potential(node, label, params, scene, cfg) == doctest::Approx(vi + 3.0 * vd));
  params.lambda_d = 0.0;
  CHECK(node_potential(node, label, params, scene, cfg) == vi);
  node.mode = lattice::PotentialMode::zeroed;
  params.lambda_d = 3.0;
  CHECK(node_potential(node, label, params, scene, cfg) == 0.0);
  // 0.3 + 3 * 0.1
  CHECK(0.3 + params.lambda_d * 0.1 == doctest::Approx(0.6));
}

TEST_CASE("node potentials match the oracle sum") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const auto s = random_scene(rng, 24, 24, {t::uniform_int(rng, 4, 10), 8, 14, t::uniform_int(rng, 10, 18)});
    const Scene scene(s.img, s.depth, s.mask);
    const int patch = 2 * t::uniform_int(rng, 1, 3);
    const auto cfg = cfg_of(patch, 1);
    const PixelCoord p{t::uniform_int(rng, patch / 2, 24 - patch / 2), t::uniform_int(rng, patch / 2, 24 - patch / 2)};
    const PixelCoord x{t::uniform_int(rng, patch / 2, 24 - patch / 2), t::uniform_int(rng, patch / 2, 24 - patch / 2)};
    const double vi = node_potential_image(scene.color, scene.mask, p, x, cfg);
    CHECK(vi == doctest::Approx(oracle_masked_ssd(scene.color, scene.mask, p, x, cfg)).epsilon(1e-5));
    CHECK(vi >= 0.0);
    const double vd = node_potential_depth(scene.depth, scene.mask, p, x, cfg);
    CHECK(vd == doctest::Approx(oracle_masked_ssd(scene.depth, scene.mask, p, x, cfg)).epsilon(1e-5));
  }
}

TEST_CASE("pairwise potential examples") {
  const auto cfg = cfg_of(2, 1);
  Plane color(8, 4, 3, 0.5f);
  // p = (1,1), q = (2,1): overlap column x = 1, rows 0..1.
  CHECK(pairwise_potential(color, {1, 1}, {2, 1}, {5, 2}, {5, 2}, cfg) == 0.0);
  CHECK(pairwise_potential(color, {1, 1}, {2, 1}, {5, 2}, {6, 2}, cfg) == 0.0);
  // x_p content for the overlap sits at x_p + (0, -1) and x_p + (0, 0).
  color.at(5, 2, 1) = 1.5f;
  CHECK(pairwise_potential(color, {1, 1}, {2, 1}, {5, 2}, {7, 2}, cfg) == doctest::Approx(1.0));
  CHECK_THROWS_AS((void)pairwise_potential(color, {1, 1}, {5, 1}, {5, 2}, {5, 2}, cfg), InvalidArgument);
}

TEST_CASE("pairwise potential oracle and symmetry") {
  std::mt19937_64 rng(10);
  const auto s = random_scene(rng, 30, 30, {0, 0, 1, 1});
  const Plane color = to_plane(s.img);
  for (int trial = 0; trial < 40; ++trial) {
    const int patch = 2 * t::uniform_int(rng, 1, 4);
    const int gap = t::uniform_int(rng, 1, patch - 1);
    const auto cfg = cfg_of(patch, gap);
    const int h = patch / 2;
    auto pick = [&] { return PixelCoord{t::uniform_int(rng, h, 30 - h - gap), t::uniform_int(rng, h, 30 - h - gap)}; };
    const PixelCoord p = pick();
    const PixelCoord q = trial % 2 ? p + PixelCoord{gap, 0} : p + PixelCoord{0, gap};
    const PixelCoord xp = pick();
    const PixelCoord xq = pick();
    const double v = pairwise_potential(color, p, q, xp, xq, cfg);
    CHECK(v == doctest::Approx(oracle_overlap_ssd(color, p, q, xp, xq, cfg)).epsilon(1e-5));
    CHECK(v == doctest::Approx(pairwise_potential(color, q, p, xq, xp, cfg)).epsilon(1e-6));
    CHECK(pairwise_potential(color, p, q, xp, xp + (q - p), cfg) == 0.0);
  }
}

TEST_CASE("coherence term") {
  EnergyParams params;
  params.w0 = 1.5;
  CHECK(coherence_term({10, 10}, {17, 10}, {3, 4}, {10, 4}, params) == 0.0);
  CHECK(coherence_term({10, 10}, {17, 10}, {3, 4}, {11, 4}, params) == 1.5);
  CHECK(coherence_term({17, 10}, {10, 10}, {11, 4}, {3, 4}, params) == 1.5);
  params.w0 = 0.0;
  CHECK(coherence_term({10, 10}, {17, 10}, {3, 4}, {11, 4}, params) == 0.0);
  CHECK(default_w0(LatticeConfig{}) == doctest::Approx(3.92));
}

TEST_CASE("energy params validation") {
  CHECK_NOTHROW(EnergyParams{}.validate());
  EnergyParams p;
  p.lambda_d = -1;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = {};
  p.w0 = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = {};
  p.depth_prune_delta = std::numeric_limits<double>::infinity();
  CHECK_NOTHROW(p.validate());
}

namespace {

lattice::PatchLattice pruning_fixture(std::vector<double> label_depths, double ref) {
  lattice::PatchLattice lat;
  lat.nodes.resize(1);
  lat.nodes[0].ref_depth = ref;
  for (std::size_t i = 0; i < label_depths.size(); ++i) {
    lat.labels.push_back({{0, 0}, label_depths[i]});
    lat.node_labels.resize(1);
    lat.node_labels[0].push_back(i);
  }
  return lat;
}

}  // namespace

TEST_CASE("depth pruning") {
  EnergyParams p;
  p.depth_prune_delta = std::numeric_limits<double>::infinity();
  auto lat = pruning_fixture({0.1, 0.9, 0.12, 0.85, 0.5}, 0.1);
  CHECK(prune_labels_by_depth(lat, p, 3).node_labels[0].size() == 5);

  p.depth_prune_delta = 0.1;
  CHECK(prune_labels_by_depth(lat, p, 1).node_labels[0] == std::vector<lattice::LabelId>{0, 2});

  p.depth_prune_delta = 0.0;
  lat = pruning_fixture({0.3, 0.9, 0.12, 0.85, 0.5}, 0.1);
  CHECK(prune_labels_by_depth(lat, p, 3).node_labels[0] == std::vector<lattice::LabelId>{0, 2, 4});
  CHECK(prune_labels_by_depth(lat, p, 10).node_labels[0].size() == 5);
}

TEST_CASE("total energy on an empty lattice is zero") {
  const lattice::PatchLattice lat;
  const Scene scene(Image(4, 4), DepthMap(4, 4), HoleMask(4, 4));
  const EnergyModel model(lat, scene, EnergyParams{});
  CHECK(model.total_energy(std::vector<lattice::LabelId>{}).total() == 0.0);
}

TEST_CASE("total energy equals the independently summed terms") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 8; ++trial) {
    const auto s = random_scene(rng, 32, 32, {12, 12, 20, t::uniform_int(rng, 14, 22)});
    const Scene scene(s.img, s.depth, s.mask);
    const auto cfg = cfg_of(6, 3, 3);
    auto lat = lattice::build_lattice(s.mask, cfg);
    lattice::attach_labels(lat, lattice::enumerate_labels(s.img, s.mask, s.depth, cfg), s.depth, s.mask);
    lat = lattice::classify_nodes(std::move(lat), s.depth, s.mask);
    EnergyParams params;
    params.w0 = 0.7;
    const EnergyModel model(lat, scene, params);
    std::vector<lattice::LabelId> x(lat.nodes.size());
    for (auto& l : x) l = rng() % lat.labels.size();
    double expected = 0.0;
    for (std::size_t n = 0; n < lat.nodes.size(); ++n) {
      if (lat.nodes[n].mode == lattice::PotentialMode::zeroed) continue;
      const auto c = lat.nodes[n].center;
      const auto xp = lat.labels[x[n]].source_center;
      expected += oracle_masked_ssd(scene.color, s.mask, c, xp, cfg) +
                  3.0 * oracle_masked_ssd(scene.depth, s.mask, c, xp, cfg);
    }
    for (const auto& e : lat.edges) {
      const auto p = lat.nodes[e.a].center;
      const auto q = lat.nodes[e.b].center;
      const auto xp = lat.labels[x[e.a]].source_center;
      const auto xq = lat.labels[x[e.b]].source_center;
      expected += oracle_overlap_ssd(scene.color, p, q, xp, xq, cfg) +
                  3.0 * oracle_overlap_ssd(scene.depth, p, q, xp, xq, cfg) + ((xp - xq) == (p - q) ? 0.0 : 0.7);
    }
    CHECK(model.total_energy(x).total() == doctest::Approx(expected).epsilon(1e-6));

    // The MRF built from the model agrees with total_energy.
    const auto mrf = model.build_mrf();
    std::vector<solver::LabelIndex> local(x.begin(), x.end());
    CHECK(solver::energy(mrf, local) == doctest::Approx(model.total_energy(x).total()).epsilon(1e-9));
    CHECK(model.to_label_ids(local) == x);
  }
}

TEST_CASE("node tables are independent of the thread count") {
  std::mt19937_64 rng(13);
  const auto s = random_scene(rng, 40, 40, {15, 15, 25, 25});
  const Scene scene(s.img, s.depth, s.mask);
  const auto cfg = cfg_of(6, 3, 1);
  auto lat = lattice::build_lattice(s.mask, cfg);
  lattice::attach_labels(lat, lattice::enumerate_labels(s.img, s.mask, s.depth, cfg), s.depth, s.mask);
  const EnergyModel model(lat, scene, EnergyParams{});
  parallel::set_thread_count(1);
  const auto one = model.node_tables();
  parallel::set_thread_count(4);
  const auto four = model.node_tables();
  parallel::set_thread_count(0);
  CHECK(one == four);
}

TEST_CASE("batched messages agree with per-pair evaluation") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 6; ++trial) {
    const auto s = random_scene(rng, 36, 36, {13, 13, 23, 23});
    const Scene scene(s.img, s.depth, s.mask);
    const auto cfg = cfg_of(6, trial % 2 ? 3 : 2, trial % 2 ? 3 : 2);
    auto lat = lattice::build_lattice(s.mask, cfg);
    lattice::attach_labels(lat, lattice::enumerate_labels(s.img, s.mask, s.depth, cfg), s.depth, s.mask);
    EnergyParams params;
    params.lambda_d = trial % 3 == 0 ? 0.0 : 3.0;
    params.w0 = 0.05 * trial;
    const EnergyModel model(lat, scene, params);
    const auto mrf = model.build_mrf();
    for (std::size_t e = 0; e < lat.edges.size(); e += 3) {
      for (const bool from_a : {true, false}) {
        const auto sender = from_a ? lat.edges[e].a : lat.edges[e].b;
        const auto receiver = from_a ? lat.edges[e].b : lat.edges[e].a;
        std::vector<solver::LabelIndex> sl;
        std::vector<double> h;
        for (std::size_t l = 0; l < lat.node_labels[sender].size(); l += 2) {
          sl.push_back(l);
          h.push_back(t::uniform01(rng));
        }
        std::vector<solver::LabelIndex> rl(lat.node_labels[receiver].size());
        for (std::size_t l = 0; l < rl.size(); ++l) rl[l] = l;
        std::vector<double> fast(rl.size());
        model.min_message(e, from_a, sl, h, rl, fast);
        for (std::size_t j = 0; j < rl.size(); ++j) {
          double slow = INFINITY;
          for (std::size_t i = 0; i < sl.size(); ++i) {
            const double pair = from_a ? mrf.pairwise(e, sl[i], rl[j]) : mrf.pairwise(e, rl[j], sl[i]);
            slow = std::min(slow, h[i] + pair);
          }
          CHECK(fast[j] == doctest::Approx(slow).epsilon(1e-5));
        }
      }
    }
  }
}
