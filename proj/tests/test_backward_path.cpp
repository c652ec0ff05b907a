#include <unordered_set>

#include "helpers.hpp"
#include "rwre/backward_path.hpp"
#include "rwre/fleet.hpp"
#include "rwre/stats.hpp"

using namespace rwre;
using testing::error_kind;

namespace {

Slab unit_slab(int d) {
  Slab s;
  s.dim = d;
  s.width = 1;
  s.moves = {plus_move(0)};
  s.onpath = {{Site{}, 0}};
  return s;
}

SlabStream d2_pool(std::size_t count, std::uint64_t seed) {
  SlabStreamOptions o;
  o.horizon = 3000;
  o.margin = 300;
  return sample_slab_stream(fleet::d2_random(), count, RngKey{seed}, o);
}

}  // namespace

TEST_CASE("two unit slabs around the origin") {
  const auto w = GluedWorld::glue({unit_slab(1), unit_slab(1)}, 1, fleet::deterministic(1));
  CHECK(w.anchor(-1) == Site{{-1}});
  CHECK(w.anchor(0) == Site{});
  CHECK(w.anchor(1) == Site{{1}});
  CHECK(w.in_path(Site{{-1}}));
  CHECK(w.in_path(Site{}));
  CHECK(w.in_path(Site{{1}}));
  CHECK(w.path_size() == 3);
}

TEST_CASE("path size is at most total duration plus one") {
  // +e1, +e2, -e2, +e1 revisits e1.
  Slab rev;
  rev.dim = 2;
  rev.width = 2;
  rev.moves = {plus_move(0), plus_move(1), minus_move(1), plus_move(0)};
  rev.onpath = {{Site{}, 0}, {Site{{1, 0}}, 0}, {Site{{1, 1}}, 0}};
  REQUIRE(rev.valid());
  const auto law = fleet::d2_analog();
  Slab straight = unit_slab(2);
  const auto w = GluedWorld::glue({straight, rev, straight}, 1, law);
  CHECK(w.path_size() == 1 + 3 + 1 + 1);
  CHECK(w.path_size() < 1 + 4 + 1 + 1);

  const auto pool = d2_pool(400, 3);
  std::int64_t sum_u = 0;
  bool revisits = false;
  for (const auto& s : pool.slabs) {
    sum_u += s.duration();
    revisits = revisits || static_cast<std::int64_t>(s.onpath.size()) < s.duration();
  }
  const auto big = GluedWorld::glue(pool.slabs, 200, pool.law);
  CHECK(static_cast<std::int64_t>(big.path_size()) <= sum_u + 1);
  CHECK((static_cast<std::int64_t>(big.path_size()) == sum_u + 1) == !revisits);

  std::size_t onpath = 0;
  for (const auto& s : pool.slabs) onpath += s.onpath.size();
  CHECK(big.onpath().size() == onpath);
}

TEST_CASE("anchor levels telescope and strips tile") {
  const auto pool = d2_pool(100, 4);
  const auto w = GluedWorld::glue(pool.slabs, 50, pool.law);
  std::int64_t depth = 0;
  for (int n = 1; n <= 50; ++n) {
    depth += w.slab(-n).width;
    CHECK(w.anchor(-n).level() == -depth);
  }
  for (std::int64_t lv = w.bottom_level(); lv < w.top_level(); ++lv) {
    Site z;
    z.c[0] = static_cast<std::int32_t>(lv);
    z.c[1] = 7;
    const int n = w.slab_index_at(z);
    CHECK(w.anchor(n).level() <= lv);
    CHECK(lv < w.anchor(n + 1).level());
  }
  Site top;
  top.c[0] = static_cast<std::int32_t>(w.top_level());
  CHECK(error_kind([&] { w.slab_index_at(top); }) == ErrorKind::OutsideCoveredRegion);
  CHECK(error_kind([&] { walk_on_glued(w, top, 10, RngKey{1}, Which::OmegaTilde); }) ==
        ErrorKind::OutsideCoveredRegion);
}

TEST_CASE("invalid slabs are a tiling violation") {
  Slab bad = unit_slab(1);
  bad.width = 2;
  CHECK(error_kind([&] { GluedWorld::glue({unit_slab(1), bad}, 1, fleet::deterministic(1)); }) ==
        ErrorKind::TilingViolation);
}

TEST_CASE("coupled world agrees off the path and re-randomizes on it") {
  const auto pool = d2_pool(4000, 5);
  const auto w = GluedWorld::couple(pool.slabs, 2000, pool.law, RngKey{6});
  Rng rng(RngKey{7});
  int off = 0;
  while (off < 5000) {
    Site z;
    z.c[0] = static_cast<std::int32_t>(w.bottom_level() + rng.below(w.top_level() - w.bottom_level()));
    z.c[1] = static_cast<std::int32_t>(rng.below(41)) - 20;
    if (w.in_path(z)) continue;
    ++off;
    CHECK(w.atom_at(z, Which::Omega) == w.atom_at(z, Which::OmegaTilde));
  }

  REQUIRE(w.onpath().size() >= 10000);
  std::vector<Site> sites;
  for (const auto& [z, ps] : w.onpath()) sites.push_back(z);
  std::sort(sites.begin(), sites.end());
  std::vector<std::uint64_t> psi(pool.law->size(), 0);
  for (std::size_t i = 0; i < 10000; ++i) ++psi[w.atom_at(sites[i], Which::Omega)];
  std::vector<double> weights;
  for (const auto& a : pool.law->atoms()) weights.push_back(a.weight);
  CHECK(chi_square_gof(psi, weights).p_value > 0.01);
}

TEST_CASE("coupling tests on one world") {
  const auto pool = d2_pool(400, 8);
  const auto w = GluedWorld::couple(pool.slabs, 200, pool.law, RngKey{9});
  const auto r = coupling_tests(w, 2000, RngKey{10}, 6);
  CHECK(r.off_path_agree);
  CHECK(r.marginal_p > 0.01);
  CHECK(r.independence_p > 0.01);
  CHECK(r.adjacency_p > 0.01);
}

TEST_CASE("deterministic glued walk marches to the top") {
  std::vector<Slab> slabs(20, unit_slab(3));
  const auto w = GluedWorld::glue(slabs, 10, fleet::deterministic(3));
  const auto walk = walk_on_glued(w, Site{}, 1000, RngKey{1}, Which::OmegaTilde);
  CHECK(walk.exit == ExitSide::Top);
  CHECK(walk.exit_step == 10);
  CHECK(walk.min_level == 0);
}

TEST_CASE("omega and omega-tilde walks coincide until the path is hit") {
  const auto pool = d2_pool(600, 11);
  const auto w = GluedWorld::couple(pool.slabs, 300, pool.law, RngKey{12});
  int entered = 0;
  for (std::uint64_t r = 0; r < 200; ++r) {
    Site start = w.anchor(-100);
    start.c[1] += 3 + static_cast<std::int32_t>(r % 5);
    if (w.in_path(start)) continue;
    const auto a = walk_on_glued(w, start, 5000, RngKey{100 + r}, Which::Omega);
    const auto b = walk_on_glued(w, start, 5000, RngKey{100 + r}, Which::OmegaTilde);
    const auto pa = a.trajectory.positions();
    std::size_t hit = pa.size();
    for (std::size_t t = 0; t < pa.size(); ++t) {
      if (w.onpath().contains(pa[t])) {
        hit = t;
        break;
      }
    }
    if (hit < pa.size()) ++entered;
    const auto upto = std::min(hit, std::min(a.trajectory.moves.size(), b.trajectory.moves.size()));
    for (std::size_t t = 0; t < upto; ++t) REQUIRE(a.trajectory.moves[t] == b.trajectory.moves[t]);
    if (hit == pa.size()) CHECK(a.trajectory.moves == b.trajectory.moves);
  }
  CHECK(entered > 0);
}

TEST_CASE("glued slab -i matches the i-th forward slab") {
  const auto pool = d2_pool(3000, 13);
  const auto r = glued_vs_forward(pool, 2, 2000, 3000, 300, RngKey{14});
  CHECK(r.forward_samples > 1000);
  CHECK(r.p_value > 0.01);
}
