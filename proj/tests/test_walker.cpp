#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "rwre/fleet.hpp"
#include "rwre/stats.hpp"
#include "rwre/walker.hpp"

using namespace rwre;
using testing::error_kind;

namespace {

// P(level < 0 at every time 1..h) for a homogeneous d=1 walk with right-probability p,
// by forward dynamic programming over the level.
double stay_below_dp(double p, int h) {
  std::vector<double> mass(2 * h + 3, 0.0);
  const int zero = h + 1;
  mass[zero] = 1.0;
  for (int t = 0; t < h; ++t) {
    std::vector<double> next(mass.size(), 0.0);
    for (int i = 1; i + 1 < static_cast<int>(mass.size()); ++i) {
      if (mass[i] == 0.0) continue;
      next[i + 1] += p * mass[i];
      next[i - 1] += (1.0 - p) * mass[i];
    }
    for (int i = zero; i < static_cast<int>(next.size()); ++i) next[i] = 0.0;
    mass = next;
  }
  double total = 0.0;
  for (double m : mass) total += m;
  return total;
}

std::shared_ptr<const SiteLaw> d1(double p) { return testing::law(1, std::min(p, 1.0 - p), {{1.0, {p, 1.0 - p}}}); }

}  // namespace

TEST_CASE("deterministic kernel marches along e1") {
  const Environment env(fleet::deterministic(2), 3);
  const auto traj = simulate_quenched(env, Site{}, 5, RngKey{1});
  const auto pos = traj.positions();
  REQUIRE(pos.size() == 6);
  for (int t = 0; t <= 5; ++t) CHECK(pos[t] == Site{{t}});
}

TEST_CASE("quenched runs are deterministic in the key") {
  const Environment env(fleet::d2_random(), 17);
  const auto a = simulate_quenched(env, Site{}, 500, RngKey{9});
  const auto b = simulate_quenched(env, Site{}, 500, RngKey{9});
  CHECK(a.moves == b.moves);
}

TEST_CASE("d=1 p=0.6 velocity is 0.2") {
  const auto law = d1(0.6);
  const Environment env(law, 1);
  const int reps = 10000;
  const std::int64_t steps = 10000;
  const auto ends = parallel_map(reps, Parallelism{}, [&](std::size_t r) {
    return simulate_quenched(env, Site{}, steps, RngKey{42}.child(r)).end();
  });
  double sum = 0.0;
  for (const auto& e : ends) sum += static_cast<double>(e.level()) / steps;
  CHECK(std::abs(sum / reps - 0.2) <= 0.012);
}

TEST_CASE("point-mass annealed equals quenched") {
  const auto law = testing::law(2, 0.1, {{1.0, {0.4, 0.1, 0.25, 0.25}}});
  for (std::uint64_t k = 0; k < 20; ++k) {
    const auto a = simulate_annealed(law, Site{}, 200, RngKey{k});
    const auto q = simulate_quenched(Environment(law, 12345 + k), Site{}, 200, RngKey{k});
    CHECK(a.moves == q.moves);
  }
}

TEST_CASE("two-atom annealed one-step right probability is 0.8") {
  const auto law = fleet::d1_two_atom();
  const int reps = 10000;
  int right = 0;
  for (int r = 0; r < reps; ++r) right += simulate_annealed(law, Site{}, 1, RngKey{6}.child(r)).end().level() == 1;
  CHECK(std::abs(right / double(reps) - 0.8) <= 0.012);

  const int many = 1000000;
  int right_many = 0;
  for (int r = 0; r < many; ++r) right_many += simulate_annealed(law, Site{}, 1, RngKey{7}.child(r)).end().level() == 1;
  CHECK(std::abs(right_many / double(many) - 0.8) <= 3.0 * testing::binomial_sigma(0.8, many));
}

TEST_CASE("symmetric-in-e1 law has zero mean level") {
  const auto law = testing::law(2, 0.2, {{0.5, {0.3, 0.3, 0.2, 0.2}}, {0.5, {0.2, 0.2, 0.3, 0.3}}});
  std::vector<double> levels;
  for (int r = 0; r < 2000; ++r) {
    levels.push_back(static_cast<double>(simulate_annealed(law, Site{}, 1000, RngKey{8}.child(r)).end().level()));
  }
  const auto ms = mean_se(levels);
  CHECK(std::abs(ms.mean) < 3.0 * ms.se);
}

TEST_CASE("enumerate_exact binomial example") {
  const Environment env(d1(0.6), 0);
  const auto ex = enumerate_exact(env, Site{}, 2);
  CHECK(ex.endpoints.at(Site{{2}}) == doctest::Approx(0.36));
  CHECK(ex.endpoints.at(Site{{0}}) == doctest::Approx(0.48));
  CHECK(ex.endpoints.at(Site{{-2}}) == doctest::Approx(0.16));
  CHECK(ex.visits.at(Site{{0}}) == doctest::Approx(1.0));
  CHECK(ex.visits.at(Site{{1}}) == doctest::Approx(0.6));
  CHECK(ex.visits.at(Site{{-1}}) == doctest::Approx(0.4));
  CHECK(ex.visits.at(Site{{2}}) == doctest::Approx(0.36));
  CHECK(ex.visits.at(Site{{-2}}) == doctest::Approx(0.16));
  CHECK(ex.stay_positive == doctest::Approx(0.36));
  CHECK(ex.stay_below_start == doctest::Approx(0.16));
}

TEST_CASE("enumerate_exact normalizes and limits the horizon") {
  for (const auto& e : fleet::all()) {
    const Environment env(e.law, 3);
    const auto ex = enumerate_exact(env, Site{}, std::min(e.horizon, 6));
    double total = 0.0;
    for (const auto& [z, p] : ex.endpoints) total += p;
    CHECK(std::abs(total - 1.0) < 1e-10);
  }
  const Environment env1(d1(0.6), 0);
  CHECK(error_kind([&] { enumerate_exact(env1, Site{}, 13); }) == ErrorKind::HorizonTooLarge);
  const Environment env5(fleet::d5_test(), 0);
  CHECK(error_kind([&] { enumerate_exact(env5, Site{}, 8); }) == ErrorKind::HorizonTooLarge);
}

TEST_CASE("Monte Carlo endpoints match enumeration") {
  const Environment env(fleet::d2_random(), 11);
  const int h = 4;
  const auto ex = enumerate_exact(env, Site{}, h);
  const int reps = 100000;
  std::map<Site, int> counts;
  for (int r = 0; r < reps; ++r) ++counts[simulate_quenched(env, Site{}, h, RngKey{3}.child(r)).end()];
  for (const auto& [z, c] : counts) REQUIRE(ex.endpoints.contains(z));
  for (const auto& [z, p] : ex.endpoints) {
    const double sigma = std::sqrt(reps * std::max(p, 1.0 / reps) * (1.0 - p));
    CHECK(std::abs(counts[z] - reps * p) <= 3.0 * sigma + 1.0);
  }
}

TEST_CASE("strict StayBelowStart DP oracle matches enumeration") {
  const Environment env(d1(0.4), 0);
  const auto ex = enumerate_exact(env, Site{}, 12);
  CHECK(ex.stay_below_start == doctest::Approx(stay_below_dp(0.4, 12)).epsilon(1e-12));
  // Long-horizon value of the strict event is q - p.
  CHECK(stay_below_dp(0.4, 1000) == doctest::Approx(0.2).epsilon(1e-6));
}

TEST_CASE("StayBelowStart acceptance for p=0.4 is 0.2") {
  const double target = stay_below_dp(0.4, 1000);
  const auto st = estimate_acceptance(d1(0.4), Site{}, {Condition::StayBelowStart, 1000}, 10000, RngKey{21});
  CHECK(st.attempts == 10000);
  CHECK(std::abs(st.rate() - target) <= 0.015);
}

TEST_CASE("forced and impossible conditioning") {
  const auto det = fleet::deterministic(1);
  const auto ok = sample_conditioned(det, Site{}, {Condition::StayPositive, 50}, RngKey{1});
  CHECK(ok.stats.rate() == 1.0);
  CHECK(ok.trajectory.steps() == 50);
  CHECK(event_holds(ok.trajectory, Condition::StayPositive));
  CHECK(error_kind([&] { sample_conditioned(det, Site{}, {Condition::StayBelowStart, 50}, RngKey{1}); }) ==
        ErrorKind::AcceptanceTooLow);
}

TEST_CASE("acceptance estimates agree across disjoint seed ranges") {
  const auto law = fleet::d1_two_atom();
  const ConditionEvent ev{Condition::StayPositive, 200};
  const auto a = estimate_acceptance(law, Site{}, ev, 10000, RngKey{100});
  const auto b = estimate_acceptance(law, Site{}, ev, 10000, RngKey{200});
  const double se = std::hypot(testing::binomial_sigma(a.rate(), 1e4), testing::binomial_sigma(b.rate(), 1e4));
  CHECK(std::abs(a.rate() - b.rate()) <= 3.0 * se);
}

TEST_CASE("every trajectory takes unit steps") {
  for (const auto& e : fleet::all()) {
    const auto traj = simulate_annealed(e.law, Site{}, 300, RngKey{4});
    const auto pos = traj.positions();
    for (std::size_t t = 0; t + 1 < pos.size(); ++t) CHECK((pos[t + 1] - pos[t]).norm2() == 1);
  }
}
