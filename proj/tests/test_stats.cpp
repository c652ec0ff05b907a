#include <cmath>
#include <map>

#include "helpers.hpp"
#include "rwre/fleet.hpp"
#include "rwre/stats.hpp"

using namespace rwre;
using testing::error_kind;

namespace {

Slab slab_of(int d, std::vector<Move> moves) {
  Slab s;
  s.dim = d;
  s.moves = std::move(moves);
  s.width = s.displacement().level();
  return s;
}

SlabStream stream_of(std::shared_ptr<const SiteLaw> law, std::vector<Slab> slabs) {
  SlabStream st;
  st.law = std::move(law);
  st.slabs = std::move(slabs);
  return st;
}

// P(Binomial(n, p) > v) by direct summation of the mass function.
double binomial_tail(int n, double p, int v) {
  double s = 0.0;
  for (int k = v + 1; k <= n; ++k) {
    s += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) +
                  (n - k) * std::log1p(-p));
  }
  return s;
}

OverlapReport flat_report() {
  OverlapReport r;
  r.reps = 1000;
  r.tilde_reps = 1000;
  r.m_partial = {1.5, 1.9, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0};
  r.m_tilde_partial = {2.0, 2.8, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0};
  r.m_hat = 2.0;
  r.m_tilde_hat = 3.0;
  r.extent_a = 50.0;
  r.extent_b = 50.0;
  r.tail_a = {{1, 0.5}, {4, 0.3}, {25, 0.05}};
  r.tail_b = {{1, 0.4}, {9, 0.02}};
  return r;
}

}  // namespace

TEST_CASE("test primitives") {
  CHECK(chi_square_sf(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(chi_square_sf(0.0, 3) == doctest::Approx(1.0));

  Rng rng(RngKey{1});
  std::vector<double> u(5000);
  for (auto& x : u) x = rng.uniform();
  CHECK(ks_uniform_p_value(u) > 0.01);
  std::vector<double> sq = u;
  for (auto& x : sq) x = x * x;
  CHECK(ks_uniform_p_value(sq) < 1e-6);

  std::vector<double> alt;
  for (int i = 0; i < 1000; ++i) alt.push_back(i % 2 == 0 ? 1.0 : -1.0);
  CHECK(autocorrelation(alt, 1) == doctest::Approx(-0.999).epsilon(1e-9));
  CHECK(autocorrelation(alt, 2) == doctest::Approx(0.998).epsilon(1e-9));
  const std::vector<double> flat(10, 3.0);
  CHECK(std::isnan(autocorrelation(flat, 1)));

  for (double p : {0.0027, 0.1, 0.5}) {
    const auto v = binomial_upper_quantile(200, p, 0.001);
    CHECK(binomial_tail(200, p, static_cast<int>(v)) < 0.001);
    if (v > 0) CHECK(binomial_tail(200, p, static_cast<int>(v) - 1) >= 0.001);
  }

  const std::vector<std::uint64_t> counts{30, 30, 40};
  const std::vector<double> probs{0.3, 0.3, 0.4};
  const auto gof = chi_square_gof(counts, probs);
  CHECK(gof.statistic == doctest::Approx(0.0));
  CHECK(gof.dof == 2);

  // 2x2 table with statistic (ad - bc)^2 n / (row and column products).
  const auto ind = chi_square_independence({{20, 30}, {30, 20}});
  CHECK(ind.statistic == doctest::Approx(4.0));
  CHECK(ind.dof == 1);
}

TEST_CASE("log-log fit and flattening fraction") {
  const std::vector<double> xs{2, 4, 8, 16};
  std::vector<double> ys;
  for (double x : xs) ys.push_back(3.0 * std::pow(x, -1.5));
  const auto f = fit_loglog(xs, ys);
  CHECK(f.slope == doctest::Approx(-1.5));
  CHECK(f.intercept == doctest::Approx(std::log(3.0)));
  CHECK(f.stderr_slope == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(error_kind([&] { fit_loglog(std::span(xs).first(2), std::span<const double>(ys).first(2)); }) ==
        ErrorKind::InvalidArgument);

  const std::vector<double> linear{1, 2, 3, 4};
  CHECK(last_quarter_fraction(linear) == doctest::Approx(0.25));
  const std::vector<double> flat{1, 2, 2, 2, 2, 2, 2, 2};
  CHECK(last_quarter_fraction(flat) == doctest::Approx(0.0));
}

TEST_CASE("velocity estimates") {
  VelocityOptions o;
  o.slab_count = 200;
  o.stream.horizon = 500;
  o.stream.margin = 50;
  const auto det = velocity_estimate(fleet::deterministic(3), 100, 20, RngKey{1}, o);
  CHECK(det.direct == std::vector<double>{1.0, 0.0, 0.0});
  CHECK(det.renewal == std::vector<double>{1.0, 0.0, 0.0});
  CHECK(det.agree);

  VelocityOptions o5;
  o5.slab_count = 2000;
  o5.stream.horizon = 4000;
  o5.stream.margin = 400;
  const auto v5 = velocity_estimate(fleet::d5_test(), 2000, 500, RngKey{2}, o5);
  const std::vector<double> truth{0.2, 0.0, 0.0, 0.0, 0.0};
  for (int a = 0; a < 5; ++a) CHECK(std::abs(v5.direct[a] - truth[a]) <= v5.direct_radius[a]);
}

TEST_CASE("deterministic displacement profile") {
  const auto st = stream_of(fleet::deterministic(2), std::vector<Slab>(10, slab_of(2, {plus_move(0)})));
  const std::vector<int> ns{1, 2, 4};
  const auto prof = displacement_profile(st, ns, 100, RngKey{3});
  for (const auto& r : prof.rows) {
    CHECK(r.sup == 1.0);
    CHECK(r.l2 == doctest::Approx(1.0));
  }
  CHECK(prof.sup_fit.slope == doctest::Approx(0.0));
}

TEST_CASE("displacement profile matches an exact convolution") {
  const std::vector<Slab> slabs{slab_of(2, {plus_move(0)}), slab_of(2, {plus_move(0)}),
                                slab_of(2, {plus_move(1), plus_move(0)}), slab_of(2, {minus_move(1), plus_move(0)}),
                                slab_of(2, {plus_move(0), plus_move(1), plus_move(0)})};
  const auto st = stream_of(fleet::d2_analog(), slabs);

  std::map<Site, double> step;
  for (const auto& s : slabs) step[s.displacement()] += 1.0 / slabs.size();
  std::map<Site, double> p{{Site{}, 1.0}};
  for (int k = 0; k < 4; ++k) {
    std::map<Site, double> next;
    for (const auto& [a, pa] : p)
      for (const auto& [b, pb] : step) next[a + b] += pa * pb;
    p = next;
  }
  double sup = 0.0, sq = 0.0;
  for (const auto& [z, q] : p) {
    sup = std::max(sup, q);
    sq += q * q;
  }

  const std::vector<int> ns{1, 2, 4};
  const auto prof = displacement_profile(st, ns, 200000, RngKey{4});
  const auto& row = prof.rows[2];
  CHECK(row.n == 4);
  CHECK(std::abs(row.sup - sup) <= 3.0 * row.sup_se);
  CHECK(std::abs(row.l2 - std::sqrt(sq)) <= 3.0 * row.l2_se);
}

TEST_CASE("deterministic overlap profile diverges") {
  const auto st = stream_of(fleet::deterministic(2), std::vector<Slab>(10, [] {
                              Slab s = slab_of(2, {plus_move(0)});
                              s.onpath = {{Site{}, 0}};
                              return s;
                            }()));
  const auto rep = hitting_profile(st, st, 8, 50, RngKey{5});
  for (int k = 0; k < 8; ++k) {
    CHECK(rep.per_n[k] == 1.0);
    CHECK(rep.partial_sums[k] == k + 1.0);
    CHECK(rep.m_partial[k] == k + 2.0);
  }
  CHECK(rep.m_hat == 9.0);
  CHECK(last_quarter_fraction(rep.m_partial) >= kFlatteningFraction);
  CHECK(rep.mean_visited == 1.0);
}

TEST_CASE("certificate arithmetic and refusals") {
  auto r = flat_report();
  const Site z0{{-40}};

  const auto zero = certify_nonintersection(r, z0, 6.0);
  CHECK(zero.converged);
  CHECK(zero.lambda_cs == 0.0);
  CHECK(zero.value == 0.0);
  CHECK(zero.pass);

  const auto c = certify_nonintersection(r, z0, 2.0);
  CHECK(c.lambda_cs == doctest::Approx(0.05));
  CHECK(c.value == doctest::Approx(0.05 * 2.0 + 0.05 * 3.0 + 0.05 * 0.05));
  CHECK(c.value_cs == doctest::Approx(std::sqrt(0.1) + std::sqrt(0.15) + 0.05));
  CHECK(c.pass);

  CHECK_FALSE(certify_nonintersection(r, Site{{40}}, 2.0).pass);
  CHECK_FALSE(certify_nonintersection(r, Site{{-3}}, 2.0).separated);

  auto div = r;
  div.m_partial = {2, 3, 4, 5, 6, 7, 8, 9};
  const auto refused = certify_nonintersection(div, z0, 2.0);
  CHECK_FALSE(refused.converged);
  CHECK_FALSE(refused.pass);
  CHECK(refused.reason.find("M") != std::string::npos);

  auto shallow = r;
  shallow.extent_b = 3.0;
  CHECK(error_kind([&] { certify_nonintersection(shallow, z0, 2.0); }) == ErrorKind::TailNotEstimable);

  CHECK(tune_radius(r, z0, 0.1) == 2.0);
  CHECK(tune_radius(r, z0, 0.01) == 5.0);
  CHECK_FALSE(tune_radius(r, Site{{-3}}, 0.1));
  CHECK(tail_mass(r.tail_a, 1.0) == doctest::Approx(0.35));
}

TEST_CASE("structures with disjoint level ranges never intersect") {
  SlabStreamOptions o;
  o.horizon = 2000;
  o.margin = 200;
  const auto pool = sample_slab_stream(fleet::d2_random(), 500, RngKey{6}, o);
  const auto mirrored = std::make_shared<const SiteLaw>(mirror_law(*pool.law));
  IntersectionOptions io;
  io.n_slabs = 16;
  io.horizon = 40;
  const auto r = intersection_expectation(pool, mirrored, Site{{50}}, 200, RngKey{7}, io);
  CHECK(r.direct == 0.0);
  CHECK(r.product == 0.0);
  CHECK(r.p_empty == 1.0);
}

TEST_CASE("slab i.i.d. checks") {
  const std::vector<std::int64_t> ones(500, 1);
  const auto deg = slab_iid_test(ones, ones);
  CHECK(deg.degenerate);
  CHECK(deg.pass);

  Rng rng(RngKey{8});
  std::vector<std::int64_t> w, u;
  for (int i = 0; i < 10000; ++i) {
    w.push_back(1 + static_cast<std::int64_t>(rng.below(3)));
    u.push_back(w.back() + static_cast<std::int64_t>(rng.below(10)));
  }
  const auto iid = slab_iid_test(w, u);
  CHECK(iid.band == doctest::Approx(0.03));
  CHECK(iid.pass);

  std::vector<std::int64_t> pw, pu;
  for (int i = 0; i < 100; ++i) {
    for (int c = 0; c < 100; ++c) {
      pw.push_back(w[i]);
      pu.push_back(u[i]);
    }
  }
  const auto planted = slab_iid_test(pw, pu);
  CHECK_FALSE(planted.pass);
  CHECK(planted.lag1_duration > 0.5);
}

TEST_CASE("transience profile on a deterministic world") {
  Slab s = slab_of(2, {plus_move(0)});
  s.onpath = {{Site{}, 0}};
  const auto pool = stream_of(fleet::deterministic(2), std::vector<Slab>(10, s));
  const auto r = transience_profile(pool, 5, 5, 20, 100, RngKey{9});
  for (double b : r.b_hat) CHECK(b == 1.0);
  CHECK(r.monotone);
  CHECK(r.top_exit_fraction == 1.0);
}
