#include <map>
#include <set>

#include "helpers.hpp"
#include "rwre/env_model.hpp"
#include "rwre/stats.hpp"

using namespace rwre;
using testing::error_kind;

TEST_CASE("make_kernel validates and reports drift") {
  const std::vector<double> p{0.4, 0.1, 0.25, 0.25};
  const auto k = make_kernel(2, p, 0.1);
  const auto drift = k.drift();
  CHECK(drift[0] == doctest::Approx(0.3));
  CHECK(drift[1] == doctest::Approx(0.0));

  const std::vector<double> sym{0.5, 0.5};
  CHECK(make_kernel(1, sym, 0.5).drift()[0] == doctest::Approx(0.0));

  const std::vector<double> thin{0.5, 0.05, 0.25, 0.2};
  CHECK(error_kind([&] { make_kernel(2, thin, 0.1); }) == ErrorKind::EllipticityViolated);

  const std::vector<double> off{0.5, 0.5 + 1e-9};
  CHECK(error_kind([&] { make_kernel(1, off, 0.0); }) == ErrorKind::NotNormalized);
  const std::vector<double> close{0.5, 0.5 + 1e-13};
  CHECK_FALSE(error_kind([&] { make_kernel(1, close, 0.0); }));

  const std::vector<double> neg{1.2, -0.2};
  CHECK(error_kind([&] { make_kernel(1, neg, 0.0); }) == ErrorKind::NegativeEntry);

  const std::vector<double> short_vec{1.0};
  CHECK(error_kind([&] { make_kernel(1, short_vec, 0.0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("site law construction errors") {
  CHECK(error_kind([] { make_law(1, 0.1, {{0.5, {0.6, 0.4}}, {0.4, {0.7, 0.3}}}); }) == ErrorKind::NotNormalized);
  CHECK(error_kind([] { make_law(1, 0.35, {{0.5, {0.6, 0.4}}, {0.5, {0.7, 0.3}}}); }) ==
        ErrorKind::EllipticityViolated);
}

TEST_CASE("sample_site: point mass, frequencies, determinism") {
  const auto point = make_law(2, 0.1, {{1.0, {0.4, 0.1, 0.25, 0.25}}});
  for (std::uint64_t i = 0; i < 100; ++i) CHECK(sample_site(point, RngKey{i}) == point.kernel(0));

  const auto two = make_law(1, 0.1, {{0.5, {0.6, 0.4}}, {0.5, {0.9, 0.1}}});
  std::uint64_t first = 0;
  for (std::uint64_t i = 0; i < 100000; ++i) first += sample_site_atom(two, RngKey{77}.child(i)) == 0 ? 1 : 0;
  CHECK(std::abs(first / 1e5 - 0.5) <= 0.01);

  CHECK(sample_site_atom(two, RngKey{5}) == sample_site_atom(two, RngKey{5}));
}

TEST_CASE("env_at is pure and replays a transcript") {
  auto law = testing::law(2, 0.1, {{0.5, {0.5, 0.1, 0.2, 0.2}}, {0.5, {0.3, 0.2, 0.25, 0.25}}});
  const Environment env(law, 1234);
  std::vector<std::pair<Site, std::uint32_t>> transcript;
  for (int x = -20; x <= 20; ++x) {
    for (int y = -20; y <= 20; ++y) {
      Site z;
      z.c[0] = x;
      z.c[1] = y;
      transcript.emplace_back(z, env.atom_at(z));
    }
  }
  const Environment again(law, 1234);
  for (const auto& [z, a] : transcript) {
    CHECK(again.atom_at(z) == a);
    CHECK(env_at(again, z) == law->kernel(a));
  }
}

TEST_CASE("kernels at the origin collide across seeds with probability sum w^2") {
  auto law = testing::law(1, 0.1, {{0.5, {0.6, 0.4}}, {0.3, {0.7, 0.3}}, {0.2, {0.8, 0.2}}});
  const double expected = 0.5 * 0.5 + 0.3 * 0.3 + 0.2 * 0.2;
  std::uint64_t agree = 0;
  const int pairs = 10000;
  for (int i = 0; i < pairs; ++i) {
    const Environment a(law, splitmix64(2 * i));
    const Environment b(law, splitmix64(2 * i + 1));
    agree += a.atom_at(Site{}) == b.atom_at(Site{}) ? 1 : 0;
  }
  CHECK(std::abs(agree / double(pairs) - expected) <= 3.0 * testing::binomial_sigma(expected, pairs));
}

TEST_CASE("environment marginal passes chi-square against Q") {
  auto law = testing::law(2, 0.05,
                          {{0.2, {0.4, 0.2, 0.2, 0.2}}, {0.3, {0.55, 0.05, 0.2, 0.2}}, {0.5, {0.25, 0.25, 0.25, 0.25}}});
  const Environment env(law, 99);
  std::vector<std::uint64_t> counts(3, 0);
  for (int i = 0; i < 10000; ++i) {
    Site z;
    z.c[0] = i % 100;
    z.c[1] = i / 100;
    ++counts[env.atom_at(z)];
  }
  const std::vector<double> w{0.2, 0.3, 0.5};
  const auto r = chi_square_gof(counts, w);
  CHECK(r.dof == 2);
  CHECK(r.p_value > 0.01);
}

TEST_CASE("mirror_law swaps the first-axis entries") {
  const auto one = make_law(1, 0.4, {{1.0, {0.6, 0.4}}});
  const auto m = mirror_law(one);
  CHECK(m.kernel(0).prob(0) == doctest::Approx(0.4));
  CHECK(m.kernel(0).prob(1) == doctest::Approx(0.6));

  const auto two = make_law(2, 0.1, {{0.5, {0.5, 0.1, 0.2, 0.2}}, {0.5, {0.3, 0.2, 0.1, 0.4}}});
  CHECK(mirror_law(mirror_law(two)) == two);
  const auto d = two.mean_drift();
  const auto dm = mirror_law(two).mean_drift();
  CHECK(dm[0] == doctest::Approx(-d[0]));
  CHECK(dm[1] == doctest::Approx(d[1]));
}
