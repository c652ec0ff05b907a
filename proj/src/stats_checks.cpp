#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "rwre/error.hpp"
#include "rwre/stats.hpp"

namespace rwre {

CouplingReport coupling_tests(const GluedWorld& world, std::size_t sites, RngKey key, int halfwidth, Which which) {
  const int d = world.dim();
  const auto levels = world.top_level() - world.bottom_level();
  const std::int64_t side = 2 * halfwidth + 1;
  double box = static_cast<double>(levels);
  for (int a = 1; a < d; ++a) box *= static_cast<double>(side);
  if (halfwidth < 0 || static_cast<double>(sites) > box / 2.0) {
    throw LabError(ErrorKind::InvalidArgument, "requested sites exceed half of the sampling box");
  }

  Rng rng(key.child(Stream::Sites));
  std::unordered_set<Site, SiteHash> chosen;
  std::vector<Site> sample;
  sample.reserve(sites);
  while (sample.size() < sites) {
    Site z;
    z.c[0] = static_cast<std::int32_t>(world.bottom_level() + static_cast<std::int64_t>(rng.below(levels)));
    for (int a = 1; a < d; ++a) z.c[a] = static_cast<std::int32_t>(rng.below(side)) - halfwidth;
    if (chosen.insert(z).second) sample.push_back(z);
  }

  const std::size_t k = world.law().size();
  CouplingReport rep;
  rep.sites = sites;
  std::vector<std::uint64_t> marginal(k, 0);
  std::vector<std::vector<std::uint64_t>> by_path(2, std::vector<std::uint64_t>(k, 0));
  std::vector<std::vector<std::uint64_t>> adjacent(k, std::vector<std::uint64_t>(k, 0));
  const Site up = Site::unit(0);
  for (const auto& z : sample) {
    const auto atom = world.atom_at(z, which);
    const bool on_path = world.in_path(z);
    if (!on_path && atom != world.atom_at(z, which == Which::Omega ? Which::OmegaTilde : Which::Omega)) {
      rep.off_path_agree = false;
    }
    rep.path_sites += on_path ? 1 : 0;
    ++marginal[atom];
    ++by_path[on_path ? 1 : 0][atom];
    const Site nb = z + up;
    if (world.covers(nb)) ++adjacent[atom][world.atom_at(nb, which)];
  }
  std::vector<double> weights;
  for (std::uint32_t a = 0; a < k; ++a) weights.push_back(world.law().weight(a));
  rep.marginal_p = chi_square_gof(marginal, weights).p_value;
  rep.independence_p = chi_square_independence(by_path).p_value;
  rep.adjacency_p = chi_square_independence(adjacent).p_value;
  return rep;
}

CouplingStudy coupling_study(const SlabStream& pool, std::size_t worlds, int n_slabs, std::size_t sites, RngKey key,
                             Parallelism par) {
  if (worlds < 1 || n_slabs < 1) throw LabError(ErrorKind::InvalidArgument, "bad coupling study parameters");
  if (pool.slabs.empty()) throw LabError(ErrorKind::InvalidArgument, "empty slab pool");
  const auto reports = parallel_map(worlds, par, [&](std::size_t w) {
    const RngKey k = key.child(w);
    Rng rng(k.child(Stream::Resample));
    std::vector<Slab> slabs(static_cast<std::size_t>(2 * n_slabs));
    for (auto& sl : slabs) sl = pool.slabs[rng.below(pool.slabs.size())];
    const auto world = GluedWorld::couple(std::move(slabs), static_cast<std::size_t>(n_slabs), pool.law, k);
    return coupling_tests(world, sites, k);
  });
  CouplingStudy st;
  st.worlds = worlds;
  st.required = (97 * worlds + 99) / 100;
  st.degenerate = pool.law->size() == 1;
  for (const auto& r : reports) {
    st.off_path_failures += r.off_path_agree ? 0 : 1;
    st.marginal_pass += r.marginal_p > 0.01 ? 1 : 0;
    st.independence_pass += r.independence_p > 0.01 ? 1 : 0;
    st.adjacency_pass += r.adjacency_p > 0.01 ? 1 : 0;
    st.marginal_p.push_back(r.marginal_p);
    st.independence_p.push_back(r.independence_p);
  }
  st.ks_p = st.degenerate ? 1.0 : ks_uniform_p_value(st.marginal_p);
  st.pass = st.off_path_failures == 0 && st.marginal_pass >= st.required && st.independence_pass >= st.required &&
            (st.degenerate || st.ks_p > 0.01);
  return st;
}

TransienceReport transience_profile(const SlabStream& pool, int n_back, int n_top, std::size_t walks,
                                    std::int64_t steps, RngKey key, Parallelism par) {
  if (n_back < 1 || n_top < 1 || walks < 1) throw LabError(ErrorKind::InvalidArgument, "bad transience parameters");
  if (pool.slabs.empty()) throw LabError(ErrorKind::InvalidArgument, "empty slab pool");
  struct Outcome {
    ExitSide exit = ExitSide::None;
    int first_ok = 0;  // smallest N with min level >= level(Y_{-N}), 0 if none
  };
  const auto outcomes = parallel_map(walks, par, [&](std::size_t w) {
    const RngKey k = key.child(w);
    Rng rng(k.child(Stream::Resample));
    std::vector<Slab> slabs;
    slabs.reserve(static_cast<std::size_t>(n_back + n_top));
    for (int i = 0; i < n_back + n_top; ++i) slabs.push_back(pool.slabs[rng.below(pool.slabs.size())]);
    const auto world = GluedWorld::glue(std::move(slabs), static_cast<std::size_t>(n_back), pool.law);
    const auto walk = walk_on_glued(world, Site{}, steps, k, Which::OmegaTilde);
    Outcome o;
    o.exit = walk.exit;
    for (int n = 1; n <= n_back; ++n) {
      if (walk.min_level >= world.anchor(-n).level()) {
        o.first_ok = n;
        break;
      }
    }
    return o;
  });

  TransienceReport rep;
  rep.walks = walks;
  rep.b_hat.assign(static_cast<std::size_t>(n_back), 0.0);
  rep.b_se.assign(static_cast<std::size_t>(n_back), 0.0);
  std::size_t top = 0;
  for (const auto& o : outcomes) {
    if (o.exit == ExitSide::Top) ++top;
    if (o.exit == ExitSide::None) ++rep.censored;
    if (o.exit != ExitSide::Top || o.first_ok == 0) continue;
    for (int n = o.first_ok; n <= n_back; ++n) rep.b_hat[n - 1] += 1.0;
  }
  const double w = static_cast<double>(walks);
  rep.top_exit_fraction = static_cast<double>(top) / w;
  for (std::size_t i = 0; i < rep.b_hat.size(); ++i) {
    rep.b_hat[i] /= w;
    rep.b_se[i] = std::sqrt(rep.b_hat[i] * (1.0 - rep.b_hat[i]) / w);
    if (i > 0 && rep.b_hat[i] < rep.b_hat[i - 1] - 3.0 * std::hypot(rep.b_se[i], rep.b_se[i - 1])) {
      rep.monotone = false;
    }
  }
  return rep;
}

std::vector<std::int64_t> quartile_cuts(std::vector<std::int64_t> values) {
  if (values.empty()) return {};
  std::sort(values.begin(), values.end());
  std::vector<std::int64_t> cuts;
  for (int q = 1; q <= 3; ++q) {
    const auto v = values[(values.size() * q) / 4];
    if (cuts.empty() || cuts.back() != v) cuts.push_back(v);
  }
  return cuts;
}

std::vector<int> slab_categories(std::span<const std::int64_t> widths, std::span<const std::int64_t> durations,
                                 std::span<const std::int64_t> duration_cuts) {
  std::vector<int> out;
  out.reserve(widths.size());
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const int wbin = static_cast<int>(std::min<std::int64_t>(widths[i], 4));
    const int ubin = static_cast<int>(std::upper_bound(duration_cuts.begin(), duration_cuts.end(), durations[i]) -
                                      duration_cuts.begin());
    out.push_back(wbin * 16 + ubin);
  }
  return out;
}

SlabIidReport slab_iid_test(std::span<const std::int64_t> widths, std::span<const std::int64_t> durations) {
  if (widths.size() != durations.size()) throw LabError(ErrorKind::InvalidArgument, "series length mismatch");
  SlabIidReport rep;
  rep.count = widths.size();
  if (rep.count < 8) throw LabError(ErrorKind::InvalidArgument, "slab i.i.d. test needs more slabs");
  rep.band = 3.0 / std::sqrt(static_cast<double>(rep.count));
  const std::vector<double> l(widths.begin(), widths.end());
  const std::vector<double> u(durations.begin(), durations.end());
  rep.lag1_width = autocorrelation(l, 1);
  rep.lag2_width = autocorrelation(l, 2);
  rep.lag1_duration = autocorrelation(u, 1);
  rep.lag2_duration = autocorrelation(u, 2);

  auto within = [&](double r) { return std::isnan(r) || std::abs(r) < rep.band; };
  rep.degenerate = std::isnan(rep.lag1_width) && std::isnan(rep.lag1_duration);

  const auto cuts = quartile_cuts(std::vector<std::int64_t>(durations.begin(), durations.end()));
  const auto cats = slab_categories(widths, durations, cuts);
  const std::size_t half = cats.size() / 2;
  rep.two_sample_p = two_sample_chi_square(std::span(cats).first(half), std::span(cats).subspan(half)).p_value;
  rep.pass = rep.degenerate || (within(rep.lag1_width) && within(rep.lag2_width) && within(rep.lag1_duration) &&
                                within(rep.lag2_duration) && rep.two_sample_p > 0.01);
  return rep;
}

SlabIidReport slab_iid_test(std::span<const Slab> slabs) {
  std::vector<std::int64_t> l;
  std::vector<std::int64_t> u;
  for (const auto& s : slabs) {
    l.push_back(s.width);
    u.push_back(s.duration());
  }
  return slab_iid_test(l, u);
}

GluedForwardReport glued_vs_forward(const SlabStream& pool, int index, std::size_t samples, std::int64_t horizon,
                                    std::int64_t margin, RngKey key, Parallelism par) {
  if (index < 1) throw LabError(ErrorKind::InvalidArgument, "slab index must be >= 1");
  const ConditionEvent positive{Condition::StayPositive, horizon};
  struct Pair {
    std::int64_t fl = 0, fu = 0, gl = 0, gu = 0;
    bool forward_ok = false;
  };
  const auto pairs = parallel_map(samples, par, [&](std::size_t s) {
    const RngKey k = key.child(s);
    Pair p;
    const auto fwd = sample_conditioned(pool.law, Site{}, positive, k.child(Stream::CopyA));
    const auto rec = find_regenerations(fwd.trajectory, margin);
    if (rec.times.size() > static_cast<std::size_t>(index) && rec.times.front() == 0) {
      const auto levels = fwd.trajectory.levels();
      p.fl = levels[rec.times[index]] - levels[rec.times[index - 1]];
      p.fu = rec.times[index] - rec.times[index - 1];
      p.forward_ok = true;
    }
    Rng rng(k.child(Stream::CopyB));
    std::vector<Slab> slabs(static_cast<std::size_t>(index));
    for (auto& sl : slabs) sl = pool.slabs[rng.below(pool.slabs.size())];
    const auto world = GluedWorld::glue(std::move(slabs), static_cast<std::size_t>(index), pool.law);
    p.gl = world.slab(-index).width;
    p.gu = world.slab(-index).duration();
    return p;
  });

  std::vector<std::int64_t> fl, fu, gl, gu;
  for (const auto& p : pairs) {
    if (p.forward_ok) {
      fl.push_back(p.fl);
      fu.push_back(p.fu);
    }
    gl.push_back(p.gl);
    gu.push_back(p.gu);
  }
  GluedForwardReport rep;
  rep.index = index;
  rep.forward_samples = fl.size();
  rep.glued_samples = gl.size();
  std::vector<std::int64_t> all_u = fu;
  all_u.insert(all_u.end(), gu.begin(), gu.end());
  const auto cuts = quartile_cuts(all_u);
  const auto fc = slab_categories(fl, fu, cuts);
  const auto gc = slab_categories(gl, gu, cuts);
  rep.p_value = two_sample_chi_square(fc, gc).p_value;
  auto mean = [](const std::vector<std::int64_t>& v) {
    double s = 0.0;
    for (auto x : v) s += static_cast<double>(x);
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  rep.forward_mean_u = mean(fu);
  rep.glued_mean_u = mean(gu);
  return rep;
}

}  // namespace rwre
