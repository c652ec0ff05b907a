#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "rwre/error.hpp"
#include "rwre/stats.hpp"

namespace rwre {

std::pair<std::vector<double>, std::vector<double>> renewal_velocity(const SlabStream& stream) {
  const int d = stream.law->dim();
  const auto n = static_cast<double>(stream.slabs.size());
  if (stream.slabs.size() < 2) throw LabError(ErrorKind::InvalidArgument, "renewal estimator needs >= 2 slabs");
  std::vector<std::vector<double>> disp(stream.slabs.size());
  double sum_u = 0.0;
  std::vector<double> sum_k(d, 0.0);
  for (std::size_t i = 0; i < stream.slabs.size(); ++i) {
    const Site k = stream.slabs[i].displacement();
    sum_u += static_cast<double>(stream.slabs[i].duration());
    for (int a = 0; a < d; ++a) sum_k[a] += k.c[a];
    disp[i].assign(k.c.begin(), k.c.begin() + d);
  }
  std::vector<double> ratio(d);
  std::vector<double> radius(d);
  const double mean_u = sum_u / n;
  for (int a = 0; a < d; ++a) {
    ratio[a] = sum_k[a] / sum_u;
    double ss = 0.0;
    for (std::size_t i = 0; i < stream.slabs.size(); ++i) {
      const double r = disp[i][a] - ratio[a] * static_cast<double>(stream.slabs[i].duration());
      ss += r * r;
    }
    radius[a] = 3.0 * std::sqrt(ss / (n - 1.0) / n) / mean_u;
  }
  return {ratio, radius};
}

VelocityReport velocity_estimate(const std::shared_ptr<const SiteLaw>& law, std::int64_t steps, std::size_t reps,
                                 RngKey key, const VelocityOptions& opts) {
  if (steps < 1 || reps < 1) throw LabError(ErrorKind::InvalidArgument, "steps and reps must be >= 1");
  const int d = law->dim();
  const auto ends = parallel_map(reps, opts.stream.par, [&](std::size_t r) {
    return simulate_annealed(law, Site{}, steps, key.child(Stream::Walk).child(r)).end();
  });
  VelocityReport rep;
  rep.direct.assign(d, 0.0);
  rep.direct_radius.assign(d, 0.0);
  std::vector<double> v(reps);
  for (int a = 0; a < d; ++a) {
    for (std::size_t r = 0; r < reps; ++r) v[r] = static_cast<double>(ends[r].c[a]) / static_cast<double>(steps);
    const auto ms = mean_se(v);
    rep.direct[a] = ms.mean;
    rep.direct_radius[a] = 3.0 * ms.se;
  }

  const auto stream = sample_slab_stream(law, opts.slab_count, key.child(Stream::Slabs), opts.stream);
  rep.slabs = stream.slabs.size();
  std::tie(rep.renewal, rep.renewal_radius) = renewal_velocity(stream);
  rep.agree = true;
  for (int a = 0; a < d; ++a) {
    const double tol = std::hypot(rep.direct_radius[a], rep.renewal_radius[a]) + 1e-12;
    if (std::abs(rep.direct[a] - rep.renewal[a]) > tol) rep.agree = false;
  }
  return rep;
}

DisplacementProfile displacement_profile(const SlabStream& stream, std::span<const int> n_values, std::size_t reps,
                                         RngKey key, Parallelism par) {
  if (n_values.size() < 3) throw LabError(ErrorKind::InvalidArgument, "displacement profile needs >= 3 n values");
  if (reps < 2) throw LabError(ErrorKind::InvalidArgument, "need at least 2 replicas");
  if (stream.slabs.empty()) throw LabError(ErrorKind::InvalidArgument, "empty slab stream");
  std::vector<Site> disp;
  disp.reserve(stream.slabs.size());
  for (const auto& s : stream.slabs) disp.push_back(s.displacement());

  DisplacementProfile prof;
  constexpr std::size_t kChunk = 4096;
  const std::size_t half = reps / 2;
  for (std::size_t j = 0; j < n_values.size(); ++j) {
    const int n = n_values[j];
    if (n < 1) throw LabError(ErrorKind::InvalidArgument, "n values must be >= 1");
    const RngKey nkey = key.child(static_cast<std::uint64_t>(n));
    // Counts split by sample half: first half in .first, second in .second.
    std::unordered_map<Site, std::pair<std::uint32_t, std::uint32_t>, SiteHash> counts;
    const std::size_t chunks = (reps + kChunk - 1) / kChunk;
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t lo = c * kChunk;
      const std::size_t len = std::min(kChunk, reps - lo);
      const auto sums = parallel_map(len, par, [&](std::size_t i) {
        Rng rng(nkey.child(lo + i));
        Site s;
        for (int k = 0; k < n; ++k) s += disp[rng.below(disp.size())];
        return s;
      });
      for (std::size_t i = 0; i < len; ++i) {
        auto& cell = counts[sums[i]];
        if (lo + i < half) ++cell.first; else ++cell.second;
      }
    }
    DisplacementRow row;
    row.n = n;
    double collisions = 0.0;
    double cubes = 0.0;
    const double total = static_cast<double>(reps);
    for (const auto& [site, ab] : counts) {
      row.max_count = std::max<std::uint64_t>(row.max_count, ab.first + ab.second);
      collisions += static_cast<double>(ab.first) * ab.second;
      const double p = (ab.first + ab.second) / total;
      cubes += p * p * p;
    }
    if (row.max_count < 30 || collisions == 0.0) {
      throw LabError(ErrorKind::InsufficientMass, "n=" + std::to_string(n) + ": max cell count " +
                                                      std::to_string(row.max_count) + " < 30");
    }
    row.sup = static_cast<double>(row.max_count) / total;
    row.sup_se = std::sqrt(row.sup * (1.0 - row.sup) / total);
    const double pairs = static_cast<double>(half) * static_cast<double>(reps - half);
    const double sq = collisions / pairs;
    row.l2 = std::sqrt(sq);
    // Two-sample U-statistic variance, plug-in moments.
    const double n1 = static_cast<double>(half);
    const double n2 = static_cast<double>(reps - half);
    const double var = (1.0 / n1 + 1.0 / n2) * std::max(0.0, cubes - sq * sq) + sq / (n1 * n2);
    row.l2_se = std::sqrt(var) / (2.0 * row.l2);
    prof.rows.push_back(row);
  }
  std::vector<double> xs;
  std::vector<double> sup;
  std::vector<double> l2;
  for (const auto& r : prof.rows) {
    xs.push_back(r.n);
    sup.push_back(r.sup);
    l2.push_back(r.l2);
  }
  prof.sup_fit = fit_loglog(xs, sup);
  prof.l2_fit = fit_loglog(xs, l2);
  return prof;
}

}  // namespace rwre
