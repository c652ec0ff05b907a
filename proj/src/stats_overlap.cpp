#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "rwre/error.hpp"
#include "rwre/stats.hpp"

namespace rwre {

namespace {

// Backward half of a glued world: n_slabs i.i.d. draws from the pool, all below Y_0 = 0.
GluedWorld backward_world(const SlabStream& pool, int n_slabs, RngKey key) {
  Rng rng(key.child(Stream::Resample));
  std::vector<Slab> slabs(static_cast<std::size_t>(n_slabs));
  for (int k = 1; k <= n_slabs; ++k) slabs[n_slabs - k] = pool.slabs[rng.below(pool.slabs.size())];
  return GluedWorld::glue(std::move(slabs), static_cast<std::size_t>(n_slabs), pool.law);
}

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  const auto mid = xs.begin() + static_cast<std::ptrdiff_t>(xs.size() / 2);
  std::nth_element(xs.begin(), mid, xs.end());
  return *mid;
}

std::vector<Site> visited_after_start(const Trajectory& t) {
  std::unordered_set<Site, SiteHash> seen;
  std::vector<Site> out;
  Site x = t.start;
  for (Move m : t.moves) {
    x = x.stepped(m);
    if (seen.insert(x).second) out.push_back(x);
  }
  return out;
}

struct PairOverlap {
  std::vector<std::uint32_t> same_slab;  // by k-1
  std::vector<std::uint32_t> by_max;     // by max(k_A, k_B) - 1
  std::vector<std::int64_t> radii2;
  std::uint32_t total = 0;
  double extent = 0.0;
};

}  // namespace

OverlapReport hitting_profile(const SlabStream& stream_a, const SlabStream& stream_b, int n_max, std::size_t reps,
                              RngKey key, Parallelism par) {
  if (n_max < 4) throw LabError(ErrorKind::InvalidArgument, "n_max must be >= 4");
  if (reps < 2) throw LabError(ErrorKind::InvalidArgument, "need at least 2 replicas");
  if (stream_a.slabs.empty() || stream_b.slabs.empty()) throw LabError(ErrorKind::InvalidArgument, "empty slab stream");

  OverlapReport rep;
  rep.reps = reps;
  const auto nm = static_cast<std::size_t>(n_max);
  std::vector<double> sum_same(nm, 0.0), sumsq_same(nm, 0.0), sum_max(nm, 0.0);
  std::vector<double> sumsq_cum_same(nm, 0.0), sumsq_cum_max(nm, 0.0);
  std::vector<double> totals;
  std::vector<double> extents;
  totals.reserve(reps);
  extents.reserve(reps);

  constexpr std::size_t kChunk = 2048;
  for (std::size_t lo = 0; lo < reps; lo += kChunk) {
    const std::size_t len = std::min(kChunk, reps - lo);
    auto chunk = parallel_map(len, par, [&](std::size_t i) {
      const RngKey k = key.child(lo + i);
      const GluedWorld a = backward_world(stream_a, n_max, k.child(Stream::CopyA));
      const GluedWorld b = backward_world(stream_b, n_max, k.child(Stream::CopyB));
      PairOverlap po;
      po.same_slab.assign(nm, 0);
      po.by_max.assign(nm, 0);
      for (const auto& [z, ps] : a.onpath()) po.extent = std::max(po.extent, z.norm());
      for (const auto& [z, pb] : b.onpath()) {
        const auto* pa = a.find_path_site(z);
        if (pa == nullptr) continue;
        const auto ka = static_cast<std::size_t>(-pa->slab);
        const auto kb = static_cast<std::size_t>(-pb.slab);
        if (ka == kb) ++po.same_slab[ka - 1];
        ++po.by_max[std::max(ka, kb) - 1];
        po.radii2.push_back(z.norm2());
        ++po.total;
      }
      return po;
    });
    for (const auto& po : chunk) {
      double cum_same = 0.0;
      double cum_max = 0.0;
      for (std::size_t k = 0; k < nm; ++k) {
        sum_same[k] += po.same_slab[k];
        sumsq_same[k] += static_cast<double>(po.same_slab[k]) * po.same_slab[k];
        sum_max[k] += po.by_max[k];
        cum_same += po.same_slab[k];
        cum_max += po.by_max[k];
        sumsq_cum_same[k] += cum_same * cum_same;
        sumsq_cum_max[k] += cum_max * cum_max;
      }
      for (auto r2 : po.radii2) rep.tail_a[r2] += 1.0;
      totals.push_back(1.0 + po.total);  // the origin is common to both copies
      extents.push_back(po.extent);
    }
  }

  const double n = static_cast<double>(reps);
  auto se = [n](double sumsq, double mean) { return std::sqrt(std::max(0.0, sumsq / n - mean * mean) / (n - 1.0)); };
  double running = 0.0;
  double running_m = 0.0;
  for (std::size_t k = 0; k < nm; ++k) {
    const double mean = sum_same[k] / n;
    rep.per_n.push_back(mean);
    rep.per_n_se.push_back(se(sumsq_same[k], mean));
    running += mean;
    rep.partial_sums.push_back(running);
    rep.partial_se.push_back(se(sumsq_cum_same[k], running));
    running_m += sum_max[k] / n;
    rep.m_partial.push_back(1.0 + running_m);
    rep.m_partial_se.push_back(se(sumsq_cum_max[k], running_m));
  }
  for (auto& [r2, c] : rep.tail_a) c /= n;
  const auto ms = mean_se(totals);
  rep.m_hat = ms.mean;
  rep.m_hat_se = ms.se;
  rep.extent_a = median(std::move(extents));

  double visited = 0.0, u = 0.0, first = 0.0, second = 0.0;
  const std::size_t half = stream_a.slabs.size() / 2;
  for (std::size_t i = 0; i < stream_a.slabs.size(); ++i) {
    const auto v = static_cast<double>(stream_a.slabs[i].onpath.size());
    visited += v;
    u += static_cast<double>(stream_a.slabs[i].duration());
    (i < half ? first : second) += v;
  }
  const auto ns = static_cast<double>(stream_a.slabs.size());
  rep.mean_visited = visited / ns;
  rep.mean_u = u / ns;
  rep.mean_visited_first_half = half > 0 ? first / static_cast<double>(half) : 0.0;
  rep.mean_visited_second_half = second / static_cast<double>(stream_a.slabs.size() - half);
  return rep;
}

void conditioned_overlap(OverlapReport& report, const std::shared_ptr<const SiteLaw>& mirrored, std::int64_t horizon,
                         std::size_t reps, RngKey key, Parallelism par) {
  if (reps < 2) throw LabError(ErrorKind::InvalidArgument, "need at least 2 replicas");
  struct WalkPair {
    std::vector<std::int64_t> depths;
    std::vector<std::int64_t> radii2;
    double extent = 0.0;
    double final_depth = 0.0;
    AcceptanceStats stats;
  };
  const ConditionEvent below{Condition::StayBelowStart, horizon};
  const auto pairs = parallel_map(reps, par, [&](std::size_t r) {
    const RngKey k = key.child(r);
    const auto a = sample_conditioned(mirrored, Site{}, below, k.child(Stream::CopyA));
    const auto b = sample_conditioned(mirrored, Site{}, below, k.child(Stream::CopyB));
    WalkPair wp;
    wp.stats.attempts = a.stats.attempts + b.stats.attempts;
    wp.stats.accepted = 2;
    const auto va = visited_after_start(a.trajectory);
    const std::unordered_set<Site, SiteHash> set_a(va.begin(), va.end());
    for (const auto& z : va) wp.extent = std::max(wp.extent, z.norm());
    wp.final_depth = static_cast<double>(-a.trajectory.end().level());
    for (const auto& z : visited_after_start(b.trajectory)) {
      if (set_a.contains(z)) {
        wp.depths.push_back(-z.level());
        wp.radii2.push_back(z.norm2());
      }
    }
    return wp;
  });

  const double n = static_cast<double>(reps);
  std::vector<double> totals;
  std::vector<double> extents;
  std::vector<double> depths;
  AcceptanceStats acc;
  report.tail_b.clear();
  for (const auto& wp : pairs) {
    totals.push_back(static_cast<double>(wp.radii2.size()));
    extents.push_back(wp.extent);
    depths.push_back(wp.final_depth);
    for (auto r2 : wp.radii2) report.tail_b[r2] += 1.0 / n;
    acc.attempts += wp.stats.attempts;
    acc.accepted += wp.stats.accepted;
  }
  const auto ms = mean_se(totals);
  report.tilde_reps = reps;
  report.m_tilde_hat = ms.mean;
  report.m_tilde_se = ms.se;
  report.extent_b = median(extents);
  report.tilde_acceptance = acc.rate();

  // Partial sums by level depth, up to half the median final depth so that most
  // copies have reached every depth in the series.
  const auto max_depth = std::max<std::int64_t>(4, static_cast<std::int64_t>(median(depths) / 2.0));
  std::vector<double> by_depth(static_cast<std::size_t>(max_depth), 0.0);
  for (const auto& wp : pairs) {
    for (auto dpt : wp.depths) {
      if (dpt >= 1 && dpt <= max_depth) by_depth[dpt - 1] += 1.0 / n;
    }
  }
  report.m_tilde_partial.clear();
  double running = 0.0;
  for (double v : by_depth) {
    running += v;
    report.m_tilde_partial.push_back(running);
  }
}

double tail_mass(const std::map<std::int64_t, double>& hist, double radius) {
  double s = 0.0;
  for (auto it = hist.rbegin(); it != hist.rend(); ++it) {
    if (static_cast<double>(it->first) <= radius * radius) break;
    s += it->second;
  }
  return s;
}

Certificate certify_nonintersection(const OverlapReport& report, const Site& z0, double radius) {
  Certificate c;
  c.radius = radius;
  c.norm_z0 = z0.norm();
  c.separated = c.norm_z0 > 2.0 * radius && z0.level() < 0;
  const bool m_flat = last_quarter_fraction(report.m_partial) < kFlatteningFraction;
  const bool tilde_flat = last_quarter_fraction(report.m_tilde_partial) < kFlatteningFraction;
  c.converged = m_flat && tilde_flat;
  if (!c.converged) {
    c.reason = std::string("divergent partial sums:") + (m_flat ? "" : " M") + (tilde_flat ? "" : " M~");
    return c;
  }
  if (report.reps < 100 || report.tilde_reps < 100 || report.extent_a <= 2.0 * radius ||
      report.extent_b <= 2.0 * radius) {
    throw LabError(ErrorKind::TailNotEstimable,
                   "sampled structures do not reach well beyond R = " + std::to_string(radius));
  }
  c.lambda_cs = std::max(tail_mass(report.tail_a, radius), tail_mass(report.tail_b, radius));
  c.value = c.lambda_cs * report.m_hat + c.lambda_cs * report.m_tilde_hat + c.lambda_cs * c.lambda_cs;
  c.value_cs = std::sqrt(c.lambda_cs * report.m_hat) + std::sqrt(c.lambda_cs * report.m_tilde_hat) + c.lambda_cs;
  c.pass = c.separated && c.value < 1.0;
  if (!c.separated) c.reason = "z0 not separated: need level < 0 and ||z0|| > 2R";
  else if (!c.pass) c.reason = "certificate >= 1";
  return c;
}

std::optional<double> tune_radius(const OverlapReport& report, const Site& z0, double target_lambda) {
  const double norm = z0.norm();
  for (int r = 1; 2.0 * r < norm; ++r) {
    if (std::max(tail_mass(report.tail_a, r), tail_mass(report.tail_b, r)) <= target_lambda) return r;
  }
  return std::nullopt;
}

IntersectionReport intersection_expectation(const SlabStream& pool, const std::shared_ptr<const SiteLaw>& mirrored,
                                            const Site& z0, std::size_t reps, RngKey key,
                                            const IntersectionOptions& opts) {
  if (reps < 2) throw LabError(ErrorKind::InvalidArgument, "need at least 2 replicas");
  if (pool.slabs.empty()) throw LabError(ErrorKind::InvalidArgument, "empty slab pool");
  struct Pair {
    std::vector<Site> b;   // z0 + T~_B
    std::optional<GluedWorld> a;
    std::uint64_t attempts = 0;
  };
  const ConditionEvent below{Condition::StayBelowStart, opts.horizon};
  auto count_common = [](const GluedWorld& a, const std::vector<Site>& b) {
    std::uint32_t c = 0;
    for (const auto& z : b) {
      if (z.level() <= 0 && (z == Site{} || a.find_path_site(z) != nullptr)) ++c;
    }
    return c;
  };

  std::vector<double> direct;
  std::vector<double> cross;
  std::uint64_t attempts = 0;
  constexpr std::size_t kChunk = 512;
  for (std::size_t lo = 0; lo < reps; lo += kChunk) {
    const std::size_t len = std::min(kChunk, reps - lo);
    auto chunk = parallel_map(len, opts.par, [&](std::size_t i) {
      const RngKey k = key.child(lo + i);
      Pair p;
      p.a.emplace(backward_world(pool, opts.n_slabs, k.child(Stream::CopyA)));
      const auto s = sample_conditioned(mirrored, z0, below, k.child(Stream::CopyB));
      p.b = visited_after_start(s.trajectory);
      p.attempts = s.stats.attempts;
      return p;
    });
    const auto counts = parallel_map(len, opts.par, [&](std::size_t i) {
      std::pair<double, double> dc{static_cast<double>(count_common(*chunk[i].a, chunk[i].b)), 0.0};
      int used = 0;
      for (int s = 1; s <= opts.cross_shifts; ++s) {
        const std::size_t j = (i + static_cast<std::size_t>(s)) % len;
        if (j == i) continue;
        dc.second += count_common(*chunk[i].a, chunk[j].b);
        ++used;
      }
      dc.second = used > 0 ? dc.second / used : dc.first;
      return dc;
    });
    for (std::size_t i = 0; i < len; ++i) {
      direct.push_back(counts[i].first);
      cross.push_back(counts[i].second);
      attempts += chunk[i].attempts;
    }
  }

  IntersectionReport rep;
  rep.reps = reps;
  const auto d = mean_se(direct);
  const auto c = mean_se(cross);
  rep.direct = d.mean;
  rep.direct_se = d.se;
  rep.product = c.mean;
  rep.product_se = c.se;
  const auto empties = static_cast<double>(std::count(direct.begin(), direct.end(), 0.0));
  rep.p_empty = empties / static_cast<double>(reps);
  rep.p_empty_se = std::sqrt(rep.p_empty * (1.0 - rep.p_empty) / static_cast<double>(reps));
  rep.agree = std::abs(rep.direct - rep.product) <= 3.0 * std::hypot(rep.direct_se, rep.product_se) + 1e-12;
  rep.acceptance = static_cast<double>(reps) / static_cast<double>(attempts);
  return rep;
}

}  // namespace rwre
