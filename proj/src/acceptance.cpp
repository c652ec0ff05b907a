#include "rwre/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include <boost/math/distributions/binomial.hpp>

#include "rwre/error.hpp"
#include "rwre/fleet.hpp"
#include "rwre/runner.hpp"
#include "rwre/stats.hpp"

namespace rwre {

namespace {

std::string num(double x, int digits = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (detail.tellp() > 0 ? "; " : "") << (ok ? "" : "!") << what;
  }
};

SlabStream stream_of(const std::shared_ptr<const SiteLaw>& law, std::size_t count, RngKey key, Parallelism par) {
  SlabStreamOptions o;
  o.par = par;
  return sample_slab_stream(law, count, key, o);
}

// P(|X - Np| > 3 sigma) for X ~ Binomial(N, p), sigma as used by the band below.
double band_exceedance(double p, double n, double band) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  const boost::math::binomial_distribution<double> dist(n, p);
  const double lo = std::ceil(n * p - band) - 1.0;
  const double hi = std::floor(n * p + band);
  double q = boost::math::cdf(boost::math::complement(dist, hi));
  if (lo >= 0.0) q += boost::math::cdf(dist, lo);
  return q;
}

// ---------------------------------------------------------------------------

Outcome oracle_equivalence(RngKey key, Parallelism par) {
  Outcome o;
  constexpr std::size_t kReplicas = 100000;
  const double n = static_cast<double>(kReplicas);
  const auto laws = fleet::all();
  for (std::size_t li = 0; li < laws.size(); ++li) {
    const auto& entry = laws[li];
    const RngKey lk = key.child(li);
    const Environment env(entry.law, lk.child(Stream::Environment).value);
    const auto exact = enumerate_exact(env, Site{}, entry.horizon);
    double total = 0.0;
    for (const auto& [z, p] : exact.endpoints) total += p;

    const auto paths = parallel_map(kReplicas, par, [&](std::size_t r) {
      return simulate_quenched(env, Site{}, entry.horizon, lk.child(Stream::Walk).child(r));
    });
    std::map<Site, std::uint64_t> end_count;
    std::map<Site, std::uint64_t> visit_count;
    std::unordered_set<Site, SiteHash> seen;
    for (const auto& t : paths) {
      ++end_count[t.end()];
      seen.clear();
      for (const auto& z : t.positions()) {
        if (seen.insert(z).second) ++visit_count[z];
      }
    }

    std::size_t cells = 0;
    std::size_t violations = 0;
    bool impossible = false;
    double expected_rate = 0.0;
    auto compare = [&](const std::map<Site, double>& truth, const std::map<Site, std::uint64_t>& counts) {
      std::set<Site> sites;
      for (const auto& [z, p] : truth) sites.insert(z);
      for (const auto& [z, c] : counts) sites.insert(z);
      for (const auto& z : sites) {
        const auto it = truth.find(z);
        const double p = it == truth.end() ? 0.0 : it->second;
        const auto ct = counts.find(z);
        const double c = ct == counts.end() ? 0.0 : static_cast<double>(ct->second);
        if (p == 0.0) {
          impossible = impossible || c > 0.0;
          continue;
        }
        const double band = 3.0 * std::sqrt(n * std::max(p, 1.0 / n) * (1.0 - p));
        ++cells;
        expected_rate += band_exceedance(p, n, band);
        if (std::abs(c - n * p) > band) ++violations;
      }
    };
    compare(exact.endpoints, end_count);
    compare(exact.visits, visit_count);
    const double rate = cells > 0 ? std::max(0.0027, expected_rate / static_cast<double>(cells)) : 0.0027;
    const auto allowed = binomial_upper_quantile(cells, rate, 0.001);
    o.require(std::abs(total - 1.0) <= 1e-10 && !impossible && violations <= allowed,
              entry.name + " h=" + std::to_string(entry.horizon) + ": " + std::to_string(violations) + "/" +
                  std::to_string(cells) + " outside 3 sigma (allowed " + std::to_string(allowed) + ")" +
                  (impossible ? ", zero-probability site visited" : ""));
  }
  return o;
}

Outcome velocity_identity(RngKey key, Parallelism par) {
  Outcome o;
  VelocityOptions opts;
  opts.slab_count = 10000;
  opts.stream.par = par;
  const auto r = velocity_estimate(fleet::d5_test(), 10000, 1000, key.child(1), opts);
  o.require(r.agree, "d5_test direct " + num(r.direct[0]) + " +- " + num(r.direct_radius[0]) + " vs renewal " +
                         num(r.renewal[0]) + " +- " + num(r.renewal_radius[0]));
  o.require(std::abs(r.direct[0] - 0.2) <= 0.01 && std::abs(r.renewal[0] - 0.2) <= 0.01,
            "both within 0.2 +- 0.01");
  const auto q = velocity_estimate(fleet::d2_random(), 10000, 1000, key.child(2), opts);
  o.require(q.agree, "d2_random direct " + num(q.direct[0]) + " vs renewal " + num(q.renewal[0]));
  return o;
}

// Regeneration times by the definition, quadratic in the length.
std::vector<std::int64_t> brute_regenerations(const std::vector<std::int64_t>& lv, std::int64_t margin) {
  std::vector<std::int64_t> out;
  const auto n = static_cast<std::int64_t>(lv.size()) - 1;
  for (std::int64_t t = 0; t <= n - margin; ++t) {
    bool ok = true;
    for (std::int64_t s = 0; s < t && ok; ++s) ok = lv[s] < lv[t];
    for (std::int64_t s = t + 1; s <= n && ok; ++s) ok = lv[s] > lv[t];
    if (ok) out.push_back(t);
  }
  return out;
}

Outcome regeneration_strictness(RngKey key, Parallelism par) {
  Outcome o;
  const std::vector<std::pair<std::string, std::shared_ptr<const SiteLaw>>> laws{{"d5_random", fleet::d5_random()},
                                                                                 {"d2_random", fleet::d2_random()}};
  for (std::size_t i = 0; i < laws.size(); ++i) {
    const auto& [name, law] = laws[i];
    const auto s = stream_of(law, 10000, key.child(i), par);
    std::size_t bad = 0;
    for (const auto& sl : s.slabs) bad += sl.valid() ? 0 : 1;
    o.require(bad == 0 && s.slabs.size() == 10000,
              name + ": " + std::to_string(bad) + " of " + std::to_string(s.slabs.size()) + " slabs violate");
  }
  std::size_t mismatches = 0;
  for (std::uint64_t r = 0; r < 20; ++r) {
    const auto t = simulate_annealed(fleet::d2_random(), Site{}, 3000, key.child(Stream::Walk).child(r));
    const auto lv = t.levels();
    mismatches += find_regenerations(lv, 300).times == brute_regenerations(lv, 300) ? 0 : 1;
  }
  o.require(mismatches == 0, "single-pass times equal the definition on 20 runs");
  return o;
}

Outcome slab_iid(RngKey key, Parallelism par) {
  Outcome o;
  const auto s = stream_of(fleet::d5_test(), 10000, key, par);
  const auto r = slab_iid_test(std::span<const Slab>(s.slabs));
  o.require(std::abs(r.lag1_width) < r.band && std::abs(r.lag1_duration) < r.band,
            "lag-1 L " + num(r.lag1_width, 3) + ", u " + num(r.lag1_duration, 3) + " within " + num(r.band, 3));
  o.detail << "; lag-2 L " << num(r.lag2_width, 3) << ", u " << num(r.lag2_duration, 3) << ", halves p "
           << num(r.two_sample_p, 3);
  std::vector<std::int64_t> l, u;
  for (std::size_t i = 0; i < 10000; ++i) {
    l.push_back(s.slabs[i / 100].width);
    u.push_back(s.slabs[i / 100].duration());
  }
  const auto planted = slab_iid_test(l, u);
  o.require(!planted.pass && std::abs(planted.lag1_duration) >= planted.band,
            "planted copies rejected (lag-1 u " + num(planted.lag1_duration, 3) + ")");
  return o;
}

Outcome coupling(RngKey key, Parallelism par) {
  Outcome o;
  const auto s = stream_of(fleet::d5_random(), 10000, key.child(Stream::Slabs), par);
  const auto st = coupling_study(s, 100, 20, 10000, key.child(Stream::Sites), par);
  o.require(st.off_path_failures == 0, "off-path agreement in every world");
  o.require(st.marginal_pass >= st.required, "marginal p > 0.01 in " + std::to_string(st.marginal_pass) + "/100");
  o.require(st.independence_pass >= st.required,
            "independence p > 0.01 in " + std::to_string(st.independence_pass) + "/100");
  o.require(st.ks_p > 0.01, "KS uniformity p " + num(st.ks_p, 3));
  o.detail << "; adjacency p > 0.01 in " << st.adjacency_pass << "/100";
  return o;
}

Outcome transience(RngKey key, Parallelism par) {
  Outcome o;
  const auto s = stream_of(fleet::d5_test(), 10000, key.child(Stream::Slabs), par);
  const auto r = transience_profile(s, 10, 10, 1000, 100000, key.child(Stream::Walk), par);
  o.require(r.monotone, "B_N nondecreasing within 3 sigma");
  o.require(r.b_hat[9] >= 0.95, "B_10 = " + num(r.b_hat[9]) + " (B_1 = " + num(r.b_hat[0]) + ")");
  o.detail << "; censored " << r.censored;
  return o;
}

Outcome heat_kernel(RngKey key, Parallelism par) {
  Outcome o;
  const auto s3 = stream_of(fleet::d3_test(), 10000, key.child(3), par);
  const std::vector<int> grid3{4, 8, 16, 32};
  const auto p3 = displacement_profile(s3, grid3, 1000000, key.child(3).child(Stream::Resample), par);
  o.require(std::abs(p3.sup_fit.slope + 1.5) <= 0.3, "d=3 sup slope " + num(p3.sup_fit.slope));
  const auto& r3 = p3.rows;
  o.detail << "; d=3 slope between n=16 and 32 " << num(std::log(r3[3].sup / r3[2].sup) / std::log(2.0))
           << "; d=3 l2 slope " << num(p3.l2_fit.slope);
  const auto s5 = stream_of(fleet::d5_test(), 10000, key.child(5), par);
  const std::vector<int> grid5{2, 3, 4, 5, 6};
  const auto p5 = displacement_profile(s5, grid5, 1000000, key.child(5).child(Stream::Resample), par);
  o.require(std::abs(p5.sup_fit.slope + 2.5) <= 0.5, "d=5 sup slope " + num(p5.sup_fit.slope));
  return o;
}

Outcome overlap_decay(RngKey key, Parallelism par) {
  Outcome o;
  const auto a = stream_of(fleet::d5_test(), 10000, key.child(1), par);
  const auto b = stream_of(fleet::d5_test(), 10000, key.child(2), par);
  const auto r = hitting_profile(a, b, 32, 100000, key.child(3), par);
  std::vector<double> xs, ys;
  bool positive = true;
  for (int n : {4, 8, 16, 32}) {
    xs.push_back(n);
    ys.push_back(r.per_n[n - 1]);
    positive = positive && r.per_n[n - 1] > 0.0;
  }
  if (positive) {
    const auto fit = fit_loglog(xs, ys);
    o.require(fit.slope <= -2.0, "d=5 per_n slope " + num(fit.slope) + " <= -2");
  } else {
    o.require(false, "d=5 per_n vanishes on the grid");
  }
  const double lq = last_quarter_fraction(r.partial_sums);
  const double lq_m = last_quarter_fraction(r.m_partial);
  o.require(lq < kFlatteningFraction && lq_m < kFlatteningFraction,
            "d=5 last-quarter share " + num(lq, 3) + " (per_n), " + num(lq_m, 3) + " (M)");
  o.detail << "; d=5 mean visited " << num(r.mean_visited) << " vs u " << num(r.mean_u);

  const auto a2 = stream_of(fleet::d2_analog(), 10000, key.child(4), par);
  const auto b2 = stream_of(fleet::d2_analog(), 10000, key.child(5), par);
  const auto r2 = hitting_profile(a2, b2, 32, 10000, key.child(6), par);
  const double lq2 = last_quarter_fraction(r2.m_partial);
  o.require(lq2 >= kFlatteningFraction, "d=2 M partial sums keep growing, last quarter " + num(lq2, 3));
  return o;
}

RunConfig certify_config(std::shared_ptr<const SiteLaw> law, std::uint64_t seed) {
  RunConfig c;
  c.law = std::move(law);
  c.master_seed = seed;
  c.slab_count = 10000;
  c.n_max = 48;
  c.reps = 10000;
  c.tilde_reps = 10000;
  c.pairs = 10000;
  std::vector<std::int32_t> z(static_cast<std::size_t>(c.law->dim()), 0);
  z[0] = -40;
  c.z0 = z;
  c.lambda_target = 0.1;
  return c;
}

Outcome certificate(RngKey key, Parallelism par) {
  Outcome o;
  const auto c5 = certify_config(fleet::d5_test(), key.child(5).value);
  const auto r5 = certify_pipeline(c5, par);
  if (r5.certificate) {
    const auto& k = *r5.certificate;
    o.require(k.pass, "d=5 R " + num(k.radius) + ", lambda " + num(k.lambda_cs, 3) + ", M " + num(r5.overlap.m_hat) +
                          ", M~ " + num(r5.overlap.m_tilde_hat) + ", value " + num(k.value, 3) +
                          (k.reason.empty() ? "" : " (" + k.reason + ")"));
  } else {
    o.require(false, "d=5 " + r5.refusal);
  }
  o.require(r5.intersection.p_empty > 0.2, "d=5 P(empty) " + num(r5.intersection.p_empty, 3));

  const auto c2 = certify_config(fleet::d2_analog(), key.child(2).value);
  const auto r2 = certify_pipeline(c2, par);
  const bool refused = !r2.certificate || !r2.certificate->converged;
  o.require(refused, std::string("d=2 certification refused: ") +
                         (r2.certificate ? r2.certificate->reason : r2.refusal));
  o.require(r2.intersection.p_empty < 0.05, "d=2 P(empty) " + num(r2.intersection.p_empty, 3));

  const auto pool = sample_slab_stream(c2.law, c2.slab_count, RngKey{c2.master_seed}.child(Stream::Slabs),
                                       stream_options(c2, par));
  const auto mirrored = std::make_shared<const SiteLaw>(mirror_law(*fleet::d2_analog()));
  Site z0;
  z0.c[0] = -40;
  IntersectionOptions io;
  io.par = par;
  io.horizon = c2.horizon / 4;
  io.n_slabs = covering_slabs(pool, z0, io.horizon);
  const auto short_run = intersection_expectation(pool, mirrored, z0, 10000, key.child(7), io);
  o.require(r2.intersection.direct > short_run.direct,
            "d=2 E grows with horizon: " + num(short_run.direct) + " (H/4) < " + num(r2.intersection.direct) + " (H)");
  o.detail << "; d=2 P(empty) at H/4 " << num(short_run.p_empty, 3);
  return o;
}

Outcome determinism(RngKey key) {
  Outcome o;
  const std::map<std::string, std::string> configs{
      {"velocity", R"({"steps": 2000, "reps": 200, "slab_count": 2000})"},
      {"regen", R"({"slab_count": 2000})"},
      {"glue", R"({"slab_count": 200, "N_slabs": 6})"},
      {"couple", R"({"slab_count": 1000, "worlds": 8, "sites": 100, "N_slabs": 8})"},
      {"transience", R"({"slab_count": 1000, "reps": 100, "steps": 20000})"},
      {"decay", R"({"slab_count": 2000, "reps": 20000, "n_grid": [1, 2, 4]})"},
      {"overlap", R"({"slab_count": 1000, "reps": 500, "tilde_reps": 200, "horizon": 300, "margin": 100, "n_max": 8})"},
      {"intersect", R"({"slab_count": 1000, "pairs": 300, "horizon": 300, "margin": 100, "z_0": [-12, 3]})"},
      {"certify", R"({"slab_count": 1000, "reps": 500, "tilde_reps": 300, "pairs": 300, "horizon": 300,
                      "margin": 100, "n_max": 8, "z_0": [-40, 0], "R": 3})"}};
  std::size_t same = 0;
  for (const auto& name : pipeline_names()) {
    auto j = nlohmann::json::parse(configs.at(name));
    j["schema"] = kConfigSchema;
    j["preset"] = "d2_random";
    j["master_seed"] = key.value;
    const auto cfg = parse_config(j);
    const auto a = run_pipeline(name, cfg, Parallelism{1});
    const auto b = run_pipeline(name, cfg, Parallelism{1});
    const auto c = run_pipeline(name, cfg, Parallelism{3});
    auto bytes = [](const RunOutput& r) {
      std::string s = r.report.dump(2);
      for (const auto& [f, text] : r.files) s += "\n--" + f + "\n" + text;
      return s;
    };
    const auto ba = bytes(a);
    if (ba == bytes(b) && ba == bytes(c)) ++same;
    else o.require(false, name + " differs");
  }
  o.require(same == pipeline_names().size(),
            std::to_string(same) + "/" + std::to_string(pipeline_names().size()) +
                " subcommands byte-identical across reruns and worker counts 1, 3");
  return o;
}

}  // namespace

std::string criterion_line(const CriterionResult& r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1fs", r.seconds);
  return std::string(r.pass ? "PASS" : "FAIL") + " [" + std::to_string(r.id) + "] " + r.name + " (" + buf +
         "): " + r.detail;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            const std::function<void(const CriterionResult&)>& on_result) {
  struct Entry {
    const char* name;
    std::function<Outcome(RngKey, Parallelism)> run;
  };
  const std::vector<Entry> table{
      {"oracle equivalence", oracle_equivalence},
      {"velocity identity", velocity_identity},
      {"regeneration strictness", regeneration_strictness},
      {"slab i.i.d.", slab_iid},
      {"coupling", coupling},
      {"transience on omega~", transience},
      {"heat-kernel decay", heat_kernel},
      {"l2 overlap decay", overlap_decay},
      {"non-intersection certificate", certificate},
      {"determinism", [](RngKey k, Parallelism) { return determinism(k); }},
  };
  const RngKey root{opts.seed};
  std::vector<CriterionResult> out;
  for (int id = 1; id <= kCriteria; ++id) {
    if (!opts.only.empty() && std::find(opts.only.begin(), opts.only.end(), id) == opts.only.end()) continue;
    CriterionResult r;
    r.id = id;
    r.name = table[id - 1].name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      auto o = table[id - 1].run(root.child(static_cast<std::uint64_t>(id)), opts.par);
      r.pass = o.pass;
      r.detail = o.detail.str();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (on_result) on_result(r);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace rwre
