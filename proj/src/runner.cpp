#include "rwre/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rwre/error.hpp"
#include "rwre/serialize.hpp"

namespace rwre {

namespace {

using json = nlohmann::json;

Site site_of(const std::vector<std::int32_t>& v) {
  Site s;
  std::copy(v.begin(), v.end(), s.c.begin());
  return s;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void add(RunOutput& out, std::string name, bool pass, std::string detail = {}) {
  out.checks.push_back({std::move(name), pass, std::move(detail)});
}

SlabStream pool(const RunConfig& cfg, RngKey key, Parallelism par) {
  return sample_slab_stream(cfg.law, cfg.slab_count, key, stream_options(cfg, par));
}

double mean_width(const SlabStream& s) {
  double w = 0.0;
  for (const auto& sl : s.slabs) w += static_cast<double>(sl.width);
  return w / static_cast<double>(s.slabs.size());
}

double mean_duration(const SlabStream& s) {
  double u = 0.0;
  for (const auto& sl : s.slabs) u += static_cast<double>(sl.duration());
  return u / static_cast<double>(s.slabs.size());
}

json fit_json(const DecayFit& f) {
  return {{"slope", f.slope}, {"stderr_slope", f.stderr_slope}, {"intercept", f.intercept}};
}

std::vector<TableRow> series(const std::vector<double>& est, const std::vector<double>& se) {
  std::vector<TableRow> rows;
  for (std::size_t k = 0; k < est.size(); ++k) rows.push_back({static_cast<double>(k + 1), est[k], se[k]});
  return rows;
}

json iid_json(const SlabIidReport& r) {
  return {{"count", r.count},
          {"band", r.band},
          {"lag1_width", std::isnan(r.lag1_width) ? json(nullptr) : json(r.lag1_width)},
          {"lag2_width", std::isnan(r.lag2_width) ? json(nullptr) : json(r.lag2_width)},
          {"lag1_duration", std::isnan(r.lag1_duration) ? json(nullptr) : json(r.lag1_duration)},
          {"lag2_duration", std::isnan(r.lag2_duration) ? json(nullptr) : json(r.lag2_duration)},
          {"two_sample_p", r.two_sample_p},
          {"degenerate", r.degenerate},
          {"pass", r.pass}};
}

// Per-n overlap slope over the n_grid points inside [1, n_max].
std::optional<DecayFit> per_n_fit(const OverlapReport& o, const std::vector<int>& grid) {
  std::vector<double> xs, ys;
  for (int n : grid) {
    if (n >= 1 && n <= static_cast<int>(o.per_n.size()) && o.per_n[n - 1] > 0.0) {
      xs.push_back(n);
      ys.push_back(o.per_n[n - 1]);
    }
  }
  if (xs.size() < 3) return std::nullopt;
  return fit_loglog(xs, ys);
}

json overlap_json(const OverlapReport& o) {
  return {{"reps", o.reps},
          {"m_hat", o.m_hat},
          {"m_hat_se", o.m_hat_se},
          {"m_partial_last_quarter", last_quarter_fraction(o.m_partial)},
          {"per_n_partial_last_quarter", last_quarter_fraction(o.partial_sums)},
          {"extent_a", o.extent_a},
          {"mean_visited", o.mean_visited},
          {"mean_u", o.mean_u},
          {"mean_visited_first_half", o.mean_visited_first_half},
          {"mean_visited_second_half", o.mean_visited_second_half},
          {"tilde_reps", o.tilde_reps},
          {"m_tilde_hat", o.m_tilde_hat},
          {"m_tilde_se", o.m_tilde_se},
          {"m_tilde_partial_last_quarter", last_quarter_fraction(o.m_tilde_partial)},
          {"extent_b", o.extent_b},
          {"tilde_acceptance", o.tilde_acceptance}};
}

void overlap_tables(RunOutput& out, const OverlapReport& o) {
  out.files.emplace_back("per_n.csv", csv_table(series(o.per_n, o.per_n_se)));
  out.files.emplace_back("partial_sums.csv", csv_table(series(o.partial_sums, o.partial_se)));
  out.files.emplace_back("m_partial.csv", csv_table(series(o.m_partial, o.m_partial_se)));
  std::vector<TableRow> tilde;
  for (std::size_t k = 0; k < o.m_tilde_partial.size(); ++k) {
    tilde.push_back({static_cast<double>(k + 1), o.m_tilde_partial[k], std::nan("")});
  }
  out.files.emplace_back("m_tilde_partial.csv", csv_table(tilde));
}

json intersection_json(const IntersectionReport& r) {
  return {{"pairs", r.reps},         {"direct", r.direct},   {"direct_se", r.direct_se},
          {"product", r.product},    {"product_se", r.product_se}, {"p_empty", r.p_empty},
          {"p_empty_se", r.p_empty_se}, {"agree", r.agree},  {"acceptance", r.acceptance}};
}

Site require_z0(const RunConfig& cfg) {
  if (!cfg.z0) throw LabError(ErrorKind::InvalidConfig, "z_0 is required for this subcommand");
  const Site z = site_of(*cfg.z0);
  if (z.level() >= 0) throw LabError(ErrorKind::InvalidConfig, "z_0 must have a negative first coordinate");
  return z;
}

// ---------------------------------------------------------------------------

RunOutput run_velocity(const RunConfig& cfg, Parallelism par) {
  VelocityOptions opts{cfg.slab_count, stream_options(cfg, par)};
  const auto r = velocity_estimate(cfg.law, cfg.steps, cfg.reps, RngKey{cfg.master_seed}, opts);
  RunOutput out;
  out.report["results"] = {{"direct", r.direct},
                           {"direct_radius", r.direct_radius},
                           {"renewal", r.renewal},
                           {"renewal_radius", r.renewal_radius},
                           {"slabs", r.slabs},
                           {"annealed_drift", cfg.law->mean_drift()},
                           {"agree", r.agree}};
  add(out, "direct and renewal velocity agree within combined 3 sigma", r.agree);
  return out;
}

RunOutput run_regen(const RunConfig& cfg, Parallelism par) {
  const auto s = pool(cfg, RngKey{cfg.master_seed}.child(Stream::Slabs), par);
  std::size_t violations = 0;
  for (const auto& sl : s.slabs) violations += sl.valid() ? 0 : 1;
  const auto iid = slab_iid_test(std::span<const Slab>(s.slabs));
  const auto [v, radius] = renewal_velocity(s);
  RunOutput out;
  out.report["results"] = {{"slabs", s.slabs.size()},  {"runs", s.runs},
                           {"mean_L", mean_width(s)},   {"mean_u", mean_duration(s)},
                           {"renewal_velocity", v},     {"renewal_radius", radius},
                           {"invariant_violations", violations}, {"iid", iid_json(iid)}};
  std::ostringstream os;
  write_slab_stream(os, s);
  out.files.emplace_back("slabs.jsonl", os.str());
  add(out, "interior-level invariant on every slab", violations == 0,
      std::to_string(violations) + " of " + std::to_string(s.slabs.size()) + " violate");
  add(out, "slab i.i.d. checks", iid.pass);
  return out;
}

RunOutput run_glue(const RunConfig& cfg, Parallelism par) {
  const RngKey key{cfg.master_seed};
  const auto s = pool(cfg, key.child(Stream::Slabs), par);
  const auto n = static_cast<std::size_t>(cfg.n_slabs);
  std::vector<Slab> slabs(s.slabs.begin(), s.slabs.begin() + static_cast<std::ptrdiff_t>(2 * n));
  std::int64_t sum_u = 0;
  for (const auto& sl : slabs) sum_u += sl.duration();
  const auto world = GluedWorld::couple(std::move(slabs), n, cfg.law, key.child(Stream::Psi));
  json anchors = json::array();
  bool telescopes = true;
  std::int64_t below = 0;
  for (int k = world.first_index(); k <= world.end_index(); ++k) anchors.push_back(site_to_json(world.anchor(k), world.dim()));
  for (int k = 1; k <= cfg.n_slabs; ++k) {
    below += world.slab(-k).width;
    telescopes = telescopes && world.anchor(-k).level() == -below;
  }
  const auto walk_t = walk_on_glued(world, Site{}, cfg.steps, key.child(Stream::Walk), Which::OmegaTilde);
  const auto walk_o = walk_on_glued(world, Site{}, cfg.steps, key.child(Stream::Walk), Which::Omega);
  auto side = [](ExitSide e) { return e == ExitSide::Top ? "top" : e == ExitSide::Bottom ? "bottom" : "none"; };
  RunOutput out;
  out.report["results"] = {{"slabs", 2 * n},
                           {"anchors", anchors},
                           {"bottom_level", world.bottom_level()},
                           {"top_level", world.top_level()},
                           {"path_size", world.path_size()},
                           {"sum_u_plus_1", sum_u + 1},
                           {"walk_omega_tilde", {{"exit", side(walk_t.exit)}, {"exit_step", walk_t.exit_step},
                                                 {"min_level", walk_t.min_level}}},
                           {"walk_omega", {{"exit", side(walk_o.exit)}, {"exit_step", walk_o.exit_step},
                                           {"min_level", walk_o.min_level}}}};
  add(out, "level strips tile the covered range", true);
  add(out, "Y_0 = 0", world.anchor(0) == Site{});
  add(out, "level of Y_-n is minus the sum of widths", telescopes);
  add(out, "|T| <= sum u + 1", static_cast<std::int64_t>(world.path_size()) <= sum_u + 1);
  return out;
}

RunOutput run_couple(const RunConfig& cfg, Parallelism par) {
  const RngKey key{cfg.master_seed};
  const auto s = pool(cfg, key.child(Stream::Slabs), par);
  const auto st = coupling_study(s, cfg.worlds, cfg.n_slabs, cfg.sites, key.child(Stream::Sites), par);
  RunOutput out;
  out.report["results"] = {{"worlds", st.worlds},
                           {"sites_per_world", cfg.sites},
                           {"off_path_failures", st.off_path_failures},
                           {"marginal_pass", st.marginal_pass},
                           {"independence_pass", st.independence_pass},
                           {"adjacency_pass", st.adjacency_pass},
                           {"required", st.required},
                           {"ks_p", st.ks_p},
                           {"degenerate", st.degenerate},
                           {"marginal_p", st.marginal_p},
                           {"independence_p", st.independence_p}};
  const std::string need = " (need " + std::to_string(st.required) + ")";
  add(out, "off-path agreement of omega and omega~", st.off_path_failures == 0);
  add(out, "marginal chi-square p > 0.01", st.marginal_pass >= st.required,
      std::to_string(st.marginal_pass) + "/" + std::to_string(st.worlds) + need);
  add(out, "independence chi-square p > 0.01", st.independence_pass >= st.required,
      std::to_string(st.independence_pass) + "/" + std::to_string(st.worlds) + need);
  add(out, "marginal p-values uniform (KS)", st.degenerate || st.ks_p > 0.01,
      st.degenerate ? "single-atom law" : "p = " + fmt(st.ks_p));
  return out;
}

RunOutput run_transience(const RunConfig& cfg, Parallelism par) {
  const RngKey key{cfg.master_seed};
  const auto s = pool(cfg, key.child(Stream::Slabs), par);
  const auto r = transience_profile(s, cfg.n_slabs, cfg.n_slabs, cfg.reps, cfg.steps, key.child(Stream::Walk), par);
  RunOutput out;
  out.report["results"] = {{"walks", r.walks},     {"b_hat", r.b_hat},       {"b_se", r.b_se},
                           {"top_exit_fraction", r.top_exit_fraction},    {"censored", r.censored},
                           {"monotone", r.monotone}};
  out.files.emplace_back("b_n.csv", csv_table(series(r.b_hat, r.b_se)));
  add(out, "B_N nondecreasing within 3 sigma", r.monotone);
  add(out, "B_N at N = " + std::to_string(cfg.n_slabs) + " >= 0.95", r.b_hat.back() >= 0.95, fmt(r.b_hat.back()));
  return out;
}

RunOutput run_decay(const RunConfig& cfg, Parallelism par) {
  const RngKey key{cfg.master_seed};
  const auto s = pool(cfg, key.child(Stream::Slabs), par);
  const auto p = displacement_profile(s, cfg.n_grid, cfg.reps, key.child(Stream::Resample), par);
  const int d = cfg.law->dim();
  RunOutput out;
  json rows = json::array();
  std::vector<TableRow> sup, l2;
  for (const auto& r : p.rows) {
    rows.push_back({{"n", r.n}, {"sup", r.sup}, {"sup_se", r.sup_se}, {"l2", r.l2}, {"l2_se", r.l2_se},
                    {"max_count", r.max_count}});
    sup.push_back({static_cast<double>(r.n), r.sup, r.sup_se});
    l2.push_back({static_cast<double>(r.n), r.l2, r.l2_se});
  }
  out.report["results"] = {{"rows", rows}, {"sup_fit", fit_json(p.sup_fit)}, {"l2_fit", fit_json(p.l2_fit)}};
  out.files.emplace_back("sup.csv", csv_table(sup));
  out.files.emplace_back("l2.csv", csv_table(l2));
  const double sup_band = d <= 3 ? 0.3 : 0.5;
  const double l2_band = d <= 3 ? 0.2 : 0.25;
  add(out, "sup slope within -d/2 +- " + fmt(sup_band), std::abs(p.sup_fit.slope + d / 2.0) <= sup_band,
      fmt(p.sup_fit.slope));
  add(out, "l2 slope within -d/4 +- " + fmt(l2_band), std::abs(p.l2_fit.slope + d / 4.0) <= l2_band,
      fmt(p.l2_fit.slope));
  return out;
}

RunOutput run_overlap(const RunConfig& cfg, Parallelism par) {
  const RngKey key{cfg.master_seed};
  const auto a = pool(cfg, key.child(Stream::Slabs), par);
  const auto b = pool(cfg, key.child(Stream::Slabs).child(1), par);
  auto o = hitting_profile(a, b, cfg.n_max, cfg.reps, key.child(Stream::CopyA), par);
  const auto mirrored = std::make_shared<const SiteLaw>(mirror_law(*cfg.law));
  conditioned_overlap(o, mirrored, cfg.horizon, cfg.tilde_reps, key.child(Stream::CopyB), par);
  const int d = cfg.law->dim();
  const auto fit = per_n_fit(o, cfg.n_grid);
  RunOutput out;
  out.report["results"] = overlap_json(o);
  out.report["results"]["per_n_fit"] = fit ? fit_json(*fit) : json(nullptr);
  overlap_tables(out, o);
  const bool nondecreasing = std::is_sorted(o.partial_sums.begin(), o.partial_sums.end());
  add(out, "partial sums nondecreasing", nondecreasing);
  add(out, "per_n slope <= -d/2 + 0.5", fit && fit->slope <= -d / 2.0 + 0.5,
      fit ? fmt(fit->slope) : "per_n vanishes on the grid");
  add(out, "M partial sums flatten (last quarter < 5%)",
      last_quarter_fraction(o.m_partial) < kFlatteningFraction, fmt(last_quarter_fraction(o.m_partial)));
  add(out, "M~ partial sums flatten (last quarter < 5%)",
      last_quarter_fraction(o.m_tilde_partial) < kFlatteningFraction, fmt(last_quarter_fraction(o.m_tilde_partial)));
  return out;
}

RunOutput run_intersect(const RunConfig& cfg, Parallelism par) {
  const Site z0 = require_z0(cfg);
  const RngKey key{cfg.master_seed};
  const auto a = pool(cfg, key.child(Stream::Slabs), par);
  const auto mirrored = std::make_shared<const SiteLaw>(mirror_law(*cfg.law));
  IntersectionOptions io;
  io.n_slabs = covering_slabs(a, z0, cfg.horizon);
  io.horizon = cfg.horizon;
  io.par = par;
  const auto r = intersection_expectation(a, mirrored, z0, cfg.pairs, key.child(Stream::Sites), io);
  RunOutput out;
  out.report["results"] = intersection_json(r);
  out.report["results"]["n_slabs"] = io.n_slabs;
  add(out, "direct and product-of-marginals estimates agree", r.agree,
      fmt(r.direct) + " vs " + fmt(r.product));
  return out;
}

RunOutput run_certify(const RunConfig& cfg, Parallelism par) {
  const auto c = certify_pipeline(cfg, par);
  RunOutput out;
  json cert = nullptr;
  if (c.certificate) {
    const auto& k = *c.certificate;
    cert = {{"radius", k.radius},       {"norm_z0", k.norm_z0}, {"lambda_cs", k.lambda_cs},
            {"value", k.value},         {"value_cs", k.value_cs}, {"converged", k.converged},
            {"separated", k.separated}, {"pass", k.pass},       {"reason", k.reason}};
  }
  out.report["results"] = {{"overlap", overlap_json(c.overlap)},
                           {"certificate", cert},
                           {"refusal", c.refusal},
                           {"intersection", intersection_json(c.intersection)}};
  overlap_tables(out, c.overlap);
  const bool converged = c.certificate && c.certificate->converged;
  add(out, "partial sums converge (no divergence flag)", converged,
      c.certificate ? c.certificate->reason : c.refusal);
  add(out, "certificate lambda M + lambda M~ + lambda^2 < 1", c.certificate && c.certificate->pass,
      c.certificate && converged ? fmt(c.certificate->value) : (c.certificate ? c.certificate->reason : c.refusal));
  add(out, "P(empty intersection) > 0.2", c.intersection.p_empty > 0.2, fmt(c.intersection.p_empty));
  return out;
}

}  // namespace

SlabStreamOptions stream_options(const RunConfig& cfg, Parallelism par) {
  SlabStreamOptions o;
  o.horizon = cfg.horizon;
  o.margin = cfg.margin;
  o.par = par;
  return o;
}

int covering_slabs(const SlabStream& pool, const Site& z0, std::int64_t horizon) {
  const auto [v, radius] = renewal_velocity(pool);
  const double depth = static_cast<double>(-z0.level()) + 1.25 * v[0] * static_cast<double>(horizon) + 10.0;
  return static_cast<int>(std::ceil(depth / mean_width(pool))) + 4;
}

CertifyOutcome certify_pipeline(const RunConfig& cfg, Parallelism par) {
  const Site z0 = require_z0(cfg);
  const RngKey key{cfg.master_seed};
  const auto a = pool(cfg, key.child(Stream::Slabs), par);
  const auto b = pool(cfg, key.child(Stream::Slabs).child(1), par);
  CertifyOutcome c;
  c.overlap = hitting_profile(a, b, cfg.n_max, cfg.reps, key.child(Stream::CopyA), par);
  const auto mirrored = std::make_shared<const SiteLaw>(mirror_law(*cfg.law));
  conditioned_overlap(c.overlap, mirrored, cfg.horizon, cfg.tilde_reps, key.child(Stream::CopyB), par);

  const bool converged = last_quarter_fraction(c.overlap.m_partial) < kFlatteningFraction &&
                         last_quarter_fraction(c.overlap.m_tilde_partial) < kFlatteningFraction;
  c.radius = cfg.radius ? cfg.radius : tune_radius(c.overlap, z0, cfg.lambda_target);
  if (c.radius || !converged) {
    c.certificate = certify_nonintersection(c.overlap, z0, c.radius.value_or(z0.norm() / 2.0));
  } else {
    c.refusal = "no radius with ||z0|| > 2R brings the tail mass below " + fmt(cfg.lambda_target);
  }

  IntersectionOptions io;
  io.n_slabs = covering_slabs(a, z0, cfg.horizon);
  io.horizon = cfg.horizon;
  io.par = par;
  c.intersection = intersection_expectation(a, mirrored, z0, cfg.pairs, key.child(Stream::Sites), io);
  return c;
}

const std::vector<std::string>& pipeline_names() {
  static const std::vector<std::string> names{"velocity", "regen",  "glue",      "couple",   "transience",
                                              "decay",    "overlap", "intersect", "certify"};
  return names;
}

RunOutput run_pipeline(const std::string& name, const RunConfig& cfg, Parallelism par) {
  if ((name == "intersect" || name == "certify")) require_z0(cfg);
  if (name == "glue" && cfg.slab_count < static_cast<std::size_t>(2 * cfg.n_slabs)) {
    throw LabError(ErrorKind::InvalidConfig, "glue needs slab_count >= 2 N_slabs");
  }
  RunOutput out;
  if (name == "velocity") out = run_velocity(cfg, par);
  else if (name == "regen") out = run_regen(cfg, par);
  else if (name == "glue") out = run_glue(cfg, par);
  else if (name == "couple") out = run_couple(cfg, par);
  else if (name == "transience") out = run_transience(cfg, par);
  else if (name == "decay") out = run_decay(cfg, par);
  else if (name == "overlap") out = run_overlap(cfg, par);
  else if (name == "intersect") out = run_intersect(cfg, par);
  else if (name == "certify") out = run_certify(cfg, par);
  else throw LabError(ErrorKind::InvalidArgument, "unknown subcommand: " + name);

  json config = config_to_json(cfg);
  config.erase("output");
  json checks = json::array();
  for (const auto& c : out.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  json report = {{"subcommand", name}, {"seed", cfg.master_seed}, {"config", config}};
  report["results"] = std::move(out.report["results"]);
  report["checks"] = std::move(checks);
  out.report = std::move(report);
  return out;
}

std::string csv_table(const std::vector<TableRow>& rows) {
  std::string s = "n,estimate,stderr\n";
  for (const auto& r : rows) s += fmt(r.n) + "," + fmt(r.estimate) + "," + fmt(r.stderr_) + "\n";
  return s;
}

std::string check_line(const Check& c) {
  return std::string(c.pass ? "PASS " : "FAIL ") + c.name + (c.detail.empty() ? "" : " [" + c.detail + "]");
}

namespace {

void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else if (j.is_array() && j.size() > 12) {
    out.emplace_back(prefix, "[" + std::to_string(j.size()) + " values]");
  } else {
    out.emplace_back(prefix, j.dump());
  }
}

}  // namespace

void write_run(const RunOutput& out, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream f(dir / name, std::ios::binary);
    f << text;
    if (!f) throw LabError(ErrorKind::InvalidArgument, "cannot write " + (dir / name).string());
  };
  put("report.json", out.report.dump(2) + "\n");
  std::vector<std::pair<std::string, std::string>> kv;
  flatten(out.report.at("results"), "", kv);
  std::size_t width = 0;
  for (const auto& [k, v] : kv) width = std::max(width, k.size());
  std::string txt;
  for (const auto& [k, v] : kv) txt += k + std::string(width + 2 - k.size(), ' ') + v + "\n";
  for (const auto& c : out.checks) txt += check_line(c) + "\n";
  put("report.txt", txt);
  for (const auto& [name, text] : out.files) put(name, text);
}

}  // namespace rwre
