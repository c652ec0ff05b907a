#include "rwre/config.hpp"

#include <fstream>
#include <set>

#include "rwre/error.hpp"
#include "rwre/fleet.hpp"
#include "rwre/serialize.hpp"

namespace rwre {

namespace {

[[noreturn]] void bad(const std::string& what) { throw LabError(ErrorKind::InvalidConfig, what); }

template <class T>
T get_int(const nlohmann::json& j, const char* key, T lo, T hi) {
  const auto& v = j.at(key);
  if (!v.is_number_integer()) bad(std::string(key) + " must be an integer");
  T x{};
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(hi)) bad(std::string(key) + " out of range");
    x = static_cast<T>(u);
  } else {
    const auto s = v.get<std::int64_t>();
    if (s < static_cast<std::int64_t>(lo) || s > static_cast<std::int64_t>(hi)) bad(std::string(key) + " out of range");
    x = static_cast<T>(s);
  }
  if (x < lo) bad(std::string(key) + " out of range");
  return x;
}

double get_number(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number()) bad(key + " must be a number");
  return v.get<double>();
}

}  // namespace

RunConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) bad("config must be a JSON object");
  static const std::set<std::string> known{
      "schema", "preset", "dimension", "epsilon", "atoms", "master_seed", "horizon", "margin", "steps", "reps",
      "slab_count", "n_grid", "N_slabs", "n_max", "sites", "worlds", "z_0", "R", "lambda_target", "tilde_reps", "pairs",
      "output"};
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) bad("unknown field: " + k);
  }
  if (!j.contains("schema") || j.at("schema") != kConfigSchema) {
    bad(std::string("schema must be \"") + kConfigSchema + "\"");
  }

  RunConfig c;
  if (j.contains("preset")) {
    if (j.contains("atoms") || j.contains("dimension") || j.contains("epsilon")) {
      bad("preset excludes dimension, epsilon and atoms");
    }
    if (!j.at("preset").is_string()) bad("preset must be a string");
    try {
      c.law = fleet::by_name(j.at("preset").get<std::string>());
    } catch (const LabError& e) {
      bad(e.what());
    }
  } else {
    if (!j.contains("dimension") || !j.contains("epsilon") || !j.contains("atoms")) {
      bad("law needs dimension, epsilon and atoms (or a preset)");
    }
    const int d = get_int<int>(j, "dimension", 1, kMaxDim);
    const double eps = get_number(j.at("epsilon"), "epsilon");
    const auto& atoms = j.at("atoms");
    if (!atoms.is_array() || atoms.empty()) bad("atoms must be a nonempty array");
    std::vector<std::pair<double, std::vector<double>>> spec;
    for (const auto& a : atoms) {
      if (!a.is_object() || !a.contains("weight") || !a.contains("probs") || a.size() != 2) {
        bad("each atom needs exactly weight and probs");
      }
      if (!a.at("probs").is_array()) bad("probs must be an array");
      std::vector<double> p;
      for (const auto& x : a.at("probs")) p.push_back(get_number(x, "probs entry"));
      spec.emplace_back(get_number(a.at("weight"), "weight"), std::move(p));
    }
    c.law = std::make_shared<const SiteLaw>(make_law(d, eps, spec));
  }
  const int d = c.law->dim();

  if (!j.contains("master_seed")) bad("master_seed is required");
  const auto& seed = j.at("master_seed");
  if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) {
    bad("master_seed must be a nonnegative integer");
  }
  c.master_seed = seed.get<std::uint64_t>();
  if (j.contains("horizon")) c.horizon = get_int<std::int64_t>(j, "horizon", 1, 100000000);
  if (j.contains("margin")) c.margin = get_int<std::int64_t>(j, "margin", 0, 100000000);
  if (c.margin >= c.horizon) bad("margin must be smaller than horizon");
  if (j.contains("steps")) c.steps = get_int<std::int64_t>(j, "steps", 1, 1000000000);
  if (j.contains("reps")) c.reps = get_int<std::size_t>(j, "reps", 2, 1000000000);
  if (j.contains("slab_count")) c.slab_count = get_int<std::size_t>(j, "slab_count", 8, 100000000);
  if (j.contains("n_grid")) {
    const auto& g = j.at("n_grid");
    if (!g.is_array() || g.size() < 3) bad("n_grid needs at least 3 entries");
    c.n_grid.clear();
    for (const auto& x : g) {
      if (!x.is_number_integer() || x.get<std::int64_t>() < 1 || x.get<std::int64_t>() > 100000) {
        bad("n_grid entries must be integers in [1, 100000]");
      }
      const int n = x.get<int>();
      if (!c.n_grid.empty() && n <= c.n_grid.back()) bad("n_grid must be strictly increasing");
      c.n_grid.push_back(n);
    }
  }
  if (j.contains("N_slabs")) c.n_slabs = get_int<int>(j, "N_slabs", 1, 100000);
  if (j.contains("n_max")) c.n_max = get_int<int>(j, "n_max", 4, 100000);
  if (j.contains("sites")) c.sites = get_int<std::size_t>(j, "sites", 1, 100000000);
  if (j.contains("worlds")) c.worlds = get_int<std::size_t>(j, "worlds", 1, 1000000);
  if (j.contains("tilde_reps")) c.tilde_reps = get_int<std::size_t>(j, "tilde_reps", 2, 1000000000);
  if (j.contains("pairs")) c.pairs = get_int<std::size_t>(j, "pairs", 2, 1000000000);
  if (j.contains("z_0") && !j.at("z_0").is_null()) {
    const auto& z = j.at("z_0");
    if (!z.is_array() || static_cast<int>(z.size()) != d) bad("z_0 must have one integer per dimension");
    std::vector<std::int32_t> v;
    for (const auto& x : z) {
      if (!x.is_number_integer() || std::abs(x.get<std::int64_t>()) > 1000000) bad("z_0 entries must be integers");
      v.push_back(x.get<std::int32_t>());
    }
    c.z0 = v;
  }
  if (j.contains("R")) {
    const auto& r = j.at("R");
    if (r.is_string()) {
      if (r != "auto") bad("R must be a positive number or \"auto\"");
    } else {
      const double v = get_number(r, "R");
      if (!(v > 0.0)) bad("R must be positive");
      c.radius = v;
    }
  }
  if (j.contains("lambda_target")) {
    c.lambda_target = get_number(j.at("lambda_target"), "lambda_target");
    if (!(c.lambda_target > 0.0 && c.lambda_target < 1.0)) bad("lambda_target must be in (0, 1)");
  }
  if (j.contains("output")) {
    const auto& o = j.at("output");
    if (!o.is_object() || !o.contains("dir") || !o.at("dir").is_string() || o.size() != 1) {
      bad("output must be {\"dir\": string}");
    }
    c.out_dir = o.at("dir").get<std::string>();
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j = law_to_json(*c.law);
  j["schema"] = kConfigSchema;
  j["master_seed"] = c.master_seed;
  j["horizon"] = c.horizon;
  j["margin"] = c.margin;
  j["steps"] = c.steps;
  j["reps"] = c.reps;
  j["slab_count"] = c.slab_count;
  j["n_grid"] = c.n_grid;
  j["N_slabs"] = c.n_slabs;
  j["n_max"] = c.n_max;
  j["sites"] = c.sites;
  j["worlds"] = c.worlds;
  j["tilde_reps"] = c.tilde_reps;
  j["pairs"] = c.pairs;
  j["z_0"] = c.z0 ? nlohmann::json(*c.z0) : nlohmann::json(nullptr);
  j["R"] = c.radius ? nlohmann::json(*c.radius) : nlohmann::json("auto");
  j["lambda_target"] = c.lambda_target;
  j["output"] = {{"dir", c.out_dir}};
  return j;
}

}  // namespace rwre
