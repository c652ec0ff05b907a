#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "rwre/config.hpp"
#include "rwre/fleet.hpp"
#include "rwre/runner.hpp"

using namespace rwre;
using testing::error_kind;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small_d2() {
  return {{"schema", kConfigSchema}, {"preset", "d2_random"}, {"master_seed", 11}, {"horizon", 1500},
          {"margin", 150},          {"steps", 500},          {"reps", 50},        {"slab_count", 200}};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("rwre_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_json(const fs::path& dir, const json& j) {
  const auto p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + RWRE_LAB_BINARY + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> dir_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = slurp(e.path());
  return out;
}

}  // namespace

TEST_CASE("config parsing rejects bad documents") {
  auto kind = [](json j) { return error_kind([&] { parse_config(j); }); };
  CHECK_FALSE(kind(small_d2()));

  auto j = small_d2();
  j["colour"] = "blue";
  CHECK(kind(j) == ErrorKind::InvalidConfig);
  j = small_d2();
  j["schema"] = "rwre-lab/0";
  CHECK(kind(j) == ErrorKind::InvalidConfig);
  j = small_d2();
  j.erase("master_seed");
  CHECK(kind(j) == ErrorKind::InvalidConfig);
  j = small_d2();
  j["margin"] = 1500;
  CHECK(kind(j) == ErrorKind::InvalidConfig);
  j = small_d2();
  j["n_grid"] = {4, 4, 8};
  CHECK(kind(j) == ErrorKind::InvalidConfig);
  j = small_d2();
  j["lambda_target"] = 1.0;
  CHECK(kind(j) == ErrorKind::InvalidConfig);
  j = small_d2();
  j["preset"] = "nope";
  CHECK(kind(j) == ErrorKind::InvalidConfig);
  j = small_d2();
  j["z_0"] = {-40};
  CHECK(kind(j) == ErrorKind::InvalidConfig);

  json law = {{"schema", kConfigSchema}, {"master_seed", 1}, {"dimension", 1}, {"epsilon", 0.1},
              {"atoms", {{{"weight", 1.0}, {"probs", {0.6, 0.5}}}}}};
  CHECK(kind(law) == ErrorKind::NotNormalized);
  law["atoms"][0]["probs"] = {0.95, 0.05};
  CHECK(kind(law) == ErrorKind::EllipticityViolated);
  law["atoms"][0]["probs"] = {0.6, 0.4};
  CHECK_FALSE(kind(law));
}

TEST_CASE("resolved config round-trips") {
  auto j = small_d2();
  j["z_0"] = {-40, 3};
  j["R"] = 4;
  const auto cfg = parse_config(j);
  const auto resolved = config_to_json(cfg);
  CHECK(resolved.at("schema") == kConfigSchema);
  CHECK(config_to_json(parse_config(resolved)) == resolved);
  CHECK(*parse_config(resolved).law == *fleet::d2_random());
}

TEST_CASE("deterministic velocity pipeline") {
  const auto cfg = parse_config({{"schema", kConfigSchema}, {"preset", "deterministic"}, {"master_seed", 3},
                                 {"horizon", 300}, {"margin", 30}, {"steps", 100}, {"reps", 10}, {"slab_count", 50}});
  const auto out = run_pipeline("velocity", cfg);
  CHECK(out.report.at("results").at("direct") == json::array({1.0}));
  CHECK(out.report.at("results").at("renewal") == json::array({1.0}));
  CHECK(out.report.at("seed") == 3);
  CHECK(out.report.at("subcommand") == "velocity");
  for (const auto& c : out.checks) CHECK(c.pass);
}

TEST_CASE("csv tables use the n,estimate,stderr header") {
  const auto csv = csv_table({{1, 0.5, 0.1}, {2, 0.25, 0.05}});
  CHECK(csv.rfind("n,estimate,stderr\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("d=2 certify reports a refusal, not an error") {
  auto j = small_d2();
  j["preset"] = "d2_analog";
  j["horizon"] = 2000;
  j["margin"] = 200;
  j["slab_count"] = 1000;
  j["reps"] = 400;
  j["tilde_reps"] = 300;
  j["pairs"] = 100;
  j["z_0"] = {-40, 0};
  const auto out = run_pipeline("certify", parse_config(j));
  const auto& cert = out.report.at("results").at("certificate");
  const bool refused = cert.is_null() || cert.at("converged") == false || cert.at("pass") == false;
  CHECK(refused);
  bool certificate_check_failed = false;
  for (const auto& c : out.checks) {
    if (c.name.rfind("certificate", 0) == 0) certificate_check_failed = !c.pass;
  }
  CHECK(certificate_check_failed);
}

TEST_CASE("pipelines validate inputs before sampling") {
  const auto cfg = parse_config(small_d2());
  CHECK(error_kind([&] { run_pipeline("certify", cfg); }) == ErrorKind::InvalidConfig);
  CHECK(error_kind([&] { run_pipeline("intersect", cfg); }) == ErrorKind::InvalidConfig);
}

TEST_CASE("command line exit codes and outputs") {
  const auto dir = scratch("codes");

  auto bad = small_d2();
  bad["margin"] = 5000;
  const auto bad_cfg = write_json(dir / "", bad);
  CHECK(run("velocity --config " + bad_cfg.string() + " --out " + (dir / "bad").string()) == 1);
  CHECK_FALSE(fs::exists(dir / "bad" / "report.json"));
  CHECK(run("velocity --config " + (dir / "missing.json").string()) == 1);
  CHECK(run("frobnicate") == 1);

  const auto good = write_json(dir, small_d2());
  CHECK(run("velocity --config " + good.string() + " --out " + (dir / "a").string()) == 0);
  const auto report = json::parse(slurp(dir / "a" / "report.json"));
  CHECK(report.at("seed") == 11);
  CHECK(report.at("config").at("schema") == kConfigSchema);
  CHECK(run("velocity --config " + good.string() + " --seed 12 --out " + (dir / "s").string()) == 0);
  CHECK(json::parse(slurp(dir / "s" / "report.json")).at("seed") == 12);

  CHECK(run("velocity --config " + good.string() + " --out " + (dir / "e").string(), "RWRE_LAB_WORKERS=zero") == 1);

  json sym = {{"schema", kConfigSchema}, {"master_seed", 1}, {"dimension", 2}, {"epsilon", 0.25},
              {"atoms", {{{"weight", 1.0}, {"probs", {0.25, 0.25, 0.25, 0.25}}}}}, {"reps", 10}, {"steps", 100}};
  fs::create_directories(dir / "sym");
  const auto sym_cfg = write_json(dir / "sym", sym);
  CHECK(run("velocity --config " + sym_cfg.string() + " --out " + (dir / "sym_out").string()) == 2);
}

TEST_CASE("outputs are byte-identical across runs and worker counts") {
  const auto dir = scratch("bytes");
  auto j = small_d2();
  j["reps"] = 4000;
  j["n_grid"] = {1, 2, 3};
  const auto cfg = write_json(dir, j);
  for (const std::string sub : {"velocity", "regen", "decay"}) {
    const auto a = dir / (sub + "_a");
    const auto b = dir / (sub + "_b");
    const auto c = dir / (sub + "_c");
    REQUIRE(run(sub + " --config " + cfg.string() + " --out " + a.string() + " --workers 1") == 0);
    REQUIRE(run(sub + " --config " + cfg.string() + " --out " + b.string() + " --workers 3") == 0);
    REQUIRE(run(sub + " --config " + cfg.string() + " --out " + c.string(), "RWRE_LAB_WORKERS=2") == 0);
    const auto ca = dir_contents(a);
    CHECK(ca.size() >= 2);
    CHECK(ca == dir_contents(b));
    CHECK(ca == dir_contents(c));
  }
}
