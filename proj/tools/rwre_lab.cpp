#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rwre/acceptance.hpp"
#include "rwre/config.hpp"
#include "rwre/error.hpp"
#include "rwre/runner.hpp"

namespace {

constexpr int kInvalidConfig = 1;
constexpr int kRuntimeError = 2;
constexpr int kSelftestFailed = 3;

int resolve_workers(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("RWRE_LAB_WORKERS")) {
    try {
      std::size_t used = 0;
      const int n = std::stoi(env, &used);
      if (used == std::string(env).size() && n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw rwre::LabError(rwre::ErrorKind::InvalidConfig, "RWRE_LAB_WORKERS must be a positive integer");
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo lab for random walks in random environments"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t reps = 0;
  int workers = 0;
  std::vector<int> only;

  for (const auto& name : rwre::pipeline_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "run config (JSON)")->required();
    sub->add_option("--seed", seed, "override master_seed");
    sub->add_option("--reps", reps, "override reps")->check(CLI::Range(std::size_t{2}, std::size_t{1000000000}));
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--workers", workers, "worker threads (default RWRE_LAB_WORKERS, else 1)")
        ->check(CLI::PositiveNumber);
  }
  auto* self = app.add_subcommand("selftest", "run the acceptance suite");
  self->add_option("--seed", seed, "suite seed");
  self->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  self->add_option("--only", only, "criterion numbers to run")->check(CLI::Range(1, rwre::kCriteria));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalidConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  rwre::Parallelism par;
  try {
    par.workers = resolve_workers(workers);
  } catch (const rwre::LabError& e) {
    std::cerr << e.what() << "\n";
    return kInvalidConfig;
  }

  if (command == "selftest") {
    rwre::AcceptanceOptions opts;
    if (self->count("--seed") > 0) opts.seed = seed;
    opts.par = par;
    opts.only = only;
    const auto results = rwre::run_acceptance(opts, [](const rwre::CriterionResult& r) {
      std::cout << rwre::criterion_line(r) << std::endl;
    });
    for (const auto& r : results) {
      if (!r.pass) return kSelftestFailed;
    }
    return 0;
  }

  rwre::RunConfig cfg;
  try {
    cfg = rwre::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kInvalidConfig;
  }
  auto* sub = app.get_subcommands().front();
  if (sub->count("--seed") > 0) cfg.master_seed = seed;
  if (sub->count("--reps") > 0) cfg.reps = reps;
  if (!out_dir.empty()) cfg.out_dir = out_dir;

  rwre::RunOutput out;
  try {
    out = rwre::run_pipeline(command, cfg, par);
  } catch (const rwre::LabError& e) {
    std::cerr << e.what() << "\n";
    return e.kind() == rwre::ErrorKind::InvalidConfig ? kInvalidConfig : kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kRuntimeError;
  }
  try {
    rwre::write_run(out, cfg.out_dir);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kRuntimeError;
  }
  for (const auto& c : out.checks) std::cout << rwre::check_line(c) << "\n";
  return 0;
}
