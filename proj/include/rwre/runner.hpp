#pragma once

// Subcommand pipelines: each turns a resolved config into a JSON report, n-indexed
// CSV tables and named PASS/FAIL checks. Nothing here touches the filesystem
// except write_run.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rwre/config.hpp"
#include "rwre/parallel.hpp"
#include "rwre/stats.hpp"

namespace rwre {

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct TableRow {
  double n = 0.0;
  double estimate = 0.0;
  double stderr_ = 0.0;
};

struct RunOutput {
  nlohmann::json report;
  std::vector<std::pair<std::string, std::string>> files;  // name -> contents
  std::vector<Check> checks;
};

// Every subcommand except selftest.
const std::vector<std::string>& pipeline_names();

RunOutput run_pipeline(const std::string& name, const RunConfig& cfg, Parallelism par = {});

std::string csv_table(const std::vector<TableRow>& rows);
std::string check_line(const Check& c);

// report.json, report.txt and every table, written into dir.
void write_run(const RunOutput& out, const std::filesystem::path& dir);

// Pieces shared with the acceptance suite.
SlabStreamOptions stream_options(const RunConfig& cfg, Parallelism par);
// Backward slabs needed so that T' reaches past every site a conditioned walk of
// `horizon` steps from z0 can visit, judged from the pool's renewal velocity.
int covering_slabs(const SlabStream& pool, const Site& z0, std::int64_t horizon);

struct CertifyOutcome {
  OverlapReport overlap;
  std::optional<double> radius;
  std::optional<Certificate> certificate;
  std::string refusal;  // set when no certificate could be formed
  IntersectionReport intersection;
};

CertifyOutcome certify_pipeline(const RunConfig& cfg, Parallelism par);

}  // namespace rwre
