#pragma once

// The ten acceptance criteria, shared by the acceptance test binary and the
// `selftest` subcommand.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rwre/parallel.hpp"

namespace rwre {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::uint64_t seed = 20240601;
  Parallelism par{};
  std::vector<int> only;  // empty runs all ten
};

inline constexpr int kCriteria = 10;

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

std::string criterion_line(const CriterionResult& r);

}  // namespace rwre
