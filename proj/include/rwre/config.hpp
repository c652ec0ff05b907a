#pragma once

// Run configuration: a JSON document with a versioned "schema" field.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rwre/env_model.hpp"

namespace rwre {

inline constexpr const char* kConfigSchema = "rwre-lab/1";

struct RunConfig {
  std::shared_ptr<const SiteLaw> law;
  std::uint64_t master_seed = 1;
  std::int64_t horizon = 10000;      // slab-stream run length and conditioned-walk horizon
  std::int64_t margin = 1000;        // censoring margin
  std::int64_t steps = 10000;        // direct velocity run length, step cap for glued walks
  std::size_t reps = 1000;
  std::size_t slab_count = 10000;
  std::vector<int> n_grid{4, 8, 16, 32};
  int n_slabs = 10;                  // N: slabs glued on each side of the origin
  int n_max = 32;                    // overlap depth in slabs
  std::size_t sites = 10000;
  std::size_t worlds = 100;
  std::optional<std::vector<std::int32_t>> z0;
  std::optional<double> radius;      // empty means tuned from the samples
  double lambda_target = 0.1;
  std::size_t tilde_reps = 10000;    // conditioned walk pairs for the M~ estimate
  std::size_t pairs = 10000;         // (T', z0 + T~) pairs for intersection counts
  std::string out_dir = "out";
};

// Throws LabError(InvalidConfig) on any schema, type or range problem; law errors
// keep their own kind.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// Fully resolved form, including every default.
nlohmann::json config_to_json(const RunConfig& cfg);

}  // namespace rwre
