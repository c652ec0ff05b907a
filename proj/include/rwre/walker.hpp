#pragma once

// Quenched and annealed walk simulation, rejection sampling of conditioned
// trajectories, and the exact small-horizon enumeration oracle.

#include <cstdint>
#include <map>
#include <vector>

#include "rwre/env_model.hpp"
#include "rwre/lattice.hpp"
#include "rwre/rng.hpp"

namespace rwre {

struct Trajectory {
  int dim = 1;
  Site start;
  std::vector<Move> moves;

  std::size_t steps() const noexcept { return moves.size(); }
  std::vector<Site> positions() const;
  std::vector<std::int64_t> levels() const;
  Site end() const;
};

enum class Condition {
  None,
  StayPositive,     // level strictly above the start level at every time n > 0
  StayBelowStart,   // level strictly below the start level at every time n > 0
};

struct ConditionEvent {
  Condition tag = Condition::None;
  std::int64_t horizon = 1;
};

Trajectory simulate_quenched(const Environment& env, const Site& start, std::int64_t steps, RngKey key);

// The environment an annealed run with this key walks on.
Environment annealed_environment(const std::shared_ptr<const SiteLaw>& law, RngKey key);

// Fresh environment per call: environment seed and walk stream are both children of key.
Trajectory simulate_annealed(const std::shared_ptr<const SiteLaw>& law, const Site& start, std::int64_t steps,
                             RngKey key);

inline constexpr int kMaxEnumerationHorizon = 12;
inline constexpr double kMaxEnumerationPaths = 16777216.0;  // 2^24

struct ExactDistribution {
  std::map<Site, double> endpoints;
  std::map<Site, double> visits;  // P(site visited at some time in [0, horizon])
  double stay_positive = 0.0;     // P(StayPositive over the horizon)
  double stay_below_start = 0.0;  // P(StayBelowStart over the horizon)
};

// Brute-force path enumeration under the quenched law.
ExactDistribution enumerate_exact(const Environment& env, const Site& start, int horizon);

struct AcceptanceStats {
  std::uint64_t attempts = 0;
  std::uint64_t accepted = 0;
  double rate() const noexcept { return attempts == 0 ? 0.0 : static_cast<double>(accepted) / attempts; }
};

struct ConditionOptions {
  double acceptance_floor = 1e-4;
  std::uint64_t retry_budget = 100000;  // attempts after which a rate below the floor is fatal
};

struct ConditionedSample {
  Trajectory trajectory;
  AcceptanceStats stats;
};

// Rejection sampling: resimulate until the event holds over the full horizon.
ConditionedSample sample_conditioned(const std::shared_ptr<const SiteLaw>& law, const Site& start,
                                     const ConditionEvent& event, RngKey key, const ConditionOptions& opts = {});
ConditionedSample sample_conditioned(const Environment& env, const Site& start, const ConditionEvent& event,
                                     RngKey key, const ConditionOptions& opts = {});

// Acceptance probability of the event from `attempts` independent annealed tries.
AcceptanceStats estimate_acceptance(const std::shared_ptr<const SiteLaw>& law, const Site& start,
                                    const ConditionEvent& event, std::uint64_t attempts, RngKey key);

bool event_holds(const Trajectory& traj, Condition tag);

}  // namespace rwre
