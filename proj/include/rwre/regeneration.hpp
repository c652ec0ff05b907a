#pragma once

// Regeneration times in the first-axis direction, regeneration slabs, and
// i.i.d. slab streams.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <utility>
#include <vector>

#include "rwre/env_model.hpp"
#include "rwre/parallel.hpp"
#include "rwre/walker.hpp"

namespace rwre {

struct RegenRecord {
  std::vector<std::int64_t> times;
  std::int64_t censor_margin = 0;
  std::int64_t horizon = 0;  // number of moves in the observed trajectory
};

// One regeneration slab: level width L, duration u, relative path K, and the
// kernels of the on-path sites K[0, u). Off-path strip sites are i.i.d. Q and are
// regenerated from strip_seed on demand.
struct Slab {
  int dim = 1;
  std::int64_t width = 0;     // L
  std::vector<Move> moves;    // K as u moves; u = moves.size()
  std::vector<std::pair<Site, std::uint32_t>> onpath;  // relative site -> atom, first-visit order
  std::uint64_t strip_seed = 0;

  std::int64_t duration() const noexcept { return static_cast<std::int64_t>(moves.size()); }
  Site displacement() const;  // K(u)
  std::vector<Site> path() const;  // K(0..u)

  // Interior-level invariant: K(0)=0, level(K(u)) = L, interior levels in [1, L-1],
  // on-path table equal to the distinct sites of K[0, u).
  bool valid() const;
  // The level part of valid() alone; O(u) with no allocation.
  bool levels_valid() const noexcept;

  friend bool operator==(const Slab&, const Slab&) = default;
};

struct SlabStream {
  std::shared_ptr<const SiteLaw> law;
  std::vector<Slab> slabs;
  std::uint64_t runs = 0;  // annealed runs consumed
};

// Times t <= horizon - margin with level(X_s) < level(X_t) for all s < t and
// level(X_s) > level(X_t) for all observed s > t. Single pass over prefix maxima
// and suffix minima.
RegenRecord find_regenerations(const Trajectory& traj, std::int64_t censor_margin);
RegenRecord find_regenerations(const std::vector<std::int64_t>& levels, std::int64_t censor_margin);

// One slab per consecutive pair of confirmed times (the segment before t_1 is not
// a slab). Strip seeds derive from strip_key and the slab start time.
std::vector<Slab> extract_slabs(const Trajectory& traj, const Environment& env, const RegenRecord& record,
                                RngKey strip_key);
std::vector<Slab> extract_slabs(const Trajectory& traj, const Environment& env, const RegenRecord& record);

struct SlabStreamOptions {
  std::int64_t horizon = 10000;
  std::int64_t margin = 1000;
  std::size_t pilot_runs = 64;
  std::int64_t pilot_steps = 1000;
  std::uint64_t max_barren_runs = 1000;  // consecutive runs without a slab before giving up
  Parallelism par{};
};

// Concatenates slabs from independent annealed runs, dropping each run's first
// slab and its censored tail, until exactly `count` slabs are collected.
SlabStream sample_slab_stream(const std::shared_ptr<const SiteLaw>& law, std::size_t count, RngKey key,
                              const SlabStreamOptions& opts = {});

// Line-oriented record format: a JSON header line with the law, then one JSON
// object per slab.
void write_slab_stream(std::ostream& out, const SlabStream& stream);
SlabStream read_slab_stream(std::istream& in);

}  // namespace rwre
