#include "rwre/walker.hpp"

#include <cmath>
#include <string>

#include "rwre/error.hpp"

namespace rwre {

std::vector<Site> Trajectory::positions() const {
  std::vector<Site> out;
  out.reserve(moves.size() + 1);
  Site x = start;
  out.push_back(x);
  for (Move m : moves) {
    x = x.stepped(m);
    out.push_back(x);
  }
  return out;
}

std::vector<std::int64_t> Trajectory::levels() const {
  std::vector<std::int64_t> out;
  out.reserve(moves.size() + 1);
  std::int64_t l = start.level();
  out.push_back(l);
  for (Move m : moves) {
    if (move_axis(m) == 0) l += move_sign(m);
    out.push_back(l);
  }
  return out;
}

Site Trajectory::end() const {
  Site x = start;
  for (Move m : moves) x = x.stepped(m);
  return x;
}

namespace {

// Runs up to `steps` moves; stops early as soon as the condition is violated.
// Returns true iff the condition held at every step taken.
bool run_walk(const Environment& env, const Site& start, std::int64_t steps, Rng& rng, Condition tag,
              Trajectory& out) {
  out.dim = env.law().dim();
  out.start = start;
  out.moves.clear();
  out.moves.reserve(static_cast<std::size_t>(steps));
  Site x = start;
  const std::int64_t base = start.level();
  for (std::int64_t t = 0; t < steps; ++t) {
    const Move m = env.at(x).sample(rng.uniform());
    out.moves.push_back(m);
    x = x.stepped(m);
    if (tag == Condition::StayPositive && x.level() <= base) return false;
    if (tag == Condition::StayBelowStart && x.level() >= base) return false;
  }
  return true;
}

void check_acceptance(const AcceptanceStats& stats, const ConditionOptions& opts) {
  if (stats.attempts >= opts.retry_budget && stats.rate() < opts.acceptance_floor) {
    throw LabError(ErrorKind::AcceptanceTooLow, "acceptance rate " + std::to_string(stats.rate()) + " after " +
                                                    std::to_string(stats.attempts) + " attempts");
  }
}

template <class EnvFor>
ConditionedSample rejection_loop(EnvFor&& env_for, const Site& start, const ConditionEvent& event, RngKey key,
                                 const ConditionOptions& opts) {
  if (event.horizon < 1) throw LabError(ErrorKind::InvalidArgument, "condition horizon must be >= 1");
  ConditionedSample out;
  for (std::uint64_t attempt = 0;; ++attempt) {
    const RngKey k = key.child(attempt);
    Rng rng(k.child(Stream::Walk));
    ++out.stats.attempts;
    if (run_walk(env_for(k), start, event.horizon, rng, event.tag, out.trajectory)) {
      ++out.stats.accepted;
      return out;
    }
    check_acceptance(out.stats, opts);
  }
}

}  // namespace

Environment annealed_environment(const std::shared_ptr<const SiteLaw>& law, RngKey key) {
  return Environment(law, key.child(Stream::Environment).value);
}

bool event_holds(const Trajectory& traj, Condition tag) {
  if (tag == Condition::None) return true;
  const auto levels = traj.levels();
  for (std::size_t t = 1; t < levels.size(); ++t) {
    if (tag == Condition::StayPositive && levels[t] <= levels[0]) return false;
    if (tag == Condition::StayBelowStart && levels[t] >= levels[0]) return false;
  }
  return true;
}

Trajectory simulate_quenched(const Environment& env, const Site& start, std::int64_t steps, RngKey key) {
  if (steps < 0) throw LabError(ErrorKind::InvalidArgument, "steps must be >= 0");
  Trajectory t;
  Rng rng(key.child(Stream::Walk));
  run_walk(env, start, steps, rng, Condition::None, t);
  return t;
}

Trajectory simulate_annealed(const std::shared_ptr<const SiteLaw>& law, const Site& start, std::int64_t steps,
                             RngKey key) {
  return simulate_quenched(annealed_environment(law, key), start, steps, key);
}

ExactDistribution enumerate_exact(const Environment& env, const Site& start, int horizon) {
  const int moves = 2 * env.law().dim();
  if (horizon < 0) throw LabError(ErrorKind::InvalidArgument, "horizon must be >= 0");
  if (horizon > kMaxEnumerationHorizon || std::pow(moves, horizon) > kMaxEnumerationPaths) {
    throw LabError(ErrorKind::HorizonTooLarge, std::to_string(moves) + "^" + std::to_string(horizon) +
                                                   " paths exceed the enumeration budget");
  }

  ExactDistribution out;
  std::map<Site, int> visit_count;
  const std::int64_t base = start.level();

  // Depth-first over path prefixes. A site's visit probability is the total weight
  // of prefixes that reach it for the first time, since each prefix's subtree
  // carries exactly the prefix weight.
  auto dfs = [&](auto& self, const Site& x, int depth, double weight, bool positive, bool below) -> void {
    if (depth == horizon) {
      out.endpoints[x] += weight;
      if (positive) out.stay_positive += weight;
      if (below) out.stay_below_start += weight;
      return;
    }
    const SiteKernel& k = env.at(x);
    for (int m = 0; m < moves; ++m) {
      const double p = k.prob(static_cast<Move>(m));
      if (p == 0.0) continue;
      const Site y = x.stepped(static_cast<Move>(m));
      const double w = weight * p;
      int& count = visit_count[y];
      if (count++ == 0) out.visits[y] += w;
      self(self, y, depth + 1, w, positive && y.level() > base, below && y.level() < base);
      --visit_count[y];
    }
  };
  visit_count[start] = 1;
  out.visits[start] = 1.0;
  dfs(dfs, start, 0, 1.0, true, true);
  return out;
}

ConditionedSample sample_conditioned(const std::shared_ptr<const SiteLaw>& law, const Site& start,
                                     const ConditionEvent& event, RngKey key, const ConditionOptions& opts) {
  return rejection_loop([&](RngKey k) { return annealed_environment(law, k); }, start, event, key, opts);
}

ConditionedSample sample_conditioned(const Environment& env, const Site& start, const ConditionEvent& event,
                                     RngKey key, const ConditionOptions& opts) {
  return rejection_loop([&](RngKey) -> const Environment& { return env; }, start, event, key, opts);
}

AcceptanceStats estimate_acceptance(const std::shared_ptr<const SiteLaw>& law, const Site& start,
                                    const ConditionEvent& event, std::uint64_t attempts, RngKey key) {
  AcceptanceStats stats;
  Trajectory scratch;
  for (std::uint64_t a = 0; a < attempts; ++a) {
    const RngKey k = key.child(a);
    Rng rng(k.child(Stream::Walk));
    ++stats.attempts;
    if (run_walk(annealed_environment(law, k), start, event.horizon, rng, event.tag, scratch)) ++stats.accepted;
  }
  return stats;
}

}  // namespace rwre
