#include "rwre/regeneration.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <unordered_set>

#include "rwre/error.hpp"
#include "rwre/serialize.hpp"

namespace rwre {

Site Slab::displacement() const {
  Site x;
  for (Move m : moves) x = x.stepped(m);
  return x;
}

std::vector<Site> Slab::path() const {
  std::vector<Site> out;
  out.reserve(moves.size() + 1);
  Site x;
  out.push_back(x);
  for (Move m : moves) {
    x = x.stepped(m);
    out.push_back(x);
  }
  return out;
}

bool Slab::levels_valid() const noexcept {
  if (width < 1 || moves.empty()) return false;
  std::int64_t level = 0;
  for (std::size_t t = 0; t + 1 < moves.size(); ++t) {
    if (move_axis(moves[t]) == 0) level += move_sign(moves[t]);
    if (level < 1 || level > width - 1) return false;
  }
  if (move_axis(moves.back()) == 0) level += move_sign(moves.back());
  return level == width;
}

bool Slab::valid() const {
  if (!levels_valid()) return false;
  const auto p = path();
  std::unordered_set<Site, SiteHash> visited(p.begin(), p.end() - 1);
  if (visited.size() != onpath.size()) return false;
  for (const auto& [z, atom] : onpath) {
    if (!visited.contains(z)) return false;
  }
  return true;
}

RegenRecord find_regenerations(const std::vector<std::int64_t>& levels, std::int64_t censor_margin) {
  if (levels.empty()) throw LabError(ErrorKind::InvalidArgument, "empty level sequence");
  const auto n = static_cast<std::int64_t>(levels.size()) - 1;
  if (censor_margin < 0 || censor_margin > n) {
    throw LabError(ErrorKind::InvalidArgument, "censor margin must lie in [0, trajectory length)");
  }
  RegenRecord rec;
  rec.censor_margin = censor_margin;
  rec.horizon = n;

  std::vector<std::int64_t> suffix_min(levels.size());
  suffix_min[n] = std::numeric_limits<std::int64_t>::max();
  for (std::int64_t t = n; t > 0; --t) suffix_min[t - 1] = std::min(suffix_min[t], levels[t]);

  std::int64_t prefix_max = std::numeric_limits<std::int64_t>::min();
  for (std::int64_t t = 0; t <= n - censor_margin; ++t) {
    if (prefix_max < levels[t] && suffix_min[t] > levels[t]) rec.times.push_back(t);
    prefix_max = std::max(prefix_max, levels[t]);
  }
  return rec;
}

RegenRecord find_regenerations(const Trajectory& traj, std::int64_t censor_margin) {
  return find_regenerations(traj.levels(), censor_margin);
}

std::vector<Slab> extract_slabs(const Trajectory& traj, const Environment& env, const RegenRecord& record,
                                RngKey strip_key) {
  std::vector<Slab> out;
  if (record.times.size() < 2) return out;
  const auto pos = traj.positions();
  out.reserve(record.times.size() - 1);
  std::unordered_set<Site, SiteHash> seen;
  for (std::size_t i = 0; i + 1 < record.times.size(); ++i) {
    const auto t0 = record.times[i];
    const auto t1 = record.times[i + 1];
    const Site origin = pos[t0];
    Slab s;
    s.dim = traj.dim;
    s.width = pos[t1].level() - origin.level();
    s.moves.assign(traj.moves.begin() + t0, traj.moves.begin() + t1);
    s.strip_seed = strip_key.child(static_cast<std::uint64_t>(t0)).value;
    seen.clear();
    for (auto t = t0; t < t1; ++t) {
      if (seen.insert(pos[t]).second) s.onpath.emplace_back(pos[t] - origin, env.atom_at(pos[t]));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Slab> extract_slabs(const Trajectory& traj, const Environment& env, const RegenRecord& record) {
  return extract_slabs(traj, env, record, RngKey{env.seed()}.child(Stream::Strip));
}

namespace {

void check_ballistic(const std::shared_ptr<const SiteLaw>& law, RngKey key, const SlabStreamOptions& opts) {
  const auto vs = parallel_map(opts.pilot_runs, opts.par, [&](std::size_t r) {
    const auto t = simulate_annealed(law, Site{}, opts.pilot_steps, key.child(r));
    return static_cast<double>(t.end().level()) / static_cast<double>(opts.pilot_steps);
  });
  double mean = 0.0;
  for (double v : vs) mean += v;
  mean /= static_cast<double>(vs.size());
  double var = 0.0;
  for (double v : vs) var += (v - mean) * (v - mean);
  var /= static_cast<double>(vs.size() > 1 ? vs.size() - 1 : 1);
  const double se = std::sqrt(var / static_cast<double>(vs.size()));
  if (!(mean - 3.0 * se > 0.0)) {
    throw LabError(ErrorKind::BallisticityDoubtful,
                   "pilot level velocity " + std::to_string(mean) + " +- " + std::to_string(3.0 * se));
  }
}

}  // namespace

SlabStream sample_slab_stream(const std::shared_ptr<const SiteLaw>& law, std::size_t count, RngKey key,
                              const SlabStreamOptions& opts) {
  if (opts.horizon < 1 || opts.margin < 0 || opts.margin >= opts.horizon) {
    throw LabError(ErrorKind::InvalidArgument, "need horizon >= 1 and 0 <= margin < horizon");
  }
  if (opts.pilot_runs > 0) check_ballistic(law, key.child(Stream::Pilot), opts);

  SlabStream stream;
  stream.law = law;
  stream.slabs.reserve(count);
  constexpr std::size_t kBatch = 16;
  const RngKey runs_key = key.child(Stream::Slabs);
  std::uint64_t barren = 0;
  std::uint64_t next_run = 0;
  while (stream.slabs.size() < count) {
    auto batch = parallel_map(kBatch, opts.par, [&](std::size_t i) {
      const RngKey k = runs_key.child(next_run + i);
      const Environment env = annealed_environment(law, k);
      const auto traj = simulate_quenched(env, Site{}, opts.horizon, k);
      auto slabs = extract_slabs(traj, env, find_regenerations(traj, opts.margin), k.child(Stream::Strip));
      if (!slabs.empty()) slabs.erase(slabs.begin());
      return slabs;
    });
    for (auto& slabs : batch) {
      if (stream.slabs.size() >= count) break;
      ++stream.runs;
      barren = slabs.empty() ? barren + 1 : 0;
      if (barren >= opts.max_barren_runs) {
        throw LabError(ErrorKind::AcceptanceTooLow,
                       std::to_string(barren) + " consecutive runs produced no confirmed slab");
      }
      for (auto& s : slabs) {
        if (stream.slabs.size() >= count) break;
        stream.slabs.push_back(std::move(s));
      }
    }
    next_run += kBatch;
  }
  return stream;
}

void write_slab_stream(std::ostream& out, const SlabStream& stream) {
  nlohmann::json header = {{"format", "rwre-slabs/1"}, {"law", law_to_json(*stream.law)},
                           {"count", stream.slabs.size()}, {"runs", stream.runs}};
  out << header.dump() << '\n';
  for (const auto& s : stream.slabs) out << slab_to_json(s).dump() << '\n';
}

SlabStream read_slab_stream(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw LabError(ErrorKind::InvalidArgument, "empty slab stream");
  const auto header = nlohmann::json::parse(line);
  if (header.value("format", "") != "rwre-slabs/1") {
    throw LabError(ErrorKind::InvalidArgument, "unknown slab stream format");
  }
  SlabStream stream;
  stream.law = std::make_shared<const SiteLaw>(law_from_json(header.at("law")));
  stream.runs = header.value("runs", std::uint64_t{0});
  const int d = stream.law->dim();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    stream.slabs.push_back(slab_from_json(nlohmann::json::parse(line), d));
  }
  return stream;
}

}  // namespace rwre
