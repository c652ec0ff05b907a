#include "rwre/backward_path.hpp"

#include <algorithm>
#include <string>

#include "rwre/error.hpp"

namespace rwre {

GluedWorld GluedWorld::glue(std::vector<Slab> slabs, std::size_t origin_index,
                            std::shared_ptr<const SiteLaw> law) {
  if (slabs.empty()) throw LabError(ErrorKind::InvalidArgument, "cannot glue an empty slab list");
  if (origin_index > slabs.size()) throw LabError(ErrorKind::InvalidArgument, "origin index past the slab list");

  GluedWorld w;
  w.law_ = std::move(law);
  w.slabs_ = std::move(slabs);
  w.origin_ = origin_index;
  for (std::size_t i = 0; i < w.slabs_.size(); ++i) {
    const Slab& s = w.slabs_[i];
    if (s.dim != w.law_->dim() || !s.levels_valid()) {
      throw LabError(ErrorKind::TilingViolation, "slab " + std::to_string(static_cast<long>(i) - static_cast<long>(origin_index)) +
                                                     " violates the interior-level invariant");
    }
  }

  w.anchors_.assign(w.slabs_.size() + 1, Site{});
  for (std::size_t i = origin_index + 1; i < w.anchors_.size(); ++i) {
    w.anchors_[i] = w.anchors_[i - 1] + w.slabs_[i - 1].displacement();
  }
  for (std::size_t i = origin_index; i-- > 0;) {
    w.anchors_[i] = w.anchors_[i + 1] - w.slabs_[i].displacement();
  }
  for (std::size_t i = 0; i < w.slabs_.size(); ++i) {
    if (w.anchors_[i + 1].level() != w.anchors_[i].level() + w.slabs_[i].width) {
      throw LabError(ErrorKind::TilingViolation, "level strips leave a gap or overlap");
    }
  }

  std::size_t total = 0;
  for (const auto& s : w.slabs_) total += s.onpath.size();
  w.onpath_.reserve(total);
  for (std::size_t i = 0; i < w.slabs_.size(); ++i) {
    const auto n = static_cast<std::int32_t>(static_cast<long>(i) - static_cast<long>(origin_index));
    for (const auto& [rel, atom] : w.slabs_[i].onpath) {
      if (!w.onpath_.emplace(w.anchors_[i] + rel, PathSite{n, atom, atom}).second) {
        throw LabError(ErrorKind::TilingViolation, "two slabs claim the same site");
      }
    }
  }
  return w;
}

GluedWorld GluedWorld::couple(std::vector<Slab> slabs, std::size_t origin_index,
                              std::shared_ptr<const SiteLaw> law, RngKey key) {
  GluedWorld w = glue(std::move(slabs), origin_index, std::move(law));
  w.coupled_ = true;
  const RngKey psi_key = key.child(Stream::Psi);
  std::uint64_t counter = 0;
  for (std::size_t i = 0; i < w.slabs_.size(); ++i) {
    for (const auto& entry : w.slabs_[i].onpath) {
      auto& ps = w.onpath_.at(w.anchors_[i] + entry.first);
      ps.psi = sample_site_atom(*w.law_, psi_key.child(counter++));
    }
  }
  return w;
}

int GluedWorld::slab_index_at(const Site& z) const {
  if (!covers(z)) {
    throw LabError(ErrorKind::OutsideCoveredRegion,
                   "level " + std::to_string(z.level()) + " outside [" + std::to_string(bottom_level()) + ", " +
                       std::to_string(top_level()) + ")");
  }
  const auto it = std::upper_bound(anchors_.begin(), anchors_.end(), z.level(),
                                   [](std::int64_t l, const Site& a) { return l < a.level(); });
  return static_cast<int>(it - anchors_.begin()) - 1 + first_index();
}

std::uint32_t GluedWorld::atom_at(const Site& z, Which which) const {
  const int n = slab_index_at(z);
  if (const auto* ps = find_path_site(z)) return which == Which::Omega ? ps->psi : ps->tilde;
  if (law_->size() == 1) return 0;
  const Slab& s = slab(n);
  return law_->sample_atom(to_unit(site_bits(s.strip_seed, z - anchor(n), law_->dim())));
}

GluedWalk walk_on_glued(const GluedWorld& world, const Site& start, std::int64_t steps, RngKey key, Which which) {
  if (!world.covers(start)) {
    throw LabError(ErrorKind::OutsideCoveredRegion, "walk start outside the covered region");
  }
  GluedWalk out;
  out.trajectory.dim = world.dim();
  out.trajectory.start = start;
  out.min_level = start.level();
  Rng rng(key.child(Stream::Walk));
  Site x = start;
  for (std::int64_t t = 0; t < steps; ++t) {
    const Move m = world.env_at(x, which).sample(rng.uniform());
    out.trajectory.moves.push_back(m);
    x = x.stepped(m);
    out.min_level = std::min(out.min_level, x.level());
    if (x.level() >= world.top_level()) {
      out.exit = ExitSide::Top;
    } else if (x.level() < world.bottom_level()) {
      out.exit = ExitSide::Bottom;
    }
    if (out.exit != ExitSide::None) {
      out.exit_step = t + 1;
      break;
    }
  }
  return out;
}

}  // namespace rwre
