#pragma once

// Gluing i.i.d. regeneration slabs into a doubly infinite path through the origin
// (finitely truncated), its environment, and the re-randomized coupled environment.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "rwre/env_model.hpp"
#include "rwre/regeneration.hpp"
#include "rwre/walker.hpp"

namespace rwre {

enum class Which {
  OmegaTilde,  // glued environment: conditioned kernels on the path
  Omega,       // coupled environment: fresh Q draws on the path, identical elsewhere
};

class GluedWorld {
 public:
  struct PathSite {
    std::int32_t slab;        // n(z)
    std::uint32_t tilde;      // atom of the glued environment
    std::uint32_t psi;        // atom of the coupled environment
  };

  // Slab list[i] gets index n = i - origin_index; Y_0 = 0.
  static GluedWorld glue(std::vector<Slab> slabs, std::size_t origin_index, std::shared_ptr<const SiteLaw> law);

  // glue() plus an independent Q draw for every on-path site, fixed at construction.
  static GluedWorld couple(std::vector<Slab> slabs, std::size_t origin_index, std::shared_ptr<const SiteLaw> law,
                           RngKey key);

  int dim() const noexcept { return law_->dim(); }
  const SiteLaw& law() const noexcept { return *law_; }
  bool coupled() const noexcept { return coupled_; }

  int first_index() const noexcept { return -static_cast<int>(origin_); }
  int end_index() const noexcept { return first_index() + static_cast<int>(slabs_.size()); }
  const Slab& slab(int n) const { return slabs_.at(static_cast<std::size_t>(n - first_index())); }
  // Y_n for n in [first_index, end_index].
  const Site& anchor(int n) const { return anchors_.at(static_cast<std::size_t>(n - first_index())); }

  // Covered level range [bottom, top).
  std::int64_t bottom_level() const noexcept { return anchors_.front().level(); }
  std::int64_t top_level() const noexcept { return anchors_.back().level(); }
  bool covers(const Site& z) const noexcept { return z.level() >= bottom_level() && z.level() < top_level(); }

  // n(z): the unique slab whose level strip contains the level of z.
  int slab_index_at(const Site& z) const;

  // T as an explicit site set: every on-path site plus the top endpoint Y_end.
  std::size_t path_size() const noexcept { return onpath_.size() + (onpath_.contains(anchors_.back()) ? 0 : 1); }
  bool in_path(const Site& z) const { return onpath_.contains(z) || z == anchors_.back(); }
  const std::unordered_map<Site, PathSite, SiteHash>& onpath() const noexcept { return onpath_; }
  const PathSite* find_path_site(const Site& z) const {
    const auto it = onpath_.find(z);
    return it == onpath_.end() ? nullptr : &it->second;
  }

  std::uint32_t atom_at(const Site& z, Which which) const;
  const SiteKernel& env_at(const Site& z, Which which) const { return law_->kernel(atom_at(z, which)); }

 private:
  GluedWorld() = default;

  std::shared_ptr<const SiteLaw> law_;
  std::vector<Slab> slabs_;
  std::vector<Site> anchors_;  // size slabs_ + 1
  std::size_t origin_ = 0;
  bool coupled_ = false;
  std::unordered_map<Site, PathSite, SiteHash> onpath_;
};

inline const SiteKernel& glued_env_at(const GluedWorld& world, const Site& z, Which which) {
  return world.env_at(z, which);
}

enum class ExitSide { None, Top, Bottom };

struct GluedWalk {
  Trajectory trajectory;
  ExitSide exit = ExitSide::None;
  std::int64_t exit_step = -1;
  std::int64_t min_level = 0;
};

// Walks until `steps` moves or until the walk leaves the covered level range; the
// exiting position is the last position of the trajectory.
GluedWalk walk_on_glued(const GluedWorld& world, const Site& start, std::int64_t steps, RngKey key, Which which);

}  // namespace rwre
