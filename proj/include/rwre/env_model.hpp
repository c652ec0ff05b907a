#pragma once

// Single-site transition kernels, the site law Q, and lazily evaluated i.i.d.
// environments keyed by (seed, site).

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "rwre/lattice.hpp"
#include "rwre/rng.hpp"

namespace rwre {

inline constexpr double kNormTolerance = 1e-12;

// Probability vector over the 2d signed unit moves at one site.
class SiteKernel {
 public:
  SiteKernel() = default;

  int dim() const noexcept { return dim_; }
  int moves() const noexcept { return 2 * dim_; }
  double prob(Move m) const noexcept { return probs_[m]; }
  std::span<const double> probs() const noexcept { return {probs_.data(), static_cast<std::size_t>(moves())}; }

  // Mean displacement sum_e p(e) e, one entry per axis.
  std::vector<double> drift() const;

  // Inverse-CDF draw; never returns a zero-probability move.
  Move sample(double u) const noexcept {
    for (int m = 0; m < last_positive_; ++m) {
      if (u < cdf_[m]) return static_cast<Move>(m);
    }
    return static_cast<Move>(last_positive_);
  }

  friend bool operator==(const SiteKernel& a, const SiteKernel& b) noexcept {
    return a.dim_ == b.dim_ && a.probs_ == b.probs_;
  }

 private:
  friend SiteKernel make_kernel(int d, std::span<const double> probs, double epsilon);

  int dim_ = 0;
  int last_positive_ = 0;
  std::array<double, 2 * kMaxDim> probs_{};
  std::array<double, 2 * kMaxDim> cdf_{};
};

// Validates and builds a kernel. Normalization is checked, never repaired.
// epsilon == 0 is accepted for degenerate (non-elliptic) test kernels.
SiteKernel make_kernel(int d, std::span<const double> probs, double epsilon);

struct Atom {
  double weight = 0.0;
  SiteKernel kernel;
};

// Finitely supported distribution Q over kernels with ellipticity floor epsilon.
class SiteLaw {
 public:
  SiteLaw(int d, double epsilon, std::vector<Atom> atoms);

  int dim() const noexcept { return dim_; }
  double epsilon() const noexcept { return epsilon_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  const SiteKernel& kernel(std::uint32_t atom) const noexcept { return atoms_[atom].kernel; }
  double weight(std::uint32_t atom) const noexcept { return atoms_[atom].weight; }

  std::uint32_t sample_atom(double u) const noexcept {
    for (std::uint32_t a = 0; a + 1 < atoms_.size(); ++a) {
      if (u < cdf_[a]) return a;
    }
    return static_cast<std::uint32_t>(atoms_.size() - 1);
  }

  // Annealed one-step drift: the weight-averaged kernel drift.
  std::vector<double> mean_drift() const;

  friend bool operator==(const SiteLaw& a, const SiteLaw& b) noexcept;

 private:
  int dim_;
  double epsilon_;
  std::vector<Atom> atoms_;
  std::vector<double> cdf_;
};

// Convenience: builds a law from (weight, probability vector) pairs.
SiteLaw make_law(int d, double epsilon, const std::vector<std::pair<double, std::vector<double>>>& atoms);

// Draws one kernel from Q; deterministic in the key.
const SiteKernel& sample_site(const SiteLaw& law, RngKey key);
std::uint32_t sample_site_atom(const SiteLaw& law, RngKey key);

// Swaps the +e_1 and -e_1 entries of every atom.
SiteLaw mirror_law(const SiteLaw& law);

// Keyed hash of (seed, site) -> uniform bits. Pure; the basis of lazy environments.
inline std::uint64_t site_bits(std::uint64_t seed, const Site& z, int dim) noexcept {
  std::uint64_t h = splitmix64(seed ^ 0xA0761D6478BD642FULL);
  for (int i = 0; i < dim; ++i) h = splitmix64(h ^ static_cast<std::uint32_t>(z.c[i]));
  return h;
}

// The environment omega drawn from P = Q^{Z^d}, materialized lazily: the kernel at z
// is a pure function of (seed, z).
class Environment {
 public:
  Environment(std::shared_ptr<const SiteLaw> law, std::uint64_t seed)
      : law_(std::move(law)), seed_(seed) {}

  const SiteLaw& law() const noexcept { return *law_; }
  const std::shared_ptr<const SiteLaw>& law_ptr() const noexcept { return law_; }
  std::uint64_t seed() const noexcept { return seed_; }

  std::uint32_t atom_at(const Site& z) const noexcept {
    if (law_->size() == 1) return 0;
    return law_->sample_atom(to_unit(site_bits(seed_, z, law_->dim())));
  }
  const SiteKernel& at(const Site& z) const noexcept { return law_->kernel(atom_at(z)); }

 private:
  std::shared_ptr<const SiteLaw> law_;
  std::uint64_t seed_;
};

inline const SiteKernel& env_at(const Environment& env, const Site& z) { return env.at(z); }

}  // namespace rwre
