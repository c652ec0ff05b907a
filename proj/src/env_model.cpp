#include "rwre/env_model.hpp"

#include <cmath>
#include <string>

#include "rwre/error.hpp"

namespace rwre {

SiteKernel make_kernel(int d, std::span<const double> probs, double epsilon) {
  if (d < 1 || d > kMaxDim) {
    throw LabError(ErrorKind::InvalidArgument, "dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  }
  if (probs.size() != static_cast<std::size_t>(2 * d)) {
    throw LabError(ErrorKind::InvalidArgument,
                   "expected " + std::to_string(2 * d) + " move probabilities, got " + std::to_string(probs.size()));
  }
  if (!(epsilon >= 0.0)) throw LabError(ErrorKind::InvalidArgument, "epsilon must be >= 0");

  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p)) throw LabError(ErrorKind::InvalidArgument, "non-finite probability");
    if (p < 0.0) throw LabError(ErrorKind::NegativeEntry, "probability " + std::to_string(p) + " < 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kNormTolerance) {
    throw LabError(ErrorKind::NotNormalized, "probabilities sum to " + std::to_string(sum));
  }
  for (double p : probs) {
    if (p < epsilon) {
      throw LabError(ErrorKind::EllipticityViolated,
                     "entry " + std::to_string(p) + " below floor " + std::to_string(epsilon));
    }
  }

  SiteKernel k;
  k.dim_ = d;
  double acc = 0.0;
  for (int m = 0; m < 2 * d; ++m) {
    k.probs_[m] = probs[m];
    acc += probs[m];
    k.cdf_[m] = acc;
    if (probs[m] > 0.0) k.last_positive_ = m;
  }
  return k;
}

std::vector<double> SiteKernel::drift() const {
  std::vector<double> v(dim_, 0.0);
  for (int m = 0; m < moves(); ++m) v[move_axis(static_cast<Move>(m))] += move_sign(static_cast<Move>(m)) * probs_[m];
  return v;
}

SiteLaw::SiteLaw(int d, double epsilon, std::vector<Atom> atoms)
    : dim_(d), epsilon_(epsilon), atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw LabError(ErrorKind::InvalidArgument, "site law needs at least one atom");
  double sum = 0.0;
  for (const auto& a : atoms_) {
    if (a.kernel.dim() != d) throw LabError(ErrorKind::InvalidArgument, "atom dimension mismatch");
    if (!(a.weight >= 0.0)) throw LabError(ErrorKind::NegativeEntry, "negative atom weight");
    for (double p : a.kernel.probs()) {
      if (p < epsilon) throw LabError(ErrorKind::EllipticityViolated, "atom violates ellipticity floor");
    }
    sum += a.weight;
  }
  if (std::abs(sum - 1.0) > kNormTolerance) {
    throw LabError(ErrorKind::NotNormalized, "atom weights sum to " + std::to_string(sum));
  }
  double acc = 0.0;
  for (const auto& a : atoms_) {
    acc += a.weight;
    cdf_.push_back(acc);
  }
}

std::vector<double> SiteLaw::mean_drift() const {
  std::vector<double> v(dim_, 0.0);
  for (const auto& a : atoms_) {
    auto d = a.kernel.drift();
    for (int i = 0; i < dim_; ++i) v[i] += a.weight * d[i];
  }
  return v;
}

bool operator==(const SiteLaw& a, const SiteLaw& b) noexcept {
  if (a.dim_ != b.dim_ || a.epsilon_ != b.epsilon_ || a.atoms_.size() != b.atoms_.size()) return false;
  for (std::size_t i = 0; i < a.atoms_.size(); ++i) {
    if (a.atoms_[i].weight != b.atoms_[i].weight || !(a.atoms_[i].kernel == b.atoms_[i].kernel)) return false;
  }
  return true;
}

SiteLaw make_law(int d, double epsilon, const std::vector<std::pair<double, std::vector<double>>>& atoms) {
  std::vector<Atom> out;
  out.reserve(atoms.size());
  for (const auto& [w, probs] : atoms) out.push_back(Atom{w, make_kernel(d, probs, epsilon)});
  return SiteLaw(d, epsilon, std::move(out));
}

std::uint32_t sample_site_atom(const SiteLaw& law, RngKey key) {
  return law.sample_atom(to_unit(splitmix64(key.value)));
}

const SiteKernel& sample_site(const SiteLaw& law, RngKey key) { return law.kernel(sample_site_atom(law, key)); }

SiteLaw mirror_law(const SiteLaw& law) {
  std::vector<Atom> atoms;
  atoms.reserve(law.size());
  for (const auto& a : law.atoms()) {
    std::vector<double> p(a.kernel.probs().begin(), a.kernel.probs().end());
    std::swap(p[0], p[1]);
    atoms.push_back(Atom{a.weight, make_kernel(law.dim(), p, law.epsilon())});
  }
  return SiteLaw(law.dim(), law.epsilon(), std::move(atoms));
}

}  // namespace rwre
