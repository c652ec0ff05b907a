#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>

#include <doctest.h>

#include "rwre/error.hpp"
#include "rwre/env_model.hpp"

namespace testing {

// Kind of the LabError thrown by fn, or nullopt if nothing was thrown.
inline std::optional<rwre::ErrorKind> error_kind(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const rwre::LabError& e) {
    return e.kind();
  }
  return std::nullopt;
}

inline std::shared_ptr<const rwre::SiteLaw> law(int d, double eps,
                                                const std::vector<std::pair<double, std::vector<double>>>& atoms) {
  return std::make_shared<const rwre::SiteLaw>(rwre::make_law(d, eps, atoms));
}

inline double binomial_sigma(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

}  // namespace testing
