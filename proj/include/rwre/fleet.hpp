#pragma once

// Named site laws used by tests, the acceptance suite and the sample configs.

#include <memory>
#include <string>
#include <vector>

#include "rwre/env_model.hpp"

namespace rwre::fleet {

std::shared_ptr<const SiteLaw> deterministic(int d = 1);  // +e1 with probability 1
std::shared_ptr<const SiteLaw> d1_biased();               // p(+) = 0.6
std::shared_ptr<const SiteLaw> d1_two_atom();             // p(+) in {0.7, 0.9}, equal weights
std::shared_ptr<const SiteLaw> d2_random();               // two atoms, epsilon 0.1
std::shared_ptr<const SiteLaw> d2_analog();               // homogeneous, 0.4 on +e1, 0.2 elsewhere
std::shared_ptr<const SiteLaw> d3_test();                 // homogeneous, 0.5 on +e1, 0.1 elsewhere
std::shared_ptr<const SiteLaw> d5_test();                 // homogeneous, 0.28 on +e1, 0.08 elsewhere
std::shared_ptr<const SiteLaw> d5_random();               // two atoms, epsilon 0.04

struct Entry {
  std::string name;
  std::shared_ptr<const SiteLaw> law;
  int horizon;  // enumeration horizon used by the oracle check
};

// Every law above with a feasible exact-enumeration horizon.
std::vector<Entry> all();

std::shared_ptr<const SiteLaw> by_name(const std::string& name);

}  // namespace rwre::fleet
