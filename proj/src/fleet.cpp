#include "rwre/fleet.hpp"

#include "rwre/error.hpp"

namespace rwre::fleet {

namespace {

std::shared_ptr<const SiteLaw> homogeneous(int d, double forward, double other) {
  std::vector<double> p(2 * d, other);
  p[0] = forward;
  return std::make_shared<const SiteLaw>(make_law(d, other, {{1.0, p}}));
}

}  // namespace

std::shared_ptr<const SiteLaw> deterministic(int d) {
  std::vector<double> p(2 * d, 0.0);
  p[0] = 1.0;
  return std::make_shared<const SiteLaw>(make_law(d, 0.0, {{1.0, p}}));
}

std::shared_ptr<const SiteLaw> d1_biased() {
  return std::make_shared<const SiteLaw>(make_law(1, 0.4, {{1.0, {0.6, 0.4}}}));
}

std::shared_ptr<const SiteLaw> d1_two_atom() {
  return std::make_shared<const SiteLaw>(make_law(1, 0.1, {{0.5, {0.7, 0.3}}, {0.5, {0.9, 0.1}}}));
}

std::shared_ptr<const SiteLaw> d2_random() {
  return std::make_shared<const SiteLaw>(
      make_law(2, 0.1, {{0.5, {0.5, 0.1, 0.2, 0.2}}, {0.5, {0.3, 0.2, 0.25, 0.25}}}));
}

std::shared_ptr<const SiteLaw> d2_analog() { return homogeneous(2, 0.4, 0.2); }
std::shared_ptr<const SiteLaw> d3_test() { return homogeneous(3, 0.5, 0.1); }
std::shared_ptr<const SiteLaw> d5_test() { return homogeneous(5, 0.28, 0.08); }

std::shared_ptr<const SiteLaw> d5_random() {
  std::vector<double> a(10, 0.075);
  a[0] = 0.36;
  a[1] = 0.04;
  std::vector<double> b(10, 0.085);
  b[0] = 0.20;
  b[1] = 0.12;
  return std::make_shared<const SiteLaw>(make_law(5, 0.04, {{0.5, a}, {0.5, b}}));
}

std::vector<Entry> all() {
  return {
      {"deterministic", deterministic(1), 10}, {"d1_biased", d1_biased(), 10}, {"d1_two_atom", d1_two_atom(), 10},
      {"d2_random", d2_random(), 8},           {"d2_analog", d2_analog(), 8},  {"d3_test", d3_test(), 6},
      {"d5_test", d5_test(), 5},               {"d5_random", d5_random(), 5},
  };
}

std::shared_ptr<const SiteLaw> by_name(const std::string& name) {
  for (auto& e : all()) {
    if (e.name == name) return e.law;
  }
  throw LabError(ErrorKind::InvalidArgument, "unknown fleet law: " + name);
}

}  // namespace rwre::fleet
