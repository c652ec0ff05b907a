#include "rwre/serialize.hpp"

#include <string>

#include "rwre/error.hpp"

namespace rwre {

using nlohmann::json;

json law_to_json(const SiteLaw& law) {
  json atoms = json::array();
  for (const auto& a : law.atoms()) {
    atoms.push_back({{"weight", a.weight}, {"probs", std::vector<double>(a.kernel.probs().begin(), a.kernel.probs().end())}});
  }
  return {{"dimension", law.dim()}, {"epsilon", law.epsilon()}, {"atoms", atoms}};
}

SiteLaw law_from_json(const json& j) {
  const int d = j.at("dimension").get<int>();
  const double eps = j.at("epsilon").get<double>();
  std::vector<std::pair<double, std::vector<double>>> atoms;
  for (const auto& a : j.at("atoms")) {
    atoms.emplace_back(a.at("weight").get<double>(), a.at("probs").get<std::vector<double>>());
  }
  return make_law(d, eps, atoms);
}

json site_to_json(const Site& s, int dim) {
  return std::vector<std::int32_t>(s.c.begin(), s.c.begin() + dim);
}

Site site_from_json(const json& j, int dim) {
  const auto v = j.get<std::vector<std::int32_t>>();
  if (static_cast<int>(v.size()) != dim) {
    throw LabError(ErrorKind::InvalidArgument, "site has " + std::to_string(v.size()) + " coordinates, expected " +
                                                   std::to_string(dim));
  }
  Site s;
  for (int i = 0; i < dim; ++i) s.c[i] = v[i];
  return s;
}

namespace {

constexpr char kHex[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  throw LabError(ErrorKind::InvalidArgument, std::string("bad move character '") + c + "'");
}

}  // namespace

json slab_to_json(const Slab& slab) {
  std::string moves;
  moves.reserve(slab.moves.size());
  for (Move m : slab.moves) moves.push_back(kHex[m]);
  json kernels = json::array();
  for (const auto& [site, atom] : slab.onpath) {
    json row = site_to_json(site, slab.dim);
    row.push_back(atom);
    kernels.push_back(std::move(row));
  }
  return {{"L", slab.width}, {"u", slab.duration()}, {"strip_seed", slab.strip_seed}, {"moves", moves},
          {"kernels", kernels}};
}

Slab slab_from_json(const json& j, int dim) {
  Slab s;
  s.dim = dim;
  s.width = j.at("L").get<std::int64_t>();
  s.strip_seed = j.at("strip_seed").get<std::uint64_t>();
  for (char c : j.at("moves").get<std::string>()) {
    const int m = hex_value(c);
    if (m >= 2 * dim) throw LabError(ErrorKind::InvalidArgument, "move index out of range");
    s.moves.push_back(static_cast<Move>(m));
  }
  if (s.duration() != j.at("u").get<std::int64_t>()) throw LabError(ErrorKind::InvalidArgument, "u != move count");
  for (const auto& row : j.at("kernels")) {
    if (row.size() != static_cast<std::size_t>(dim + 1)) throw LabError(ErrorKind::InvalidArgument, "bad kernel row");
    Site z;
    for (int i = 0; i < dim; ++i) z.c[i] = row[i].get<std::int32_t>();
    s.onpath.emplace_back(z, row[dim].get<std::uint32_t>());
  }
  return s;
}

}  // namespace rwre
