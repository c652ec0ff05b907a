#include "rwre/lattice.hpp"

namespace rwre {

std::string to_string(const Site& s, int dim) {
  std::string out = "(";
  for (int i = 0; i < dim; ++i) {
    if (i > 0) out += ',';
    out += std::to_string(s.c[i]);
  }
  return out + ")";
}

}  // namespace rwre
