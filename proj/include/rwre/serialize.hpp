#pragma once

#include <nlohmann/json.hpp>

#include "rwre/env_model.hpp"
#include "rwre/lattice.hpp"
#include "rwre/regeneration.hpp"

namespace rwre {

nlohmann::json law_to_json(const SiteLaw& law);
SiteLaw law_from_json(const nlohmann::json& j);

nlohmann::json site_to_json(const Site& s, int dim);
Site site_from_json(const nlohmann::json& j, int dim);

nlohmann::json slab_to_json(const Slab& slab);
Slab slab_from_json(const nlohmann::json& j, int dim);

}  // namespace rwre
