#pragma once

#include <string>

#include "json.hpp"
#include "rhsim/fault/profile.hpp"

namespace rhsim::fault {

inline constexpr int kProfileSchemaVersion = 1;

nlohmann::json spec_to_json(const ProfileSpec& spec);
/// Missing keys keep their defaults; unknown keys and bad types raise
/// ConfigError.
ProfileSpec spec_from_json(const nlohmann::json& j);

/// Cells are optional in the file: without them the profile is regenerated
/// from its spec, which is deterministic.
nlohmann::json profile_to_json(const VulnerabilityProfile& profile, bool include_cells);
VulnerabilityProfile profile_from_json(const nlohmann::json& j);

void save_profile(const std::string& path, const VulnerabilityProfile& profile,
                  bool include_cells = false);
VulnerabilityProfile load_profile(const std::string& path);

}  // namespace rhsim::fault
