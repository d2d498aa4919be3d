#pragma once

#include <json.hpp>

#include "crm/stimulus/stimulus.hpp"

namespace crm::stimulus {

// One manifest trial record ({"record":"trial", ...}). trial_from_json throws
// StimulusError on illegal keywords or phases, nlohmann::json errors on
// missing fields.
[[nodiscard]] nlohmann::json trial_to_json(const TrialSpec& trial);
[[nodiscard]] TrialSpec trial_from_json(const nlohmann::json& record);

}  // namespace crm::stimulus
