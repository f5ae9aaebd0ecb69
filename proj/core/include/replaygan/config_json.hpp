#pragma once

#include <nlohmann/json.hpp>

#include "replaygan/cohortsim.hpp"
#include "replaygan/rl_utility.hpp"
#include "replaygan/schema.hpp"
#include "replaygan/trainer.hpp"

namespace replaygan {

// JSON forms of the documented config-file and checkpoint-header types.

nlohmann::json schema_to_json(const VariableSchema& schema);
VariableSchema schema_from_json(const nlohmann::json& j);

nlohmann::json sim_config_to_json(const SimConfig& config);
SimConfig sim_config_from_json(const nlohmann::json& j);

nlohmann::json train_config_to_json(const train::TrainConfig& config);
train::TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json rl_spec_to_json(const rlutil::RLSpec& spec);
rlutil::RLSpec rl_spec_from_json(const nlohmann::json& j);

}  // namespace replaygan
