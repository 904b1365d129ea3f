#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include "json.hpp"
#include "rl/agent.hpp"

namespace dnim::rl {

// Flat config object; every key is optional and unknown keys are rejected
// with their name. t_act may be seconds or a duration string ("1mo").
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& cfg);

nlohmann::json to_json(const QNetworkConfig& cfg);
QNetworkConfig network_config_from_json(const nlohmann::json& j);

struct Model {
    QNetworkConfig network;
    nn::ParameterSet params;
};

// Binary checkpoint at `path` plus a JSON manifest at `path + ".json"`
// holding the network config and the tensor list.
void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

// CSV `episode,return,loss,epsilon`; loss is empty for episodes without a
// gradient step.
void write_training_log(std::ostream& out, std::span<const EpisodeLog> log);

}  // namespace dnim::rl
