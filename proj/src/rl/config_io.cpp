#include "rl/config_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <limits>

#include "common/duration.hpp"
#include "common/error.hpp"

namespace dnim::rl {

using nlohmann::json;

namespace {

template <class T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw UsageError(std::string("config key '") + key + "' has the wrong type");
    }
}

double read_real_or_inf(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    throw UsageError(std::string("config key '") + key + "' must be a number or \"inf\"");
}

json real_or_inf(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

const std::vector<std::string> kEmbeddingKeys = {"dim",        "time_dim",     "layers",     "heads",
                                                 "batch_size", "neighbor_cap", "mlp_hidden", "raw_delta_time"};
const std::vector<std::string> kNetworkKeys = {"estimator_hidden", "reduced"};
const std::vector<std::string> kAgentKeys = {
    "k",           "episodes",        "gamma",           "learning_rate",    "minibatch",
    "target_sync", "eps_start",       "eps_min",         "eps_decay",        "reward_threshold",
    "buffer_capacity", "reward_reps", "adam",            "normalize_reward", "rng_seed",
    "threads",     "grad_clip"};
const std::vector<std::string> kDiffusionKeys = {"mu", "t_act"};

void reject_unknown(const json& j, std::initializer_list<const std::vector<std::string>*> groups) {
    if (!j.is_object()) throw UsageError("config must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        bool known = false;
        for (const auto* g : groups) known = known || std::find(g->begin(), g->end(), key) != g->end();
        if (!known) throw UsageError("unknown config key '" + key + "'");
    }
}

void read_network(const json& j, QNetworkConfig& n) {
    auto& e = n.embedding;
    read(j, "dim", e.dim);
    read(j, "time_dim", e.time_dim);
    read(j, "layers", e.layers);
    read(j, "heads", e.heads);
    read(j, "batch_size", e.batch_size);
    read(j, "neighbor_cap", e.neighbor_cap);
    read(j, "mlp_hidden", e.mlp_hidden);
    read(j, "raw_delta_time", e.raw_delta_time);
    read(j, "estimator_hidden", n.estimator_hidden);
    read(j, "reduced", n.reduced);
    e.validate();
}

}  // namespace

TrainConfig train_config_from_json(const json& j) {
    reject_unknown(j, {&kEmbeddingKeys, &kNetworkKeys, &kAgentKeys, &kDiffusionKeys});
    TrainConfig cfg;
    auto& a = cfg.agent;
    read(j, "k", a.k);
    read(j, "episodes", a.episodes);
    read(j, "gamma", a.gamma);
    read(j, "learning_rate", a.learning_rate);
    read(j, "minibatch", a.minibatch);
    read(j, "target_sync", a.target_sync);
    read(j, "eps_start", a.eps_start);
    read(j, "eps_min", a.eps_min);
    read(j, "eps_decay", a.eps_decay);
    a.reward_threshold = read_real_or_inf(j, "reward_threshold", a.reward_threshold);
    read(j, "buffer_capacity", a.buffer_capacity);
    read(j, "reward_reps", a.reward_reps);
    read(j, "adam", a.adam);
    read(j, "grad_clip", a.grad_clip);
    read(j, "normalize_reward", a.normalize_reward);
    read(j, "rng_seed", a.rng_seed);
    read(j, "threads", a.threads);
    read_network(j, cfg.network);
    read(j, "mu", cfg.diffusion.mu);
    if (j.contains("t_act")) {
        const auto& t = j.at("t_act");
        if (t.is_number_integer())
            cfg.diffusion.t_act = t.get<std::int64_t>();
        else if (t.is_string())
            cfg.diffusion.t_act = parse_duration(t.get<std::string>());
        else
            throw UsageError("config key 't_act' must be seconds or a duration string");
    }
    a.validate();
    sis::validate(cfg.diffusion);
    cfg.diffusion.rng_seed = a.rng_seed;
    return cfg;
}

json to_json(const QNetworkConfig& n) {
    const auto& e = n.embedding;
    return json{{"dim", e.dim},
                {"time_dim", e.time_dim},
                {"layers", e.layers},
                {"heads", e.heads},
                {"batch_size", e.batch_size},
                {"neighbor_cap", e.neighbor_cap},
                {"mlp_hidden", e.mlp_hidden},
                {"raw_delta_time", e.raw_delta_time},
                {"estimator_hidden", n.estimator_hidden},
                {"reduced", n.reduced}};
}

QNetworkConfig network_config_from_json(const json& j) {
    reject_unknown(j, {&kEmbeddingKeys, &kNetworkKeys});
    QNetworkConfig n;
    read_network(j, n);
    return n;
}

json to_json(const TrainConfig& cfg) {
    json j = to_json(cfg.network);
    const auto& a = cfg.agent;
    j["k"] = a.k;
    j["episodes"] = a.episodes;
    j["gamma"] = a.gamma;
    j["learning_rate"] = a.learning_rate;
    j["minibatch"] = a.minibatch;
    j["target_sync"] = a.target_sync;
    j["eps_start"] = a.eps_start;
    j["eps_min"] = a.eps_min;
    j["eps_decay"] = a.eps_decay;
    j["reward_threshold"] = real_or_inf(a.reward_threshold);
    j["buffer_capacity"] = a.buffer_capacity;
    j["reward_reps"] = a.reward_reps;
    j["adam"] = a.adam;
    j["grad_clip"] = a.grad_clip;
    j["normalize_reward"] = a.normalize_reward;
    j["rng_seed"] = a.rng_seed;
    j["threads"] = a.threads;
    j["mu"] = cfg.diffusion.mu;
    j["t_act"] = cfg.diffusion.t_act;
    return j;
}

void save_model(const std::string& path, const Model& model) {
    nn::save_checkpoint(path, model.params);
    json tensors = json::array();
    for (std::size_t i = 0; i < model.params.size(); ++i) {
        const auto& t = model.params.at(i)->value;
        tensors.push_back({{"name", model.params.name(i)}, {"shape", {t.rows(), t.cols()}}});
    }
    json manifest{{"format", "dnim-checkpoint"}, {"version", 1}, {"network", to_json(model.network)}, {"tensors", tensors}};
    std::ofstream out(path + ".json", std::ios::trunc);
    if (!out) throw DataError("cannot write " + path + ".json");
    out << manifest.dump(2) << '\n';
}

Model load_model(const std::string& path) {
    std::ifstream in(path + ".json");
    if (!in) throw DataError("missing checkpoint manifest " + path + ".json");
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw DataError("invalid checkpoint manifest: " + std::string(e.what()));
    }
    Model model{network_config_from_json(manifest.at("network")), nn::load_checkpoint(path)};
    const auto expected = init_q_network(model.network, 0);
    if (expected.size() != model.params.size()) throw DataError("checkpoint does not match its manifest network");
    for (std::size_t i = 0; i < expected.size(); ++i)
        if (expected.name(i) != model.params.name(i) || !expected.at(i)->value.same_shape(model.params.at(i)->value))
            throw DataError("checkpoint tensor " + model.params.name(i) + " does not match the manifest network");
    return model;
}

void write_training_log(std::ostream& out, std::span<const EpisodeLog> log) {
    char buf[128];
    out << "episode,return,loss,epsilon\n";
    for (const auto& e : log) {
        if (e.loss)
            std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g\n", e.episode, e.episode_return, *e.loss, e.epsilon);
        else
            std::snprintf(buf, sizeof buf, "%zu,%.10g,,%.10g\n", e.episode, e.episode_return, e.epsilon);
        out << buf;
    }
}

}  // namespace dnim::rl
