#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sis/social_sis.hpp"
#include "tgn/embedding.hpp"

namespace dnim::rl {

using graph::NodeId;
using graph::TemporalGraph;

// One-hot seed set over N nodes.
class SeedState {
public:
    explicit SeedState(std::size_t n_nodes = 0) : bits_(n_nodes, 0) {}

    std::size_t n_nodes() const noexcept { return bits_.size(); }
    std::size_t size() const noexcept { return count_; }
    bool contains(NodeId v) const { return bits_.at(v) != 0; }
    void add(NodeId v);
    SeedState with(NodeId v) const;
    std::vector<NodeId> members() const;
    std::span<const std::uint8_t> bits() const noexcept { return bits_; }

    friend bool operator==(const SeedState&, const SeedState&) = default;

private:
    std::vector<std::uint8_t> bits_;
    std::size_t count_ = 0;
};

struct Transition {
    SeedState state;
    NodeId action = 0;
    double reward = 0.0;  // seconds of influence gained
    SeedState next_state;
    bool terminal = false;
};

// Fixed-capacity FIFO of transitions.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const noexcept { return items_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    const Transition& at(std::size_t i) const { return items_.at(i); }
    // b distinct transitions, uniformly without replacement; requires b <= size().
    std::vector<Transition> sample(std::size_t b, SplitMix64& rng) const;

private:
    std::size_t capacity_;
    std::deque<Transition> items_;
};

struct QNetworkConfig {
    tgn::EmbeddingConfig embedding;
    std::size_t estimator_hidden = 0;  // hidden width of MLP1/MLP2; 0 = embedding dim
    bool reduced = false;              // ablation: M3 = sigmoid(z z^T), no MLP1/MLP2
};

nn::ParameterSet init_q_network(const QNetworkConfig& cfg, std::uint64_t seed);

// c (N x 1): column sums of M3 = sigmoid(MLP1(z) MLP2(z)^T), so that
// Q(S, a) = sum over j in S + {a} of c_j.
nn::Var column_scores(const nn::Var& z, const nn::ParameterSet& params, const QNetworkConfig& cfg);

// Embedding + estimator in one pass.
nn::Var node_scores(const TemporalGraph& g, const nn::ParameterSet& params, const QNetworkConfig& cfg);

struct QValues {
    std::vector<NodeId> nodes;  // candidates (not in the state), ascending
    std::vector<double> values;
};

// Q(state, a) for every a outside the state. Throws when the state already
// holds k nodes or no candidate remains.
QValues q_values(const nn::Tensor& scores, const SeedState& state, std::size_t k);
QValues q_values(const nn::ParameterSet& params, const QNetworkConfig& cfg, const nn::Var& z, const SeedState& state,
                 std::size_t k);

// Uniform candidate with probability eps, else argmax (ties to lowest id).
NodeId select_action(const QValues& q, double eps, SplitMix64& rng);

// Mean squared Double-DQN error. Targets use the online scores to pick the
// bootstrap action and target scores to value it; terminal transitions use
// the reward alone. Rewards are multiplied by reward_scale first.
nn::Var compute_loss(std::span<const Transition> batch, const nn::Var& online_scores, const nn::Tensor& target_scores,
                     double gamma, double reward_scale = 1.0);

struct AgentConfig {
    std::size_t k = 10;
    std::size_t episodes = 1000;
    double gamma = 0.95;
    double learning_rate = 0.001;
    std::size_t minibatch = 16;
    std::size_t target_sync = 20;  // episodes
    double eps_start = 1.0;
    double eps_min = 0.2;
    double eps_decay = 0.98;
    double reward_threshold = 0.0;  // seconds; store transitions with reward strictly above
    std::size_t buffer_capacity = 10000;
    std::size_t reward_reps = 100;
    bool adam = false;
    // Global gradient-norm cap applied before each step; 0 disables.
    double grad_clip = 10.0;
    // Regress Q on rewards expressed in node-horizons (seconds * N / horizon)
    // so targets share the range of sigmoid column sums.
    bool normalize_reward = true;
    std::uint64_t rng_seed = 0;
    std::size_t threads = 1;

    void validate() const;
};

struct TrainConfig {
    AgentConfig agent;
    QNetworkConfig network;
    sis::DiffusionParams diffusion;
};

struct EpisodeLog {
    std::size_t episode = 0;
    double episode_return = 0.0;  // seconds
    std::optional<double> loss;   // absent when no gradient step ran
    double epsilon = 0.0;         // value used during the episode
};

// State visible after each episode (for tests and progress reporting).
struct TrainingProbe {
    std::size_t episode;
    const nn::ParameterSet& online;
    const nn::ParameterSet& target;
    const ReplayBuffer& buffer;
    double next_epsilon;
    std::size_t gradient_steps;
    const EpisodeLog& entry;
};

struct TrainResult {
    nn::ParameterSet params;
    std::vector<EpisodeLog> log;
    std::size_t gradient_steps = 0;
};

double reward_scale(const TemporalGraph& g, const AgentConfig& cfg);

TrainResult train(const TemporalGraph& g, const TrainConfig& cfg,
                  const std::function<void(const TrainingProbe&)>& observer = {});

// Same as train but continues from the given initial parameters.
TrainResult train_from(const TemporalGraph& g, const TrainConfig& cfg, nn::ParameterSet initial,
                       const std::function<void(const TrainingProbe&)>& observer = {});

// eps = 0 rollout: repeatedly add the argmax-Q candidate until k nodes.
std::vector<NodeId> select_seeds_by_policy(const TemporalGraph& g, const nn::ParameterSet& params,
                                           const QNetworkConfig& cfg, std::size_t k);

}  // namespace dnim::rl
