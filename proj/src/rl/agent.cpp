#include "rl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "common/error.hpp"
#include "oracle/influence_oracle.hpp"

namespace dnim::rl {

namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kActionStream = 2;
constexpr std::uint64_t kSampleStream = 3;
constexpr std::uint64_t kRewardStream = 4;

}  // namespace

void SeedState::add(NodeId v) {
    if (bits_.at(v)) throw UsageError("node " + std::to_string(v) + " already in the seed set");
    bits_[v] = 1;
    ++count_;
}

SeedState SeedState::with(NodeId v) const {
    SeedState next = *this;
    next.add(v);
    return next;
}

std::vector<NodeId> SeedState::members() const {
    std::vector<NodeId> out;
    out.reserve(count_);
    for (NodeId v = 0; v < bits_.size(); ++v)
        if (bits_[v]) out.push_back(v);
    return out;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw UsageError("replay buffer capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back(std::move(t));
}

std::vector<Transition> ReplayBuffer::sample(std::size_t b, SplitMix64& rng) const {
    if (b > items_.size()) throw UsageError("minibatch larger than replay buffer");
    std::vector<std::size_t> idx(items_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::vector<Transition> out;
    out.reserve(b);
    for (std::size_t i = 0; i < b; ++i) {
        std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
        out.push_back(items_[idx[i]]);
    }
    return out;
}

nn::ParameterSet init_q_network(const QNetworkConfig& cfg, std::uint64_t seed) {
    SplitMix64 rng(seed);
    nn::ParameterSet params;
    tgn::init_embedding_params(params, cfg.embedding, rng);
    if (!cfg.reduced) {
        const std::size_t d = cfg.embedding.dim;
        const std::size_t hidden = cfg.estimator_hidden == 0 ? d : cfg.estimator_hidden;
        nn::init_mlp(params, "mlp1", d, hidden, d, rng);
        nn::init_mlp(params, "mlp2", d, hidden, d, rng);
    }
    return params;
}

nn::Var column_scores(const nn::Var& z, const nn::ParameterSet& params, const QNetworkConfig& cfg) {
    if (cfg.reduced) return nn::sigmoid_gram_colsum(z, z);
    return nn::sigmoid_gram_colsum(nn::mlp_forward(z, params, "mlp1"), nn::mlp_forward(z, params, "mlp2"));
}

nn::Var node_scores(const TemporalGraph& g, const nn::ParameterSet& params, const QNetworkConfig& cfg) {
    return column_scores(tgn::embed(g, params, cfg.embedding), params, cfg);
}

QValues q_values(const nn::Tensor& scores, const SeedState& state, std::size_t k) {
    if (scores.rows() != state.n_nodes() || scores.cols() != 1) throw UsageError("q_values: score shape mismatch");
    if (state.size() >= k) throw UsageError("q_values: seed set already holds k nodes");
    double base = 0.0;
    for (NodeId v = 0; v < state.n_nodes(); ++v)
        if (state.contains(v)) base += scores[v];
    QValues q;
    for (NodeId v = 0; v < state.n_nodes(); ++v) {
        if (state.contains(v)) continue;
        q.nodes.push_back(v);
        q.values.push_back(base + scores[v]);
    }
    if (q.nodes.empty()) throw UsageError("q_values: no candidate nodes");
    return q;
}

QValues q_values(const nn::ParameterSet& params, const QNetworkConfig& cfg, const nn::Var& z, const SeedState& state,
                 std::size_t k) {
    return q_values(column_scores(z, params, cfg)->value, state, k);
}

NodeId select_action(const QValues& q, double eps, SplitMix64& rng) {
    if (q.nodes.empty()) throw UsageError("select_action: no candidates");
    if (rng.uniform() < eps) return q.nodes[rng.below(q.nodes.size())];
    std::size_t best = 0;
    for (std::size_t i = 1; i < q.nodes.size(); ++i)
        if (q.values[i] > q.values[best]) best = i;  // strict: earlier (lower id) wins ties
    return q.nodes[best];
}

nn::Var compute_loss(std::span<const Transition> batch, const nn::Var& online_scores, const nn::Tensor& target_scores,
                     double gamma, double reward_scale) {
    if (batch.empty()) throw UsageError("compute_loss: empty batch");
    const nn::Tensor& online = online_scores->value;
    const std::size_t n = online.rows();
    if (online.cols() != 1 || !target_scores.same_shape(online)) throw UsageError("compute_loss: score shape mismatch");

    nn::Tensor indicator(batch.size(), n);
    nn::Tensor targets(batch.size(), 1);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& t = batch[i];
        if (t.next_state.n_nodes() != n) throw UsageError("compute_loss: transition size does not match graph");
        double value = 0.0;  // target-network value of the next state's bootstrap action
        std::optional<NodeId> best;
        for (NodeId v = 0; v < n; ++v) {
            if (t.next_state.contains(v)) {
                indicator(i, v) = 1.0;
                value += target_scores[v];
            } else if (!best || online[v] > online[*best]) {
                best = v;
            }
        }
        double y = t.reward * reward_scale;
        if (!t.terminal && gamma != 0.0 && best) y += gamma * (value + target_scores[*best]);
        targets[i] = y;
    }
    auto predicted = nn::matmul(nn::constant(std::move(indicator)), online_scores);
    return nn::mean(nn::square(nn::sub(predicted, nn::constant(std::move(targets)))));
}

void AgentConfig::validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw UsageError("gamma must lie in [0, 1]");
    if (!(eps_min > 0.0 && eps_min <= 1.0)) throw UsageError("eps_min must lie in (0, 1]");
    if (!(eps_start >= 0.0 && eps_start <= 1.0)) throw UsageError("eps_start must lie in [0, 1]");
    if (!(eps_decay > 0.0 && eps_decay <= 1.0)) throw UsageError("eps_decay must lie in (0, 1]");
    if (k == 0) throw UsageError("k must be positive");
    if (minibatch == 0) throw UsageError("minibatch must be positive");
    if (target_sync == 0) throw UsageError("target_sync must be positive");
    if (buffer_capacity == 0) throw UsageError("buffer_capacity must be positive");
    if (reward_reps == 0) throw UsageError("reward_reps must be positive");
    if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be positive");
    if (!(grad_clip >= 0.0)) throw UsageError("grad_clip must be non-negative");
}

double reward_scale(const TemporalGraph& g, const AgentConfig& cfg) {
    if (!cfg.normalize_reward) return 1.0;
    const double span = g.duration() > 0 ? static_cast<double>(g.duration()) : 1.0;
    return static_cast<double>(g.n_nodes()) / span;
}

TrainResult train(const TemporalGraph& g, const TrainConfig& cfg,
                  const std::function<void(const TrainingProbe&)>& observer) {
    return train_from(g, cfg, init_q_network(cfg.network, derive_seed(cfg.agent.rng_seed, kInitStream)), observer);
}

TrainResult train_from(const TemporalGraph& g, const TrainConfig& cfg, nn::ParameterSet initial,
                       const std::function<void(const TrainingProbe&)>& observer) {
    const AgentConfig& ac = cfg.agent;
    ac.validate();
    sis::validate(cfg.diffusion);
    if (ac.k > g.n_nodes()) throw UsageError("k exceeds node count");

    TrainResult result{std::move(initial), {}, 0};
    nn::ParameterSet& online = result.params;
    nn::ParameterSet target = online.clone();
    ReplayBuffer buffer(ac.buffer_capacity);
    std::unique_ptr<nn::Optimizer> optimizer;
    if (ac.adam)
        optimizer = std::make_unique<nn::Adam>(ac.learning_rate);
    else
        optimizer = std::make_unique<nn::Sgd>(ac.learning_rate);

    SplitMix64 action_rng(derive_seed(ac.rng_seed, kActionStream));
    SplitMix64 sample_rng(derive_seed(ac.rng_seed, kSampleStream));
    const std::uint64_t reward_root = derive_seed(ac.rng_seed, kRewardStream);
    const double scale = reward_scale(g, ac);
    const double reps_nodes = static_cast<double>(ac.reward_reps) * static_cast<double>(g.n_nodes());

    std::optional<nn::Tensor> cached_scores;
    double eps = ac.eps_start;

    for (std::size_t episode = 1; episode <= ac.episodes; ++episode) {
        if (!cached_scores) cached_scores = node_scores(g, online, cfg.network)->value;

        sis::DiffusionParams p = cfg.diffusion;
        p.rng_seed = derive_seed(reward_root, episode);
        SeedState state(g.n_nodes());
        std::int64_t prev_total = 0;  // summed active seconds of the current seed set; 0 for the empty set
        EpisodeLog entry{episode, 0.0, std::nullopt, eps};

        for (std::size_t step = 1; step <= ac.k; ++step) {
            const NodeId action = select_action(q_values(*cached_scores, state, ac.k), eps, action_rng);
            SeedState next = state.with(action);
            const auto seeds = next.members();
            const auto totals = oracle::replicate_totals(g, seeds, p, ac.reward_reps, ac.threads);
            const std::int64_t total = std::accumulate(totals.begin(), totals.end(), std::int64_t{0});
            const double reward = static_cast<double>(total - prev_total) / reps_nodes;
            prev_total = total;
            entry.episode_return += reward;
            if (reward > ac.reward_threshold)
                buffer.push(Transition{state, action, reward, next, step == ac.k});
            state = std::move(next);
        }

        if (buffer.size() >= ac.minibatch) {
            const auto batch = buffer.sample(ac.minibatch, sample_rng);
            online.zero_grad();
            auto online_scores = node_scores(g, online, cfg.network);
            const nn::Tensor target_scores = node_scores(g, target, cfg.network)->value;
            auto loss = compute_loss(batch, online_scores, target_scores, ac.gamma, scale);
            nn::backward(loss);
            if (ac.grad_clip > 0.0) nn::clip_grad_norm(online, ac.grad_clip);
            optimizer->step(online);
            online.zero_grad();
            entry.loss = loss->value[0];
            ++result.gradient_steps;
            cached_scores.reset();
        }

        eps = std::max(ac.eps_min, ac.eps_start * std::pow(ac.eps_decay, static_cast<double>(episode)));
        if (episode % ac.target_sync == 0) target.assign(online);
        result.log.push_back(entry);
        if (observer) observer(TrainingProbe{episode, online, target, buffer, eps, result.gradient_steps, result.log.back()});
    }
    return result;
}

std::vector<NodeId> select_seeds_by_policy(const TemporalGraph& g, const nn::ParameterSet& params,
                                           const QNetworkConfig& cfg, std::size_t k) {
    if (k > g.n_nodes()) throw UsageError("k exceeds node count");
    const nn::Tensor scores = node_scores(g, params, cfg)->value;
    SeedState state(g.n_nodes());
    SplitMix64 unused(0);
    std::vector<NodeId> seeds;
    while (seeds.size() < k) {
        const NodeId a = select_action(q_values(scores, state, k), 0.0, unused);
        state.add(a);
        seeds.push_back(a);
    }
    return seeds;
}

}  // namespace dnim::rl
