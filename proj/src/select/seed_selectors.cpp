#include "select/seed_selectors.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <string>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace dnim::select {

namespace {

void check_k(const TemporalGraph& g, std::size_t k) {
    if (k > g.n_nodes())
        throw UsageError("k = " + std::to_string(k) + " exceeds node count " + std::to_string(g.n_nodes()));
}

// Sum over replications of total active seconds. Integer sums keep gain
// comparisons exact.
std::int64_t summed_total(const TemporalGraph& g, std::span<const NodeId> seeds, const DiffusionParams& p,
                          std::size_t reps) {
    const auto totals = oracle::replicate_totals(g, seeds, p, reps, 1);
    return std::accumulate(totals.begin(), totals.end(), std::int64_t{0});
}

struct Candidate {
    std::int64_t gain;
    NodeId node;
    std::size_t round;
};

struct Lower {
    bool operator()(const Candidate& a, const Candidate& b) const noexcept {
        if (a.gain != b.gain) return a.gain < b.gain;
        return a.node > b.node;
    }
};

}  // namespace

std::vector<NodeId> greedy_lazy(const TemporalGraph& g, std::size_t k, const DiffusionParams& p,
                                std::size_t reps, std::size_t threads) {
    check_k(g, k);
    std::vector<NodeId> seeds;
    if (k == 0) return seeds;
    const std::size_t n = g.n_nodes();

    std::int64_t base = summed_total(g, seeds, p, reps);
    std::vector<std::int64_t> first(n);
    oracle::parallel_for(n, threads, [&](std::size_t v) {
        const NodeId single[] = {static_cast<NodeId>(v)};
        first[v] = summed_total(g, single, p, reps) - base;
    });

    std::priority_queue<Candidate, std::vector<Candidate>, Lower> queue;
    for (NodeId v = 0; v < n; ++v) queue.push({first[v], v, 0});

    std::size_t round = 0;
    std::vector<NodeId> trial;
    while (seeds.size() < k) {
        Candidate top = queue.top();
        queue.pop();
        if (top.round == round) {
            seeds.push_back(top.node);
            base += top.gain;
            ++round;
            continue;
        }
        trial = seeds;
        trial.push_back(top.node);
        top.gain = summed_total(g, trial, p, reps) - base;
        top.round = round;
        queue.push(top);
    }
    return seeds;
}

std::vector<NodeId> degree_top_k(const TemporalGraph& g, std::size_t k) {
    check_k(g, k);
    const auto deg = g.out_degrees();
    std::vector<NodeId> order(g.n_nodes());
    std::iota(order.begin(), order.end(), NodeId{0});
    std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) { return deg[a] > deg[b]; });
    order.resize(k);
    return order;
}

std::vector<NodeId> random_k(const TemporalGraph& g, std::size_t k, std::uint64_t rng_seed) {
    check_k(g, k);
    std::vector<NodeId> pool(g.n_nodes());
    std::iota(pool.begin(), pool.end(), NodeId{0});
    SplitMix64 rng(derive_seed(rng_seed, 0x72616e64ULL));
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + rng.below(pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

}  // namespace dnim::select
