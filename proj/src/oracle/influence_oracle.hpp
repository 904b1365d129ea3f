#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sis/social_sis.hpp"

namespace dnim::oracle {

using graph::NodeId;
using graph::TemporalGraph;
using graph::Timestamp;
using sis::DiffusionParams;
using sis::DiffusionStats;

inline constexpr std::size_t kEvaluationReps = 2000;
inline constexpr std::size_t kRewardReps = 100;

struct InfluenceEstimate {
    double mean = 0.0;     // seconds
    double std_dev = 0.0;  // sample std of per-replication influence; 0 for one replication
    std::size_t replications = 0;
    DiffusionStats stats;  // summed over replications
};

struct GainEstimate {
    double mean = 0.0;
    double std_dev = 0.0;  // of per-replication differences
    std::size_t replications = 0;
};

// Seed of replication r; independent of thread count and scheduling.
std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t rep);

// Per-replication total active seconds, index r computed with
// replication_seed(p.rng_seed, r). threads == 0 uses hardware concurrency.
std::vector<Timestamp> replicate_totals(const TemporalGraph& g, std::span<const NodeId> seeds,
                                        const DiffusionParams& p, std::size_t reps, std::size_t threads = 1,
                                        DiffusionStats* stats = nullptr);

InfluenceEstimate estimate_influence(const TemporalGraph& g, std::span<const NodeId> seeds,
                                     const DiffusionParams& p, std::size_t reps, std::size_t threads = 1);

// Active-node count per window, averaged over replications.
std::vector<double> mean_window_activity(const TemporalGraph& g, std::span<const NodeId> seeds,
                                         const DiffusionParams& p, std::size_t reps, std::size_t n_windows,
                                         std::size_t threads = 1);

// I(base + v) - I(base). With use_crn both arms share replication streams;
// otherwise the augmented arm draws from an independent base seed.
GainEstimate marginal_gain(const TemporalGraph& g, std::span<const NodeId> base, NodeId v,
                           const DiffusionParams& p, std::size_t reps, bool use_crn = true,
                           std::size_t threads = 1);

// Run fn(i) for i in [0, n) over `threads` workers. fn must only write to
// slots owned by i.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace dnim::oracle
