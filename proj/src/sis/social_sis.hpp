#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "graph/temporal_graph.hpp"

namespace dnim::sis {

using graph::NodeId;
using graph::TemporalGraph;
using graph::Timestamp;

inline constexpr Timestamp kSecondsPerMonth = 30 * 24 * 3600;

struct DiffusionParams {
    double mu = 0.5;
    Timestamp t_act = kSecondsPerMonth;
    std::uint64_t rng_seed = 0;
};

void validate(const DiffusionParams& p);

// Half-open [start, end).
struct Interval {
    Timestamp start;
    Timestamp end;

    Timestamp length() const noexcept { return end - start; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

class ActivationLog {
public:
    ActivationLog() = default;
    ActivationLog(std::size_t n_nodes, Timestamp t_start, Timestamp t_end);

    std::size_t n_nodes() const noexcept { return per_node_.size(); }
    Timestamp t_start() const noexcept { return t_start_; }
    Timestamp t_end() const noexcept { return t_end_; }
    std::span<const Interval> intervals(NodeId v) const { return per_node_.at(v); }

    void append(NodeId v, Interval iv) { per_node_[v].push_back(iv); }
    Timestamp total_active_time() const noexcept;

    // Sorted, disjoint, non-empty intervals inside [t_start, t_end).
    bool well_formed() const noexcept;

    friend bool operator==(const ActivationLog&, const ActivationLog&) = default;

private:
    std::vector<std::vector<Interval>> per_node_;
    Timestamp t_start_ = 0;
    Timestamp t_end_ = 0;
};

struct DiffusionStats {
    std::uint64_t attempts = 0;
    std::uint64_t successes = 0;
    std::uint64_t successes_on_active = 0;

    DiffusionStats& operator+=(const DiffusionStats& o) noexcept {
        attempts += o.attempts;
        successes += o.successes;
        successes_on_active += o.successes_on_active;
        return *this;
    }
    friend bool operator==(const DiffusionStats&, const DiffusionStats&) = default;
};

struct DiffusionResult {
    ActivationLog log;
    DiffusionStats stats;
};

// Summary of one run without materializing the log.
struct DiffusionTotals {
    Timestamp active_time = 0;  // sum of interval lengths over all nodes
    DiffusionStats stats;
};

// One Social-SIS run. Seeds are active over the whole horizon; every edge
// whose source is active at its timestamp makes one activation attempt, and a
// success appends t_act seconds of activity to the target after its current
// last interval. The coin for edge i is counter_uniform(rng_seed, i).
DiffusionResult run_diffusion(const TemporalGraph& g, std::span<const NodeId> seeds, const DiffusionParams& p);

// Same process, accumulating totals only. `scratch` must have n_nodes entries
// and is overwritten.
DiffusionTotals run_diffusion_totals(const TemporalGraph& g, std::span<const NodeId> seeds,
                                     const DiffusionParams& p, std::vector<Timestamp>& scratch);

// Mean active seconds per node.
double influence(const ActivationLog& log, std::size_t n_nodes);

// Percentage of successful activations whose target was already active.
double fraction_active_activations(const DiffusionStats& stats);

// Active-node count for each of n_windows equal windows over [t_start, t_end).
std::vector<std::size_t> window_activity(const ActivationLog& log, std::size_t n_windows);

// `node,start,end` rows in node order; node printed as original_ids[v] when
// given, else the dense id.
void write_log_csv(std::ostream& out, const ActivationLog& log, std::span<const std::int64_t> original_ids = {});

}  // namespace dnim::sis
