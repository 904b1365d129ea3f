#include "sis/social_sis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace dnim::sis {

namespace {

constexpr Timestamp kSeedMark = std::numeric_limits<Timestamp>::max();

// last_end[v] is the end of v's latest interval (t_start if none) or kSeedMark.
// Because edges arrive in time order and each new interval starts at
// max(t, last_end), a node's intervals from its latest idle gap onwards are
// contiguous; hence v is active at t iff t < last_end[v].
template <class OnInterval>
DiffusionStats simulate(const TemporalGraph& g, std::span<const NodeId> seeds, const DiffusionParams& p,
                        std::vector<Timestamp>& last_end, OnInterval&& on_interval) {
    validate(p);
    const Timestamp t_end = g.t_end();
    last_end.assign(g.n_nodes(), g.t_start());
    for (NodeId s : seeds) {
        if (s >= g.n_nodes()) throw UsageError("seed id " + std::to_string(s) + " out of range");
        last_end[s] = kSeedMark;
    }

    DiffusionStats stats;
    const auto edges = g.edges();
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto& e = edges[i];
        if (!(e.timestamp < last_end[e.src])) continue;
        ++stats.attempts;
        const double u = counter_uniform(p.rng_seed, i);
        Timestamp& target_end = last_end[e.dst];
        if (target_end == kSeedMark || !(u < p.mu)) continue;
        ++stats.successes;
        if (e.timestamp < target_end) ++stats.successes_on_active;
        const Timestamp start = std::max(e.timestamp, target_end);
        const Timestamp end = start >= t_end ? start : std::min(t_end, start + p.t_act);
        if (end > start) {
            on_interval(e.dst, Interval{start, end});
            target_end = end;
        }
    }
    return stats;
}

}  // namespace

void validate(const DiffusionParams& p) {
    if (!(p.mu >= 0.0 && p.mu <= 1.0)) throw UsageError("mu must lie in [0, 1]");
    if (p.t_act <= 0) throw UsageError("t_act must be positive");
}

ActivationLog::ActivationLog(std::size_t n_nodes, Timestamp t_start, Timestamp t_end)
    : per_node_(n_nodes), t_start_(t_start), t_end_(t_end) {}

Timestamp ActivationLog::total_active_time() const noexcept {
    Timestamp total = 0;
    for (const auto& ivs : per_node_)
        for (const auto& iv : ivs) total += iv.length();
    return total;
}

bool ActivationLog::well_formed() const noexcept {
    for (const auto& ivs : per_node_) {
        Timestamp prev_end = t_start_;
        for (const auto& iv : ivs) {
            if (iv.start < prev_end || iv.start >= iv.end || iv.end > t_end_) return false;
            prev_end = iv.end;
        }
    }
    return true;
}

DiffusionResult run_diffusion(const TemporalGraph& g, std::span<const NodeId> seeds, const DiffusionParams& p) {
    DiffusionResult result{ActivationLog(g.n_nodes(), g.t_start(), g.t_end()), {}};
    std::vector<Timestamp> last_end;
    result.stats = simulate(g, seeds, p, last_end, [&](NodeId v, Interval iv) { result.log.append(v, iv); });
    if (g.t_end() > g.t_start())
        for (NodeId v = 0; v < g.n_nodes(); ++v)
            if (last_end[v] == kSeedMark && result.log.intervals(v).empty())
                result.log.append(v, Interval{g.t_start(), g.t_end()});
    return result;
}

DiffusionTotals run_diffusion_totals(const TemporalGraph& g, std::span<const NodeId> seeds,
                                     const DiffusionParams& p, std::vector<Timestamp>& scratch) {
    DiffusionTotals totals;
    totals.stats = simulate(g, seeds, p, scratch, [&](NodeId, Interval iv) { totals.active_time += iv.length(); });
    const Timestamp span = g.t_end() - g.t_start();
    for (Timestamp v : scratch)
        if (v == kSeedMark) totals.active_time += span;
    return totals;
}

double influence(const ActivationLog& log, std::size_t n_nodes) {
    if (n_nodes == 0) return 0.0;
    return static_cast<double>(log.total_active_time()) / static_cast<double>(n_nodes);
}

double fraction_active_activations(const DiffusionStats& stats) {
    if (stats.successes == 0) return 0.0;
    return 100.0 * static_cast<double>(stats.successes_on_active) / static_cast<double>(stats.successes);
}

std::vector<std::size_t> window_activity(const ActivationLog& log, std::size_t n_windows) {
    if (n_windows == 0) throw UsageError("n_windows must be at least 1");
    std::vector<std::size_t> counts(n_windows, 0);
    const Timestamp t0 = log.t_start();
    const __int128 span = log.t_end() - t0;
    const __int128 n = static_cast<__int128>(n_windows);
    if (span <= 0) return counts;
    // Window w is [t0 + w*span/n, t0 + (w+1)*span/n); compared exactly after
    // scaling by n.
    std::vector<char> hit(n_windows);
    for (NodeId v = 0; v < log.n_nodes(); ++v) {
        const auto ivs = log.intervals(v);
        if (ivs.empty()) continue;
        std::fill(hit.begin(), hit.end(), 0);
        for (const auto& iv : ivs) {
            const __int128 s = static_cast<__int128>(iv.start - t0) * n;
            const __int128 e = static_cast<__int128>(iv.end - t0) * n;
            // first window with (w+1)*span > s, last window with w*span < e
            std::size_t first = static_cast<std::size_t>(s / span);
            std::size_t last = static_cast<std::size_t>((e - 1) / span);
            last = std::min(last, n_windows - 1);
            for (std::size_t w = first; w <= last; ++w) hit[w] = 1;
        }
        for (std::size_t w = 0; w < n_windows; ++w) counts[w] += hit[w];
    }
    return counts;
}

void write_log_csv(std::ostream& out, const ActivationLog& log, std::span<const std::int64_t> original_ids) {
    out << "node,start,end\n";
    for (NodeId v = 0; v < log.n_nodes(); ++v) {
        const std::int64_t id = original_ids.empty() ? static_cast<std::int64_t>(v) : original_ids[v];
        for (const auto& iv : log.intervals(v)) out << id << ',' << iv.start << ',' << iv.end << '\n';
    }
}

}  // namespace dnim::sis
