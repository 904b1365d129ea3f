#include "oracle/influence_oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace dnim::oracle {

namespace {

constexpr std::uint64_t kIndependentArmSalt = 0x5bd1e9955bd1e995ULL;

// Mean and sample std of exact per-replication values, accumulated in index
// order so the result does not depend on how replications were scheduled.
std::pair<double, double> moments(std::span<const Timestamp> totals, double scale) {
    const double n = static_cast<double>(totals.size());
    __int128 sum = 0;
    for (auto t : totals) sum += t;
    const double mean = static_cast<double>(sum) / n * scale;
    if (totals.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (auto t : totals) {
        const double d = static_cast<double>(t) * scale - mean;
        ss += d * d;
    }
    return {mean, std::sqrt(ss / (n - 1.0))};
}

}  // namespace

std::uint64_t replication_seed(std::uint64_t base_seed, std::size_t rep) { return derive_seed(base_seed, rep); }

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t w = 0; w < threads; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                        next = n;
                    }
                }
            });
    }
    if (failure) std::rethrow_exception(failure);
}

std::vector<Timestamp> replicate_totals(const TemporalGraph& g, std::span<const NodeId> seeds,
                                        const DiffusionParams& p, std::size_t reps, std::size_t threads,
                                        DiffusionStats* stats) {
    if (reps == 0) throw UsageError("replications must be at least 1");
    sis::validate(p);
    std::vector<Timestamp> totals(reps);
    std::vector<DiffusionStats> per_rep(stats ? reps : 0);
    const std::size_t workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    const std::size_t chunks = std::min(reps, workers * 4);
    parallel_for(chunks, workers, [&](std::size_t c) {
        std::vector<Timestamp> scratch(g.n_nodes());
        DiffusionParams rp = p;
        for (std::size_t r = c * reps / chunks; r < (c + 1) * reps / chunks; ++r) {
            rp.rng_seed = replication_seed(p.rng_seed, r);
            const auto t = sis::run_diffusion_totals(g, seeds, rp, scratch);
            totals[r] = t.active_time;
            if (stats) per_rep[r] = t.stats;
        }
    });
    if (stats) {
        *stats = {};
        for (const auto& s : per_rep) *stats += s;
    }
    return totals;
}

InfluenceEstimate estimate_influence(const TemporalGraph& g, std::span<const NodeId> seeds,
                                     const DiffusionParams& p, std::size_t reps, std::size_t threads) {
    InfluenceEstimate est;
    const auto totals = replicate_totals(g, seeds, p, reps, threads, &est.stats);
    std::tie(est.mean, est.std_dev) = moments(totals, 1.0 / static_cast<double>(g.n_nodes()));
    est.replications = reps;
    return est;
}

std::vector<double> mean_window_activity(const TemporalGraph& g, std::span<const NodeId> seeds,
                                         const DiffusionParams& p, std::size_t reps, std::size_t n_windows,
                                         std::size_t threads) {
    if (reps == 0) throw UsageError("replications must be at least 1");
    if (n_windows == 0) throw UsageError("n_windows must be at least 1");
    sis::validate(p);
    std::vector<std::vector<std::size_t>> counts(reps);
    parallel_for(reps, threads, [&](std::size_t r) {
        DiffusionParams rp = p;
        rp.rng_seed = replication_seed(p.rng_seed, r);
        counts[r] = sis::window_activity(sis::run_diffusion(g, seeds, rp).log, n_windows);
    });
    std::vector<double> mean(n_windows, 0.0);
    for (std::size_t w = 0; w < n_windows; ++w) {
        std::uint64_t total = 0;
        for (const auto& c : counts) total += c[w];
        mean[w] = static_cast<double>(total) / static_cast<double>(reps);
    }
    return mean;
}

GainEstimate marginal_gain(const TemporalGraph& g, std::span<const NodeId> base, NodeId v,
                           const DiffusionParams& p, std::size_t reps, bool use_crn, std::size_t threads) {
    if (v >= g.n_nodes()) throw UsageError("node id " + std::to_string(v) + " out of range");
    if (std::find(base.begin(), base.end(), v) != base.end())
        throw UsageError("node " + std::to_string(v) + " is already in the seed set");
    std::vector<NodeId> augmented(base.begin(), base.end());
    augmented.push_back(v);

    DiffusionParams aug_params = p;
    if (!use_crn) aug_params.rng_seed = derive_seed(p.rng_seed, kIndependentArmSalt);
    const auto without = replicate_totals(g, base, p, reps, threads);
    const auto with = replicate_totals(g, augmented, aug_params, reps, threads);
    std::vector<Timestamp> diff(reps);
    for (std::size_t r = 0; r < reps; ++r) diff[r] = with[r] - without[r];

    GainEstimate gain;
    std::tie(gain.mean, gain.std_dev) = moments(diff, 1.0 / static_cast<double>(g.n_nodes()));
    gain.replications = reps;
    return gain;
}

}  // namespace dnim::oracle
