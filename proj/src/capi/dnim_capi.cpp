#include "dnim/dnim.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <new>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "common/duration.hpp"
#include "common/error.hpp"
#include "oracle/influence_oracle.hpp"
#include "rl/config_io.hpp"
#include "select/seed_selectors.hpp"

struct dnim_graph {
    dnim::graph::TemporalGraph g;
};

struct dnim_log {
    dnim::sis::ActivationLog log;
    dnim::sis::DiffusionStats stats;
    std::vector<std::int64_t> original_ids;
};

struct dnim_model {
    dnim::rl::Model model;
};

namespace {

thread_local std::string last_error;

int fail(int code, const std::string& message) {
    last_error = message;
    return code;
}

template <class F>
int guarded(F&& body) {
    try {
        body();
        last_error.clear();
        return DNIM_OK;
    } catch (const dnim::Error& e) {
        return fail(static_cast<int>(e.kind()), e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(DNIM_ERR_USAGE, e.what());
    } catch (const std::out_of_range& e) {
        return fail(DNIM_ERR_USAGE, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(DNIM_ERR_USAGE, e.what());
    } catch (const std::bad_alloc&) {
        return fail(DNIM_ERR_DATA, "out of memory");
    } catch (const std::exception& e) {
        return fail(DNIM_ERR_DATA, e.what());
    }
}

void require(bool ok, const char* what) {
    if (!ok) throw dnim::UsageError(what);
}

dnim::sis::DiffusionParams to_params(const dnim_diffusion_params* p) {
    dnim::sis::DiffusionParams out;
    if (p) {
        out.mu = p->mu;
        out.t_act = p->t_act;
        out.rng_seed = p->rng_seed;
    }
    dnim::sis::validate(out);
    return out;
}

std::span<const dnim::graph::NodeId> as_nodes(const uint32_t* ids, size_t n) {
    require(ids != nullptr || n == 0, "null id array");
    return {ids, n};
}

void copy_out(const std::vector<dnim::graph::NodeId>& ids, uint32_t* out) {
    require(out != nullptr || ids.empty(), "null output array");
    std::copy(ids.begin(), ids.end(), out);
}

char* dup_string(const std::string& s) {
    auto* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

}  // namespace

extern "C" {

const char* dnim_last_error(void) { return last_error.c_str(); }

const char* dnim_version(void) { return "1.0.0"; }

void dnim_string_free(char* s) { std::free(s); }

void dnim_load_options_init(dnim_load_options* opts) {
    if (opts) *opts = dnim_load_options{};
}

int dnim_graph_load(const char* path, const dnim_load_options* opts, dnim_graph** out) {
    return guarded([&] {
        require(path && out, "null argument");
        dnim::graph::ParseOptions po;
        std::optional<std::int64_t> ts, te;
        if (opts) {
            po.delimiter = opts->delimiter;
            switch (opts->weight_column) {
                case DNIM_WEIGHT_AUTO: po.weight = dnim::graph::WeightColumn::automatic; break;
                case DNIM_WEIGHT_PRESENT: po.weight = dnim::graph::WeightColumn::present; break;
                case DNIM_WEIGHT_ABSENT: po.weight = dnim::graph::WeightColumn::absent; break;
                default: throw dnim::UsageError("invalid weight_column option");
            }
            po.drop_loops = opts->drop_loops != 0;
            po.dedup = opts->dedup != 0;
            if (opts->has_t_start) ts = opts->t_start;
            if (opts->has_t_end) te = opts->t_end;
        }
        auto g = dnim::graph::load_graph(path, po);
        if (ts || te) g = g.with_window(ts, te);
        *out = new dnim_graph{std::move(g)};
    });
}

int dnim_graph_from_edges(size_t n_nodes, const uint32_t* src, const uint32_t* dst, const int64_t* timestamps,
                          size_t n_edges, dnim_graph** out) {
    return guarded([&] {
        require(out && (n_edges == 0 || (src && dst && timestamps)), "null argument");
        std::vector<dnim::graph::TemporalEdge> edges(n_edges);
        for (size_t i = 0; i < n_edges; ++i) edges[i] = {src[i], dst[i], timestamps[i]};
        *out = new dnim_graph{dnim::graph::TemporalGraph(n_nodes, std::move(edges))};
    });
}

int dnim_graph_save_cache(const dnim_graph* g, const char* path) {
    return guarded([&] {
        require(g && path, "null argument");
        dnim::graph::save_cache(path, g->g);
    });
}

int dnim_graph_info_get(const dnim_graph* g, dnim_graph_info* out) {
    return guarded([&] {
        require(g && out, "null argument");
        *out = {g->g.n_nodes(), g->g.n_edges(), g->g.t_start(), g->g.t_end(), g->g.duration(), g->g.density()};
    });
}

int dnim_graph_original_id(const dnim_graph* g, uint32_t node, int64_t* out) {
    return guarded([&] {
        require(g && out, "null argument");
        *out = g->g.original_id(node);
    });
}

int dnim_graph_find_node(const dnim_graph* g, int64_t original_id, uint32_t* out) {
    return guarded([&] {
        require(g && out, "null argument");
        const auto v = g->g.find_original(original_id);
        if (!v) throw dnim::UsageError("unknown node id " + std::to_string(original_id));
        *out = *v;
    });
}

void dnim_graph_free(dnim_graph* g) { delete g; }

void dnim_diffusion_params_init(dnim_diffusion_params* p) {
    if (!p) return;
    const dnim::sis::DiffusionParams d;
    *p = {d.mu, d.t_act, d.rng_seed};
}

int dnim_parse_duration(const char* text, int64_t* out) {
    return guarded([&] {
        require(text && out, "null argument");
        *out = dnim::parse_duration(text);
    });
}

int dnim_run_diffusion(const dnim_graph* g, const uint32_t* seeds, size_t n_seeds, const dnim_diffusion_params* p,
                       dnim_log** out) {
    return guarded([&] {
        require(g && out, "null argument");
        auto r = dnim::sis::run_diffusion(g->g, as_nodes(seeds, n_seeds), to_params(p));
        const auto ids = g->g.original_ids();
        *out = new dnim_log{std::move(r.log), r.stats, {ids.begin(), ids.end()}};
    });
}

int dnim_log_influence(const dnim_log* log, double* out) {
    return guarded([&] {
        require(log && out, "null argument");
        *out = dnim::sis::influence(log->log, log->log.n_nodes());
    });
}

int dnim_log_stats(const dnim_log* log, dnim_diffusion_stats* out) {
    return guarded([&] {
        require(log && out, "null argument");
        *out = {log->stats.attempts, log->stats.successes, log->stats.successes_on_active};
    });
}

int dnim_log_window_activity(const dnim_log* log, size_t n_windows, size_t* counts) {
    return guarded([&] {
        require(log && counts, "null argument");
        const auto c = dnim::sis::window_activity(log->log, n_windows);
        std::copy(c.begin(), c.end(), counts);
    });
}

int dnim_log_write_csv(const dnim_log* log, const char* path) {
    return guarded([&] {
        require(log && path, "null argument");
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw dnim::DataError(std::string("cannot write ") + path);
        dnim::sis::write_log_csv(out, log->log, log->original_ids);
        if (!out) throw dnim::DataError(std::string("write failed: ") + path);
    });
}

void dnim_log_free(dnim_log* log) { delete log; }

double dnim_fraction_active(const dnim_diffusion_stats* stats) {
    if (!stats) return 0.0;
    return dnim::sis::fraction_active_activations({stats->attempts, stats->successes, stats->successes_on_active});
}

int dnim_estimate_influence(const dnim_graph* g, const uint32_t* seeds, size_t n_seeds, const dnim_diffusion_params* p,
                            size_t reps, size_t threads, dnim_influence_estimate* out) {
    return guarded([&] {
        require(g && out, "null argument");
        const auto est = dnim::oracle::estimate_influence(g->g, as_nodes(seeds, n_seeds), to_params(p), reps, threads);
        out->mean = est.mean;
        out->std_dev = est.std_dev;
        out->replications = est.replications;
        out->stats = {est.stats.attempts, est.stats.successes, est.stats.successes_on_active};
        out->fraction_active = dnim::sis::fraction_active_activations(est.stats);
    });
}

int dnim_mean_window_activity(const dnim_graph* g, const uint32_t* seeds, size_t n_seeds,
                              const dnim_diffusion_params* p, size_t reps, size_t n_windows, size_t threads,
                              double* out) {
    return guarded([&] {
        require(g && out, "null argument");
        const auto w =
            dnim::oracle::mean_window_activity(g->g, as_nodes(seeds, n_seeds), to_params(p), reps, n_windows, threads);
        std::copy(w.begin(), w.end(), out);
    });
}

int dnim_marginal_gain(const dnim_graph* g, const uint32_t* base, size_t n_base, uint32_t node,
                       const dnim_diffusion_params* p, size_t reps, int use_crn, size_t threads, double* mean,
                       double* std_dev) {
    return guarded([&] {
        require(g && mean, "null argument");
        const auto gain =
            dnim::oracle::marginal_gain(g->g, as_nodes(base, n_base), node, to_params(p), reps, use_crn != 0, threads);
        *mean = gain.mean;
        if (std_dev) *std_dev = gain.std_dev;
    });
}

int dnim_select_greedy(const dnim_graph* g, size_t k, const dnim_diffusion_params* p, size_t reps, size_t threads,
                       uint32_t* out) {
    return guarded([&] {
        require(g != nullptr, "null argument");
        copy_out(dnim::select::greedy_lazy(g->g, k, to_params(p), reps, threads), out);
    });
}

int dnim_select_degree(const dnim_graph* g, size_t k, uint32_t* out) {
    return guarded([&] {
        require(g != nullptr, "null argument");
        copy_out(dnim::select::degree_top_k(g->g, k), out);
    });
}

int dnim_select_random(const dnim_graph* g, size_t k, uint64_t rng_seed, uint32_t* out) {
    return guarded([&] {
        require(g != nullptr, "null argument");
        copy_out(dnim::select::random_k(g->g, k, rng_seed), out);
    });
}

int dnim_config_defaults(char** json_out) {
    return guarded([&] {
        require(json_out != nullptr, "null argument");
        *json_out = dup_string(dnim::rl::to_json(dnim::rl::TrainConfig{}).dump(2));
    });
}

int dnim_config_normalize(const char* json, char** json_out) {
    return guarded([&] {
        require(json && json_out, "null argument");
        const auto cfg = dnim::rl::train_config_from_json(nlohmann::json::parse(json));
        *json_out = dup_string(dnim::rl::to_json(cfg).dump(2));
    });
}

int dnim_train(const dnim_graph* g, const char* config_json, const char* log_csv, dnim_episode_callback callback,
               void* user, dnim_model** out) {
    return guarded([&] {
        require(g && config_json && out, "null argument");
        const auto cfg = dnim::rl::train_config_from_json(nlohmann::json::parse(config_json));
        std::function<void(const dnim::rl::TrainingProbe&)> observer;
        if (callback)
            observer = [&](const dnim::rl::TrainingProbe& probe) {
                const auto& e = probe.entry;
                callback(e.episode, e.episode_return, e.loss.has_value(), e.loss.value_or(0.0), e.epsilon, user);
            };
        auto result = dnim::rl::train(g->g, cfg, observer);
        if (log_csv) {
            std::ofstream csv(log_csv, std::ios::trunc);
            if (!csv) throw dnim::DataError(std::string("cannot write ") + log_csv);
            dnim::rl::write_training_log(csv, result.log);
        }
        *out = new dnim_model{{cfg.network, std::move(result.params)}};
    });
}

int dnim_model_save(const dnim_model* m, const char* path) {
    return guarded([&] {
        require(m && path, "null argument");
        dnim::rl::save_model(path, m->model);
    });
}

int dnim_model_load(const char* path, dnim_model** out) {
    return guarded([&] {
        require(path && out, "null argument");
        *out = new dnim_model{dnim::rl::load_model(path)};
    });
}

int dnim_model_select(const dnim_model* m, const dnim_graph* g, size_t k, uint32_t* out) {
    return guarded([&] {
        require(m && g, "null argument");
        copy_out(dnim::rl::select_seeds_by_policy(g->g, m->model.params, m->model.network, k), out);
    });
}

void dnim_model_free(dnim_model* m) { delete m; }

}  // extern "C"
