// Command-line front end over the dnim C API.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dnim/dnim.h"
#include "json.hpp"

using nlohmann::ordered_json;

namespace {

struct CliError {
    int code;
    std::string message;
};

void check(int rc) {
    if (rc != DNIM_OK) throw CliError{rc, dnim_last_error()};
}

[[noreturn]] void usage(const std::string& message) { throw CliError{DNIM_ERR_USAGE, message}; }

struct GraphDeleter {
    void operator()(dnim_graph* g) const { dnim_graph_free(g); }
};
struct LogDeleter {
    void operator()(dnim_log* l) const { dnim_log_free(l); }
};
struct ModelDeleter {
    void operator()(dnim_model* m) const { dnim_model_free(m); }
};
using GraphPtr = std::unique_ptr<dnim_graph, GraphDeleter>;
using LogPtr = std::unique_ptr<dnim_log, LogDeleter>;
using ModelPtr = std::unique_ptr<dnim_model, ModelDeleter>;

std::string take_string(char* s) {
    std::string out(s);
    dnim_string_free(s);
    return out;
}

struct GraphArgs {
    std::string path;
    std::string delimiter;
    std::string weight = "auto";
    bool drop_loops = false;
    bool dedup = false;
    std::optional<std::int64_t> t_start;
    std::optional<std::int64_t> t_end;

    void add_to(CLI::App* cmd, bool positional) {
        if (positional)
            cmd->add_option("input", path, "Edge list (src,dst[,weight],timestamp) or graph cache")->required();
        else
            cmd->add_option("--graph,-g", path, "Edge list or graph cache")->required();
        cmd->add_option("--delimiter", delimiter, "Field delimiter (default: comma, else whitespace)");
        cmd->add_option("--weight", weight, "Weight column: auto, yes, no")
            ->check(CLI::IsMember({"auto", "yes", "no"}));
        cmd->add_flag("--drop-loops", drop_loops, "Remove edges with src == dst");
        cmd->add_flag("--dedup", dedup, "Remove repeated (src, dst, timestamp) edges");
        cmd->add_option("--t-start", t_start, "Horizon start (seconds); default: first edge");
        cmd->add_option("--t-end", t_end, "Horizon end (seconds); default: last edge");
    }

    GraphPtr load() const {
        dnim_load_options o;
        dnim_load_options_init(&o);
        if (delimiter.size() > 1) usage("--delimiter must be a single character");
        o.delimiter = delimiter.empty() ? '\0' : delimiter[0];
        o.weight_column = weight == "yes" ? DNIM_WEIGHT_PRESENT : weight == "no" ? DNIM_WEIGHT_ABSENT : DNIM_WEIGHT_AUTO;
        o.drop_loops = drop_loops;
        o.dedup = dedup;
        o.has_t_start = t_start.has_value();
        o.t_start = t_start.value_or(0);
        o.has_t_end = t_end.has_value();
        o.t_end = t_end.value_or(0);
        dnim_graph* g = nullptr;
        check(dnim_graph_load(path.c_str(), &o, &g));
        return GraphPtr(g);
    }

    ordered_json echo() const {
        ordered_json j{{"graph", path}, {"weight", weight}, {"drop_loops", drop_loops}, {"dedup", dedup}};
        if (!delimiter.empty()) j["delimiter"] = delimiter;
        if (t_start) j["t_start"] = *t_start;
        if (t_end) j["t_end"] = *t_end;
        return j;
    }
};

struct DiffusionArgs {
    double mu = 0.5;
    std::string t_act = "1mo";
    std::uint64_t rng_seed = 0;
    std::size_t threads = 1;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--mu", mu, "Activation probability per eligible edge")->capture_default_str();
        cmd->add_option("--t-act", t_act, "Activity per activation: seconds or 30d, 12h, 1mo ...")
            ->capture_default_str();
        cmd->add_option("--rng-seed", rng_seed, "Base random seed")->capture_default_str();
        cmd->add_option("--threads", threads, "Worker threads (0 = all cores); results do not depend on it")
            ->capture_default_str();
    }

    dnim_diffusion_params params() const {
        dnim_diffusion_params p;
        dnim_diffusion_params_init(&p);
        p.mu = mu;
        check(dnim_parse_duration(t_act.c_str(), &p.t_act));
        p.rng_seed = rng_seed;
        return p;
    }

    void echo_into(ordered_json& j) const {
        const auto p = params();
        j["mu"] = p.mu;
        j["t_act"] = p.t_act;
        j["rng_seed"] = p.rng_seed;
    }
};

ordered_json info_json(const dnim_graph* g) {
    dnim_graph_info info;
    check(dnim_graph_info_get(g, &info));
    return ordered_json{{"nodes", info.n_nodes},       {"edges", info.n_edges},     {"density", info.density},
                        {"duration", info.duration},   {"t_start", info.t_start},   {"t_end", info.t_end}};
}

std::vector<std::uint32_t> to_dense(const dnim_graph* g, const std::vector<std::int64_t>& originals) {
    std::vector<std::uint32_t> dense(originals.size());
    for (std::size_t i = 0; i < originals.size(); ++i) check(dnim_graph_find_node(g, originals[i], &dense[i]));
    return dense;
}

std::vector<std::int64_t> to_original(const dnim_graph* g, const std::vector<std::uint32_t>& dense) {
    std::vector<std::int64_t> originals(dense.size());
    for (std::size_t i = 0; i < dense.size(); ++i) check(dnim_graph_original_id(g, dense[i], &originals[i]));
    return originals;
}

// A seeds file is either a JSON array of ids or an object with a "seeds" array
// (the output of `dnim select`).
std::vector<std::int64_t> read_seeds_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CliError{DNIM_ERR_DATA, "cannot open " + path};
    try {
        const auto j = nlohmann::json::parse(in);
        const auto& arr = j.is_object() ? j.at("seeds") : j;
        return arr.get<std::vector<std::int64_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw CliError{DNIM_ERR_DATA, path + ": " + e.what()};
    }
}

void print(const ordered_json& j) { std::cout << j.dump(2) << '\n'; }

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw CliError{DNIM_ERR_DATA, "cannot write " + path};
    return out;
}

// ---- ingest ----

struct IngestCmd {
    GraphArgs graph;
    std::string output;

    void setup(CLI::App& app) {
        auto* cmd = app.add_subcommand("ingest", "Parse an edge list, report its statistics, write a binary cache");
        graph.add_to(cmd, true);
        cmd->add_option("--output,-o", output, "Cache path (default: <input>.dnimg)");
        cmd->callback([this] { run(); });
    }

    void run() {
        const auto g = graph.load();
        const std::string cache = output.empty() ? graph.path + ".dnimg" : output;
        check(dnim_graph_save_cache(g.get(), cache.c_str()));
        auto report = info_json(g.get());
        report["cache"] = cache;
        report["params"] = graph.echo();
        print(report);
    }
};

// ---- simulate ----

struct SimulateCmd {
    GraphArgs graph;
    DiffusionArgs diffusion;
    std::vector<std::int64_t> seeds;
    std::string seeds_file;
    std::string log_csv;
    std::size_t windows = 0;

    void setup(CLI::App& app) {
        auto* cmd = app.add_subcommand("simulate", "Run one diffusion and export its activation log");
        graph.add_to(cmd, false);
        diffusion.add_to(cmd);
        cmd->add_option("--seeds", seeds, "Seed nodes (original ids)")->delimiter(',');
        cmd->add_option("--seeds-file", seeds_file, "JSON seed list or `dnim select` output");
        cmd->add_option("--log-csv", log_csv, "Write intervals as node,start,end");
        cmd->add_option("--windows", windows, "Report active nodes in this many equal windows");
        cmd->callback([this] { run(); });
    }

    void run() {
        const auto g = graph.load();
        if (!seeds_file.empty()) seeds = read_seeds_file(seeds_file);
        const auto dense = to_dense(g.get(), seeds);
        const auto p = diffusion.params();
        dnim_log* raw = nullptr;
        check(dnim_run_diffusion(g.get(), dense.data(), dense.size(), &p, &raw));
        LogPtr log(raw);
        double infl = 0;
        dnim_diffusion_stats stats;
        check(dnim_log_influence(log.get(), &infl));
        check(dnim_log_stats(log.get(), &stats));
        if (!log_csv.empty()) check(dnim_log_write_csv(log.get(), log_csv.c_str()));

        ordered_json out{{"influence", infl},
                         {"stats",
                          {{"attempts", stats.attempts},
                           {"successes", stats.successes},
                           {"successes_on_active", stats.successes_on_active}}},
                         {"fraction_active", dnim_fraction_active(&stats)}};
        if (windows > 0) {
            std::vector<std::size_t> counts(windows);
            check(dnim_log_window_activity(log.get(), windows, counts.data()));
            out["window_activity"] = counts;
        }
        auto params = graph.echo();
        params["seeds"] = seeds;
        diffusion.echo_into(params);
        if (windows > 0) params["windows"] = windows;
        out["params"] = params;
        print(out);
    }
};

// ---- evaluate ----

struct EvaluateCmd {
    GraphArgs graph;
    DiffusionArgs diffusion;
    std::vector<std::int64_t> seeds;
    std::string seeds_file;
    std::size_t reps = 2000;
    std::size_t windows = 0;
    std::string windows_csv;

    void setup(CLI::App& app) {
        auto* cmd = app.add_subcommand("evaluate", "Monte Carlo influence of a seed set");
        graph.add_to(cmd, false);
        diffusion.add_to(cmd);
        cmd->add_option("--seeds", seeds, "Seed nodes (original ids)")->delimiter(',');
        cmd->add_option("--seeds-file", seeds_file, "JSON seed list or `dnim select` output");
        cmd->add_option("--reps", reps, "Replications")->capture_default_str();
        cmd->add_option("--windows", windows, "Mean active nodes in this many equal windows");
        cmd->add_option("--windows-csv", windows_csv, "Write window rows as window,start,end,active_nodes");
        cmd->callback([this] { run(); });
    }

    void run() {
        const auto g = graph.load();
        if (!seeds_file.empty()) seeds = read_seeds_file(seeds_file);
        if (!windows_csv.empty() && windows == 0) usage("--windows-csv requires --windows");
        const auto dense = to_dense(g.get(), seeds);
        const auto p = diffusion.params();
        dnim_influence_estimate est;
        check(dnim_estimate_influence(g.get(), dense.data(), dense.size(), &p, reps, diffusion.threads, &est));
        ordered_json out{{"mean", est.mean},
                         {"std_dev", est.std_dev},
                         {"replications", est.replications},
                         {"stats",
                          {{"attempts", est.stats.attempts},
                           {"successes", est.stats.successes},
                           {"successes_on_active", est.stats.successes_on_active}}},
                         {"fraction_active", est.fraction_active}};
        if (windows > 0) {
            std::vector<double> active(windows);
            check(dnim_mean_window_activity(g.get(), dense.data(), dense.size(), &p, reps, windows, diffusion.threads,
                                            active.data()));
            out["window_activity"] = active;
            if (!windows_csv.empty()) write_windows(g.get(), active);
        }
        auto params = graph.echo();
        params["seeds"] = seeds;
        diffusion.echo_into(params);
        params["reps"] = reps;
        if (windows > 0) params["windows"] = windows;
        out["params"] = params;
        print(out);
    }

    void write_windows(const dnim_graph* g, const std::vector<double>& active) const {
        dnim_graph_info info;
        check(dnim_graph_info_get(g, &info));
        auto out = open_out(windows_csv);
        out << "window,start,end,active_nodes\n";
        char buf[160];
        const long double span = static_cast<long double>(info.duration);
        for (std::size_t w = 0; w < active.size(); ++w) {
            const long double s = info.t_start + span * w / active.size();
            const long double e = info.t_start + span * (w + 1) / active.size();
            std::snprintf(buf, sizeof buf, "%zu,%.1Lf,%.1Lf,%.6f\n", w, s, e, active[w]);
            out << buf;
        }
    }
};

// ---- select ----

struct SelectCmd {
    GraphArgs graph;
    DiffusionArgs diffusion;
    std::string algorithm;
    std::size_t k = 10;
    std::size_t reps = 100;
    std::string checkpoint;
    std::string timing;

    void setup(CLI::App& app) {
        auto* cmd = app.add_subcommand("select", "Choose a seed set");
        graph.add_to(cmd, false);
        diffusion.add_to(cmd);
        cmd->add_option("--algorithm,-a", algorithm, "greedy, degree, random or dnimrl")
            ->required()
            ->check(CLI::IsMember({"greedy", "degree", "random", "dnimrl"}));
        cmd->add_option("-k", k, "Seed set size")->capture_default_str();
        cmd->add_option("--reps", reps, "Replications per greedy gain estimate")->capture_default_str();
        cmd->add_option("--checkpoint", checkpoint, "Trained model (dnimrl)");
        cmd->add_option("--timing", timing, "Append an `algorithm,k,seconds` row to this CSV");
        cmd->callback([this] { run(); });
    }

    void run() {
        if (algorithm == "dnimrl" && checkpoint.empty()) usage("--checkpoint is required for dnimrl");
        const auto g = graph.load();
        ModelPtr model;
        if (algorithm == "dnimrl") {
            dnim_model* m = nullptr;
            check(dnim_model_load(checkpoint.c_str(), &m));
            model.reset(m);
        }
        const auto p = diffusion.params();
        std::vector<std::uint32_t> dense(k);
        const auto start = std::chrono::steady_clock::now();
        if (algorithm == "greedy")
            check(dnim_select_greedy(g.get(), k, &p, reps, diffusion.threads, dense.data()));
        else if (algorithm == "degree")
            check(dnim_select_degree(g.get(), k, dense.data()));
        else if (algorithm == "random")
            check(dnim_select_random(g.get(), k, diffusion.rng_seed, dense.data()));
        else
            check(dnim_model_select(model.get(), g.get(), k, dense.data()));
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        char row[128];
        std::snprintf(row, sizeof row, "%s,%zu,%.6f", algorithm.c_str(), k, seconds);
        std::cerr << row << '\n';
        if (!timing.empty()) {
            const bool fresh = !std::filesystem::exists(timing) || std::filesystem::file_size(timing) == 0;
            std::ofstream t(timing, std::ios::app);
            if (!t) throw CliError{DNIM_ERR_DATA, "cannot write " + timing};
            if (fresh) t << "algorithm,k,seconds\n";
            t << row << '\n';
        }

        auto params = graph.echo();
        params["algorithm"] = algorithm;
        params["k"] = k;
        if (algorithm == "greedy") {
            diffusion.echo_into(params);
            params["reps"] = reps;
        } else if (algorithm == "random") {
            params["rng_seed"] = diffusion.rng_seed;
        } else if (algorithm == "dnimrl") {
            params["checkpoint"] = checkpoint;
        }
        print(ordered_json{{"algorithm", algorithm}, {"k", k}, {"seeds", to_original(g.get(), dense)}, {"params", params}});
    }
};

// ---- train ----

struct TrainCmd {
    GraphArgs graph;
    std::string config_path;
    std::string checkpoint;
    std::string log_csv;
    std::optional<std::uint64_t> rng_seed;
    std::optional<std::size_t> threads;
    bool progress = false;

    void setup(CLI::App& app) {
        auto* cmd = app.add_subcommand("train", "Train the policy network; write checkpoint and episode log");
        graph.add_to(cmd, false);
        cmd->add_option("--config,-c", config_path, "Flat JSON config; missing keys take defaults");
        cmd->add_option("--checkpoint,-o", checkpoint, "Output checkpoint path (manifest goes to <path>.json)")
            ->required();
        cmd->add_option("--log", log_csv, "Episode log CSV (default: <checkpoint>.log.csv)");
        cmd->add_option("--rng-seed", rng_seed, "Overrides rng_seed from the config");
        cmd->add_option("--threads", threads, "Overrides threads from the config");
        cmd->add_flag("--progress", progress, "Print one line per episode to stderr");
        cmd->callback([this] { run(); });
    }

    void run() {
        nlohmann::json cfg = nlohmann::json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw CliError{DNIM_ERR_DATA, "cannot open " + config_path};
            try {
                cfg = nlohmann::json::parse(in);
            } catch (const nlohmann::json::exception& e) {
                usage(config_path + ": " + e.what());
            }
        }
        if (rng_seed) cfg["rng_seed"] = *rng_seed;
        if (threads) cfg["threads"] = *threads;
        const std::string text = cfg.dump();
        char* normalized = nullptr;
        check(dnim_config_normalize(text.c_str(), &normalized));
        auto echo = ordered_json::parse(take_string(normalized));
        echo.erase("threads");

        const auto g = graph.load();
        const std::string log_path = log_csv.empty() ? checkpoint + ".log.csv" : log_csv;
        dnim_model* raw = nullptr;
        check(dnim_train(g.get(), text.c_str(), log_path.c_str(), progress ? &report : nullptr, nullptr, &raw));
        ModelPtr model(raw);
        check(dnim_model_save(model.get(), checkpoint.c_str()));

        auto params = graph.echo();
        params["config"] = echo;
        print(ordered_json{{"checkpoint", checkpoint}, {"log", log_path}, {"params", params}});
    }

    static void report(std::size_t episode, double ret, int has_loss, double loss, double eps, void*) {
        if (has_loss)
            std::fprintf(stderr, "episode %zu return %.6g loss %.6g epsilon %.4f\n", episode, ret, loss, eps);
        else
            std::fprintf(stderr, "episode %zu return %.6g epsilon %.4f\n", episode, ret, eps);
    }
};

// ---- config ----

struct ConfigCmd {
    std::string path;

    void setup(CLI::App& app) {
        auto* cmd = app.add_subcommand("config", "Print the training config with defaults filled in");
        cmd->add_option("file", path, "Config to validate (default: print the defaults)");
        cmd->callback([this] { run(); });
    }

    void run() {
        char* out = nullptr;
        if (path.empty()) {
            check(dnim_config_defaults(&out));
        } else {
            std::ifstream in(path);
            if (!in) throw CliError{DNIM_ERR_DATA, "cannot open " + path};
            std::stringstream ss;
            ss << in.rdbuf();
            check(dnim_config_normalize(ss.str().c_str(), &out));
        }
        std::cout << take_string(out) << '\n';
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Influence maximization on temporal graphs under Social-SIS diffusion"};
    app.set_version_flag("--version", dnim_version());
    app.require_subcommand(1);

    IngestCmd ingest;
    SimulateCmd simulate;
    EvaluateCmd evaluate;
    SelectCmd select;
    TrainCmd train;
    ConfigCmd config;
    ingest.setup(app);
    simulate.setup(app);
    evaluate.setup(app);
    select.setup(app);
    train.setup(app);
    config.setup(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return DNIM_ERR_USAGE;
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << '\n';
        return e.code;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return DNIM_ERR_USAGE;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return DNIM_ERR_DATA;
    }
    return 0;
}
