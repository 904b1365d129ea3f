// Acceptance checks. `acceptance N` runs criterion N; no argument runs all.
// Exit status: 0 pass, 1 fail, 77 skipped.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "graph/temporal_graph.hpp"
#include "json.hpp"
#include "nn/grad_check.hpp"
#include "oracle/influence_oracle.hpp"
#include "oracles.hpp"
#include "rl/agent.hpp"
#include "rl/config_io.hpp"
#include "select/seed_selectors.hpp"
#include "sis/social_sis.hpp"

using namespace dnim;
using graph::NodeId;
using graph::TemporalGraph;
using graph::Timestamp;
using nn::Tensor;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
    Status status;
    std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

sis::DiffusionParams diffusion(double mu, Timestamp t_act, std::uint64_t seed) {
    sis::DiffusionParams p;
    p.mu = mu;
    p.t_act = t_act;
    p.rng_seed = seed;
    return p;
}

Tensor random_tensor(std::size_t r, std::size_t c, SplitMix64& rng, double scale = 1.0) {
    Tensor t(r, c);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = scale * (2.0 * rng.uniform() - 1.0);
    return t;
}

rl::SeedState random_state(std::size_t n, std::size_t size, SplitMix64& rng) {
    rl::SeedState s(n);
    while (s.size() < size) {
        const auto v = static_cast<NodeId>(rng.below(n));
        if (!s.contains(v)) s.add(v);
    }
    return s;
}

// ---- 1: simulator vs brute force ----

Outcome simulator_oracle() {
    SplitMix64 rng(2024);
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Timestamp horizon = 20 + static_cast<Timestamp>(rng.below(300));
        const std::size_t m = rng.below(31);
        const std::size_t n = 1 + rng.below(10);
        const auto g = oracle_ref::random_graph(rng, n, m, horizon);
        std::vector<NodeId> seeds;
        for (NodeId v = 0; v < g.n_nodes(); ++v)
            if (rng.below(3) == 0) seeds.push_back(v);
        const Timestamp t_act = 1 + static_cast<Timestamp>(rng.below(200));
        const auto r = sis::run_diffusion(g, seeds, diffusion(1.0, t_act, trial));
        const auto o = oracle_ref::brute_force_sis(g, seeds, t_act);
        const double expected = static_cast<double>(o.active_seconds) / static_cast<double>(g.n_nodes());
        const bool same = r.log.total_active_time() == o.active_seconds &&
                          sis::influence(r.log, g.n_nodes()) == expected && r.stats.attempts == o.attempts &&
                          r.stats.successes == o.successes && r.stats.successes_on_active == o.successes_on_active;
        mismatches += !same;
    }
    return verdict(mismatches == 0, fmt("%zu/1000 instances differ", mismatches));
}

// ---- 2: closed forms ----

Outcome closed_forms() {
    SplitMix64 rng(7);
    std::size_t bad = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.below(30);
        const Timestamp horizon = 10 + static_cast<Timestamp>(rng.below(100000));
        const std::size_t m = 1 + rng.below(100);
        const auto g = oracle_ref::random_graph(rng, n, m, horizon);
        std::vector<NodeId> seeds;
        for (NodeId v = 0; v < n; ++v)
            if (rng.below(4) == 0) seeds.push_back(v);
        const auto r = sis::run_diffusion(g, seeds, diffusion(0.0, 1 + rng.below(5000), trial));
        const double expected =
            static_cast<double>(static_cast<std::int64_t>(seeds.size()) * g.duration()) / static_cast<double>(n);
        bad += sis::influence(r.log, n) != expected;
    }

    const TemporalGraph two(2, {{0, 1, 10}}, {}, Timestamp{0}, Timestamp{100});
    const NodeId seed[] = {0};
    const auto est = oracle::estimate_influence(two, seed, diffusion(0.5, 30, 11), 2000, 1);
    const double se = est.std_dev / std::sqrt(2000.0);
    const bool within = std::abs(est.mean - 57.5) <= 3.0 * se;
    return verdict(bad == 0 && within, fmt("mu=0: %zu/200 inexact; two-node mean %.3f (target 57.5, 3 SE = %.3f)", bad,
                                           est.mean, 3.0 * se));
}

// ---- 3: lazy vs naive greedy ----

Outcome lazy_vs_naive() {
    SplitMix64 rng(3);
    const Timestamp horizon = 2000;
    std::size_t differ = 0, reordered = 0;
    double worst = 1.0;
    std::string first_diff;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 5 + rng.below(46);
        const auto g = oracle_ref::random_graph(rng, n, 2 * n + rng.below(4 * n), horizon);
        const Timestamp t_act = 1 + static_cast<Timestamp>(rng.below(2 * horizon));
        const double mu = 0.2 + 0.6 * rng.uniform();
        const auto p = diffusion(mu, t_act, trial);
        const std::size_t k = 1 + rng.below(5);
        const auto lazy = select::greedy_lazy(g, k, p, 16);
        const auto naive = oracle_ref::naive_greedy(g, k, p, 16);
        if (lazy == naive) continue;
        // Same set picked in a different order still counts as identical.
        ++reordered;
        auto a = lazy, b = naive;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a == b) continue;
        ++differ;
        auto objective = [&](const std::vector<NodeId>& s) {
            const auto t = oracle::replicate_totals(g, s, p, 16, 1);
            return static_cast<double>(std::accumulate(t.begin(), t.end(), Timestamp{0}));
        };
        worst = std::min(worst, objective(lazy) / objective(naive));
        if (first_diff.empty())
            first_diff = fmt(", first at graph %d (n=%zu k=%zu t_act=%lld)", trial, n, k, static_cast<long long>(t_act));
    }
    return verdict(differ == 0, fmt("%zu/50 graphs select different sets (worst lazy/naive objective %.4f%s); "
                                    "%zu/50 pick the same set in a different order",
                                    differ, worst, first_diff.c_str(), reordered));
}

// ---- 4: gradients ----

nn::Var probe(const nn::Var& out, std::uint64_t seed) {
    SplitMix64 rng(seed);
    return nn::sum(nn::mul(out, nn::constant(random_tensor(out->value.rows(), out->value.cols(), rng))));
}

Outcome gradient_fidelity() {
    using namespace nn;
    GradCheckOptions all;
    all.coords_per_tensor = 0;
    double primitive = 0.0;
    {
        SplitMix64 rng(9);
        ParameterSet ps;
        ps.add("a", random_tensor(3, 4, rng));
        ps.add("b", random_tensor(4, 2, rng));
        ps.add("c", random_tensor(3, 4, rng));
        ps.add("row", random_tensor(1, 4, rng));
        init_mlp(ps, "m", 4, 5, 3, rng);
        init_gru(ps, "g", 4, 4, rng);
        init_attention(ps, "att", 4, 4, 4, rng);
        init_time_encoding(ps, "t", 3);
        ps.add("times", random_tensor(4, 1, rng, 0.5));
        ps.get("t.omega")->value = random_tensor(1, 3, rng, 3.0);
        const auto& a = ps.get("a");
        const auto& b = ps.get("b");
        const auto& c = ps.get("c");
        const std::size_t offsets[] = {0, 1, 3, 3};
        const std::vector<std::function<Var()>> fns = {
            [&] { return probe(matmul(a, b), 1); },
            [&] { return probe(add(a, c), 2); },
            [&] { return probe(sub(a, c), 3); },
            [&] { return probe(mul(a, c), 4); },
            [&] { return probe(add_row(a, ps.get("row")), 5); },
            [&] { return probe(relu(a), 6); },
            [&] { return probe(sigmoid(a), 7); },
            [&] { return probe(tanh(a), 8); },
            [&] { return probe(cos(a), 9); },
            [&] { return mean(square(a)); },
            [&] { return probe(sigmoid_gram_colsum(a, c), 10); },
            [&] { return probe(mlp_forward(a, ps, "m"), 11); },
            [&] { return probe(gru_cell(a, c, ps, "g"), 12); },
            [&] { return probe(time_encode(ps.get("times"), ps, "t"), 13); },
            [&] { return probe(segment_multi_head_attention(c, a, offsets, 2, ps, "att"), 14); },
        };
        for (const auto& f : fns) primitive = std::max(primitive, grad_check(ps, f, all).max_rel_error);
    }

    SplitMix64 rng(12);
    const auto g = oracle_ref::random_graph(rng, 8, 24, 1000);
    rl::QNetworkConfig cfg;
    cfg.embedding.dim = 4;
    cfg.embedding.time_dim = 4;
    cfg.embedding.batch_size = 8;
    auto online = rl::init_q_network(cfg, 13);
    const auto target = rl::node_scores(g, rl::init_q_network(cfg, 14), cfg)->value;
    std::vector<rl::Transition> batch;
    for (int i = 0; i < 6; ++i) {
        const auto s = random_state(8, rng.below(3), rng);
        NodeId act;
        do act = static_cast<NodeId>(rng.below(8));
        while (s.contains(act));
        batch.push_back({s, act, 10.0 * rng.uniform(), s.with(act), i % 2 == 0});
    }
    const auto full = grad_check(
        online, [&] { return rl::compute_loss(batch, rl::node_scores(g, online, cfg), target, 0.95); }, all);
    return verdict(full.max_rel_error < 1e-4 && primitive < 1e-6,
                   fmt("full pipeline %.3g over %zu coords (worst %s); primitives %.3g", full.max_rel_error,
                       full.coords_checked, full.worst_param.c_str(), primitive));
}

// ---- 5: Q structure ----

Outcome q_structure() {
    SplitMix64 rng(5);
    double worst_explicit = 0.0, worst_additive = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
        rl::QNetworkConfig cfg;
        cfg.embedding.dim = 4 + rng.below(5);
        cfg.embedding.time_dim = cfg.embedding.dim;
        const auto params = rl::init_q_network(cfg, 1000 + draw);
        const std::size_t n = 3 + rng.below(20);
        const Tensor z = random_tensor(n, cfg.embedding.dim, rng, 2.0);
        std::vector<std::vector<double>> rows;
        for (std::size_t r = 0; r < n; ++r) rows.emplace_back(z.row_span(r).begin(), z.row_span(r).end());
        const auto state = random_state(n, rng.below(n - 1), rng);
        const auto q = rl::q_values(params, cfg, nn::constant(z), state, n);
        const auto expected = oracle_ref::explicit_q(rows, params, false, state.members());
        const auto c = rl::column_scores(nn::constant(z), params, cfg)->value;
        double base = 0.0;
        for (NodeId v : state.members()) base += c[v];
        for (std::size_t i = 0; i < q.values.size(); ++i) {
            worst_explicit = std::max(worst_explicit, std::abs(q.values[i] - expected[i]) / std::abs(expected[i]));
            const double sum = base + c[q.nodes[i]];
            worst_additive = std::max(worst_additive, std::abs(q.values[i] - sum) / std::abs(sum));
        }
    }
    return verdict(worst_explicit < 1e-9 && worst_additive < 1e-12,
                   fmt("explicit rel error %.3g; additivity rel error %.3g over 100 draws", worst_explicit,
                       worst_additive));
}

// ---- 6: hub training ----

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    return nlohmann::json::parse(in);
}

Outcome hub_training() {
    const auto base = read_json(std::string(DNIM_TEST_DATA) + "/hub_smoke.json");
    const auto start = std::chrono::steady_clock::now();
    int hits = 0;
    std::string picks;
    for (int run = 0; run < 10; ++run) {
        auto j = base;
        j["rng_seed"] = run;
        const auto cfg = rl::train_config_from_json(j);
        const auto g = oracle_ref::hub_graph(50, 40, 100 + run);
        const auto result = rl::train(g, cfg);
        const auto seeds = rl::select_seeds_by_policy(g, result.params, cfg.network, 1);
        hits += seeds[0] == 0;
        picks += (run ? "," : "") + std::to_string(seeds[0]);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return verdict(hits >= 8 && secs < 600.0, fmt("hub chosen in %d/10 runs (picks %s) in %.1f s", hits, picks.c_str(), secs));
}

// ---- 7, 8: Bitcoinalpha ----

const char* dataset_path() { return std::getenv("DNIM_BITCOINALPHA"); }

TemporalGraph load_dataset() {
    graph::ParseOptions opts;
    opts.drop_loops = true;
    return graph::load_graph(dataset_path(), opts);
}

Outcome desk_scale_quality() {
    if (!dataset_path()) return {Status::skip, "set DNIM_BITCOINALPHA to the edge list to run"};
    const auto g = load_dataset();
    rl::TrainConfig cfg;
    cfg.agent.k = 10;
    cfg.agent.threads = 0;
    cfg.diffusion = diffusion(0.5, sis::kSecondsPerMonth, 0);
    const auto start = std::chrono::steady_clock::now();
    const auto trained = rl::train(g, cfg);
    const double train_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto rl_seeds = rl::select_seeds_by_policy(g, trained.params, cfg.network, 10);
    const auto greedy = select::greedy_lazy(g, 10, cfg.diffusion, 100, 0);
    auto eval = cfg.diffusion;
    eval.rng_seed = 99;
    const double a = oracle::estimate_influence(g, rl_seeds, eval, 2000, 0).mean;
    const double b = oracle::estimate_influence(g, greedy, eval, 2000, 0).mean;
    return verdict(a >= 0.95 * b && train_secs <= 7200.0,
                   fmt("policy %.1f vs lazy greedy %.1f (ratio %.3f); training %.0f s", a, b, a / b, train_secs));
}

Outcome activation_on_active() {
    if (!dataset_path()) return {Status::skip, "set DNIM_BITCOINALPHA to the edge list to run"};
    const auto g = load_dataset();
    const auto p = diffusion(0.5, sis::kSecondsPerMonth, 0);
    const auto seeds = select::greedy_lazy(g, 10, p, 100, 0);
    auto eval = p;
    eval.rng_seed = 99;
    const double pct = sis::fraction_active_activations(oracle::estimate_influence(g, seeds, eval, 2000, 0).stats);
    return verdict(std::abs(pct - 52.90) <= 10.0, fmt("%.2f%% of successful activations hit active nodes", pct));
}

// ---- 9: CLI determinism ----

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome cli_determinism() {
    const auto dir = std::filesystem::temp_directory_path() / "dnim_acceptance_cli";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const std::string star = std::string(DNIM_TEST_DATA) + "/star.csv";
    const std::string d = dir.string();
    {
        std::ofstream(dir / "train.json")
            << R"({"k": 3, "episodes": 12, "dim": 8, "time_dim": 8, "minibatch": 4, "reward_reps": 10})";
    }

    // Each command writes its primary outputs to files named in `outputs`.
    struct Command {
        std::string args;
        std::vector<std::string> outputs;
    };
    const std::string g = " -g '" + star + "' --rng-seed 17 ";
    const std::vector<Command> commands = {
        {"ingest '" + star + "' -o '" + d + "/c.dnimg'", {"c.dnimg"}},
        {"simulate" + g + "--seeds 100,104 --t-act 900 --windows 12 --log-csv '" + d + "/sim.csv'", {"sim.csv"}},
        {"evaluate" + g + "--seeds 100 --reps 500 --t-act 900 --windows 12 --windows-csv '" + d + "/win.csv'",
         {"win.csv"}},
        {"select" + g + "-a greedy -k 3 --reps 50 --t-act 900", {}},
        {"select" + g + "-a degree -k 3", {}},
        {"select" + g + "-a random -k 3", {}},
        {"train" + g + "-c '" + d + "/train.json' -o '" + d + "/m.model'", {"m.model", "m.model.json", "m.model.log.csv"}},
        {"select" + g + "-a dnimrl -k 3 --checkpoint '" + d + "/m.model'", {}},
        {"config", {}},
    };

    std::size_t failed_cmds = 0;
    auto run_all = [&](int threads) {
        std::vector<std::string> captured;
        for (const auto& c : commands) {
            const bool threaded = c.args.rfind("ingest", 0) != 0 && c.args.rfind("config", 0) != 0 &&
                                  c.args.find("degree") == std::string::npos &&
                                  c.args.find("random") == std::string::npos &&
                                  c.args.find("dnimrl") == std::string::npos;
            const std::string cmd = "'" + std::string(DNIM_CLI_PATH) + "' " + c.args +
                                    (threaded ? " --threads " + std::to_string(threads) : "") + " > '" + d +
                                    "/stdout' 2> /dev/null";
            const int status = std::system(cmd.c_str());
            failed_cmds += !(WIFEXITED(status) && WEXITSTATUS(status) == 0);
            captured.push_back(slurp(dir / "stdout"));
            for (const auto& o : c.outputs) captured.push_back(slurp(dir / o));
        }
        return captured;
    };
    const auto first = run_all(1);
    const auto second = run_all(1);
    const auto threaded = run_all(4);
    std::size_t diffs = 0;
    for (std::size_t i = 0; i < first.size(); ++i) diffs += first[i] != second[i] || first[i] != threaded[i];
    std::filesystem::remove_all(dir);
    return verdict(diffs == 0 && failed_cmds == 0,
                   fmt("%zu commands x 3 runs (threads 1, 1, 4): %zu differing outputs, %zu nonzero exits",
                       commands.size(), diffs, failed_cmds));
}

const std::vector<std::pair<const char*, Outcome (*)()>> kCriteria = {
    {"simulator matches brute-force oracle", simulator_oracle},
    {"closed forms", closed_forms},
    {"lazy greedy equals naive greedy", lazy_vs_naive},
    {"gradient fidelity", gradient_fidelity},
    {"Q structure", q_structure},
    {"hub training sanity", hub_training},
    {"desk-scale quality (Bitcoinalpha)", desk_scale_quality},
    {"activation-on-active band (Bitcoinalpha)", activation_on_active},
    {"CLI determinism", cli_determinism},
};

Status run(std::size_t index) {
    const auto& [name, fn] = kCriteria[index];
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = fn();
    } catch (const std::exception& e) {
        out = {Status::fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* tag = out.status == Status::pass ? "PASS" : out.status == Status::fail ? "FAIL" : "SKIP";
    std::printf("criterion %zu %s: %s - %s [%.1f s]\n", index + 1, tag, name, out.detail.c_str(), secs);
    std::fflush(stdout);
    return out.status;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 2) {
        std::fprintf(stderr, "usage: %s [criterion 1-%zu]\n", argv[0], kCriteria.size());
        return 2;
    }
    if (argc == 2) {
        const int n = std::atoi(argv[1]);
        if (n < 1 || n > static_cast<int>(kCriteria.size())) {
            std::fprintf(stderr, "unknown criterion %s\n", argv[1]);
            return 2;
        }
        const Status s = run(static_cast<std::size_t>(n - 1));
        return s == Status::pass ? 0 : s == Status::skip ? 77 : 1;
    }
    bool failed = false;
    for (std::size_t i = 0; i < kCriteria.size(); ++i) failed |= run(i) == Status::fail;
    return failed ? 1 : 0;
}
