#include "tgn/embedding.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "common/error.hpp"

namespace dnim::tgn {

namespace {

const std::string kTime = "time";
const std::string kGru = "gru";

std::string attention_name(std::size_t layer) { return "attn" + std::to_string(layer); }
std::string mlp_name(std::size_t layer) { return "emb_mlp" + std::to_string(layer); }

double horizon(const TemporalGraph& g) {
    const auto d = g.duration();
    return d > 0 ? static_cast<double>(d) : 1.0;
}

}  // namespace

void EmbeddingConfig::validate() const {
    if (dim == 0 || time_dim == 0 || heads == 0 || batch_size == 0) throw UsageError("embedding sizes must be positive");
    if (attention_dim() % heads != 0)
        throw UsageError("dim + time_dim = " + std::to_string(attention_dim()) + " is not divisible by heads");
}

void init_embedding_params(nn::ParameterSet& params, const EmbeddingConfig& cfg, SplitMix64& rng) {
    cfg.validate();
    nn::init_time_encoding(params, kTime, cfg.time_dim);
    nn::init_gru(params, kGru, cfg.message_dim(), cfg.dim, rng);
    const std::size_t hidden = cfg.mlp_hidden == 0 ? cfg.dim : cfg.mlp_hidden;
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        nn::init_attention(params, attention_name(l), cfg.attention_dim(), cfg.attention_dim(), cfg.attention_dim(), rng);
        nn::init_mlp(params, mlp_name(l), cfg.dim + cfg.attention_dim(), hidden, cfg.dim, rng);
    }
}

double normalized_time(const TemporalGraph& g, Timestamp t) {
    return static_cast<double>(t - g.t_start()) / horizon(g);
}

NodeMemoryState rollout_memory(const TemporalGraph& g, const nn::ParameterSet& params, const EmbeddingConfig& cfg) {
    cfg.validate();
    const std::size_t n = g.n_nodes();
    NodeMemoryState state{nn::constant(nn::Tensor(n, cfg.dim)), std::vector<Timestamp>(n, g.t_start()),
                          std::vector<std::size_t>(n, 0)};
    const auto edges = g.edges();
    const double span = horizon(g);

    // latest[v] = index of the edge carrying v's surviving message in this batch
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::vector<std::size_t> latest(n, kNone);
    std::vector<std::size_t> touched;
    std::vector<std::size_t> self_idx, other_idx;
    std::vector<double> dt;

    for (std::size_t b0 = 0; b0 < edges.size(); b0 += cfg.batch_size) {
        const std::size_t b1 = std::min(edges.size(), b0 + cfg.batch_size);
        touched.clear();
        for (std::size_t e = b0; e < b1; ++e) {
            for (NodeId v : {edges[e].src, edges[e].dst}) {
                if (latest[v] == kNone) touched.push_back(v);
                latest[v] = e;  // edges are time-sorted: later index = latest, ties to later edge
            }
        }
        std::sort(touched.begin(), touched.end());

        self_idx.assign(touched.begin(), touched.end());
        other_idx.resize(touched.size());
        dt.resize(touched.size());
        for (std::size_t i = 0; i < touched.size(); ++i) {
            const auto& e = edges[latest[touched[i]]];
            other_idx[i] = e.src == touched[i] ? e.dst : e.src;
            dt[i] = static_cast<double>(e.timestamp - state.last_update[touched[i]]) / span;
        }

        auto times = nn::constant(nn::Tensor::column(dt));
        const nn::Var parts[] = {nn::gather_rows(state.memory, self_idx), nn::gather_rows(state.memory, other_idx),
                                 cfg.raw_delta_time ? times : nn::time_encode(times, params, kTime)};
        auto message = nn::concat_cols(parts);
        auto updated = nn::gru_cell(message, nn::gather_rows(state.memory, self_idx), params, kGru);
        state.memory = nn::scatter_rows(state.memory, self_idx, updated);

        for (std::size_t v : touched) {
            state.last_update[v] = edges[latest[v]].timestamp;
            ++state.update_counts[v];
            latest[v] = kNone;
        }
    }
    return state;
}

nn::Var compute_embeddings(const TemporalGraph& g, const NodeMemoryState& memory, const nn::ParameterSet& params,
                           const EmbeddingConfig& cfg) {
    cfg.validate();
    const std::size_t n = g.n_nodes();
    if (memory.memory->value.rows() != n || memory.memory->value.cols() != cfg.dim)
        throw UsageError("memory shape does not match graph and config");
    if (cfg.layers == 0) return memory.memory;

    std::vector<std::size_t> offsets{0};
    std::vector<std::size_t> nbr_nodes;
    std::vector<double> nbr_times;
    offsets.reserve(n + 1);
    for (NodeId v = 0; v < n; ++v) {
        auto nbrs = g.temporal_neighbors(v);
        if (cfg.neighbor_cap != 0 && nbrs.size() > cfg.neighbor_cap) nbrs = nbrs.last(cfg.neighbor_cap);
        for (const auto& nb : nbrs) {
            nbr_nodes.push_back(nb.node);
            nbr_times.push_back(normalized_time(g, nb.timestamp));
        }
        offsets.push_back(nbr_nodes.size());
    }

    auto phi_zero = nn::time_encode(nn::constant(nn::Tensor(n, 1)), params, kTime);
    auto phi_nbr = nn::time_encode(nn::constant(nn::Tensor::column(nbr_times)), params, kTime);

    nn::Var h = memory.memory;
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        const nn::Var q_parts[] = {h, phi_zero};
        const nn::Var kv_parts[] = {nn::gather_rows(h, nbr_nodes), phi_nbr};
        auto mixed = nn::segment_multi_head_attention(nn::concat_cols(q_parts), nn::concat_cols(kv_parts), offsets,
                                                      cfg.heads, params, attention_name(l));
        const nn::Var mlp_in[] = {h, mixed};
        h = nn::mlp_forward(nn::concat_cols(mlp_in), params, mlp_name(l));
    }
    return h;
}

void write_embeddings_csv(std::ostream& out, const nn::Tensor& z, std::span<const std::int64_t> original_ids) {
    if (!original_ids.empty() && original_ids.size() != z.rows())
        throw UsageError("embedding export: id count does not match row count");
    out << "node";
    for (std::size_t c = 0; c < z.cols(); ++c) out << ",z" << c;
    out << '\n';
    char buf[32];
    for (std::size_t r = 0; r < z.rows(); ++r) {
        if (original_ids.empty())
            out << r;
        else
            out << original_ids[r];
        for (double v : z.row_span(r)) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << ',' << buf;
        }
        out << '\n';
    }
}

}  // namespace dnim::tgn
