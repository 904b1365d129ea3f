#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "graph/temporal_graph.hpp"
#include "nn/layers.hpp"

namespace dnim::tgn {

using graph::NodeId;
using graph::TemporalGraph;
using graph::Timestamp;

struct EmbeddingConfig {
    std::size_t dim = 64;          // memory and embedding width
    std::size_t time_dim = 64;     // width of the cosine time encoding
    std::size_t layers = 1;        // attention layers; 0 returns the memory itself
    std::size_t heads = 2;
    std::size_t batch_size = 200;  // edges per memory-update batch
    std::size_t neighbor_cap = 0;  // most recent n neighbors per node; 0 = all
    std::size_t mlp_hidden = 0;    // hidden width of the per-layer MLP; 0 = dim
    bool raw_delta_time = false;   // message carries the normalized dt scalar instead of phi(dt)

    std::size_t message_dim() const { return 2 * dim + (raw_delta_time ? 1 : time_dim); }
    std::size_t attention_dim() const { return dim + time_dim; }
    void validate() const;
};

void init_embedding_params(nn::ParameterSet& params, const EmbeddingConfig& cfg, SplitMix64& rng);

// Memory after the full batched rollout.
struct NodeMemoryState {
    nn::Var memory;                          // N x dim
    std::vector<Timestamp> last_update;      // t^- per node, t_start if never updated
    std::vector<std::size_t> update_counts;  // GRU updates applied per node
};

// Maps timestamps onto [0, 1] over the graph horizon.
double normalized_time(const TemporalGraph& g, Timestamp t);

NodeMemoryState rollout_memory(const TemporalGraph& g, const nn::ParameterSet& params, const EmbeddingConfig& cfg);

// z (N x dim): one embedding per node over its whole temporal neighborhood.
nn::Var compute_embeddings(const TemporalGraph& g, const NodeMemoryState& memory, const nn::ParameterSet& params,
                           const EmbeddingConfig& cfg);

inline nn::Var embed(const TemporalGraph& g, const nn::ParameterSet& params, const EmbeddingConfig& cfg) {
    return compute_embeddings(g, rollout_memory(g, params, cfg), params, cfg);
}

// CSV `node,z0,...,z{d-1}`, one row per node, values at full precision.
// Rows are labelled with original ids when given.
void write_embeddings_csv(std::ostream& out, const nn::Tensor& z, std::span<const std::int64_t> original_ids = {});

}  // namespace dnim::tgn
