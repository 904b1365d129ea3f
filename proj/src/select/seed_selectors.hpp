#pragma once

#include <cstdint>
#include <vector>

#include "oracle/influence_oracle.hpp"

namespace dnim::select {

using graph::NodeId;
using graph::TemporalGraph;
using sis::DiffusionParams;

// CELF-style lazy greedy. All gain estimates reuse the replication streams of
// p.rng_seed, so the objective is one fixed sample average. Returns seeds in
// selection order; ties go to the lower node id.
std::vector<NodeId> greedy_lazy(const TemporalGraph& g, std::size_t k, const DiffusionParams& p,
                                std::size_t reps, std::size_t threads = 1);

// Top-k by out-degree, ties to the lower id.
std::vector<NodeId> degree_top_k(const TemporalGraph& g, std::size_t k);

// Uniform sample without replacement.
std::vector<NodeId> random_k(const TemporalGraph& g, std::size_t k, std::uint64_t rng_seed);

}  // namespace dnim::select
