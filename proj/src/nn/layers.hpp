#pragma once

#include <span>
#include <string>

#include "nn/params.hpp"

namespace dnim::nn {

// Parameters of each primitive live in a ParameterSet under `prefix`.

// affine -> ReLU -> affine. Names: prefix.w1 (in x hidden), prefix.b1,
// prefix.w2 (hidden x out), prefix.b2.
void init_mlp(ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t hidden, std::size_t out,
              SplitMix64& rng);
Var mlp_forward(const Var& x, const ParameterSet& params, const std::string& prefix);

// z = sigmoid(m Wz + s Uz + bz), r = sigmoid(m Wr + s Ur + br),
// h~ = tanh(m Wh + (r*s) Uh + bh), s' = (1 - z) * s + z * h~ (row vectors).
void init_gru(ParameterSet& params, const std::string& prefix, std::size_t message_dim, std::size_t memory_dim,
              SplitMix64& rng);
Var gru_cell(const Var& message, const Var& memory, const ParameterSet& params, const std::string& prefix);

// Projections prefix.wq (query_dim x model_dim), prefix.wk / prefix.wv
// (key_dim x model_dim), prefix.wo (model_dim x model_dim). No biases, so an
// all-zero mixture projects to zero.
void init_attention(ParameterSet& params, const std::string& prefix, std::size_t query_dim, std::size_t key_dim,
                    std::size_t model_dim, SplitMix64& rng);

// One query row against a key/value set (rows). Throws on an empty key set.
Var multi_head_attention(const Var& query, const Var& keys, const Var& vals, std::size_t heads,
                         const ParameterSet& params, const std::string& prefix);

// Many queries at once; query i uses rows [offsets[i], offsets[i+1]) of
// `entries` as both keys and values. Empty segments give zero rows.
Var segment_multi_head_attention(const Var& queries, const Var& entries, std::span<const std::size_t> offsets,
                                 std::size_t heads, const ParameterSet& params, const std::string& prefix);

// phi(t) = cos(t * omega + b). omega is log-spaced over [1, 1e3], b zero.
void init_time_encoding(ParameterSet& params, const std::string& prefix, std::size_t dim);
// times: n x 1 column of normalized times; result n x dim.
Var time_encode(const Var& times, const ParameterSet& params, const std::string& prefix);

}  // namespace dnim::nn
