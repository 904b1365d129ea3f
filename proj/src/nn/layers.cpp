#include "nn/layers.hpp"

#include <cmath>

#include "common/error.hpp"

namespace dnim::nn {

void init_mlp(ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t hidden, std::size_t out,
              SplitMix64& rng) {
    params.add(prefix + ".w1", glorot_uniform(in, hidden, rng));
    params.add(prefix + ".b1", Tensor(1, hidden));
    params.add(prefix + ".w2", glorot_uniform(hidden, out, rng));
    params.add(prefix + ".b2", Tensor(1, out));
}

Var mlp_forward(const Var& x, const ParameterSet& params, const std::string& prefix) {
    const auto& w1 = params.get(prefix + ".w1");
    if (x->value.cols() != w1->value.rows())
        throw UsageError("mlp " + prefix + ": input width " + std::to_string(x->value.cols()) + ", expected " +
                         std::to_string(w1->value.rows()));
    auto hidden = relu(add_row(matmul(x, w1), params.get(prefix + ".b1")));
    return add_row(matmul(hidden, params.get(prefix + ".w2")), params.get(prefix + ".b2"));
}

void init_gru(ParameterSet& params, const std::string& prefix, std::size_t message_dim, std::size_t memory_dim,
              SplitMix64& rng) {
    for (const char* gate : {"z", "r", "h"}) {
        params.add(prefix + ".w" + gate, glorot_uniform(message_dim, memory_dim, rng));
        params.add(prefix + ".u" + gate, glorot_uniform(memory_dim, memory_dim, rng));
        params.add(prefix + ".b" + gate, Tensor(1, memory_dim));
    }
}

Var gru_cell(const Var& message, const Var& memory, const ParameterSet& params, const std::string& prefix) {
    const auto& wz = params.get(prefix + ".wz");
    const auto& uz = params.get(prefix + ".uz");
    if (message->value.cols() != wz->value.rows() || memory->value.cols() != uz->value.rows() ||
        message->value.rows() != memory->value.rows())
        throw UsageError("gru " + prefix + ": shape mismatch");
    auto gate = [&](const char* g, const Var& state) {
        return add_row(add(matmul(message, params.get(prefix + ".w" + g)), matmul(state, params.get(prefix + ".u" + g))),
                       params.get(prefix + ".b" + g));
    };
    auto z = sigmoid(gate("z", memory));
    auto r = sigmoid(gate("r", memory));
    auto candidate = tanh(gate("h", mul(r, memory)));
    // (1 - z) * s + z * h~  ==  s + z * (h~ - s)
    return add(memory, mul(z, sub(candidate, memory)));
}

void init_attention(ParameterSet& params, const std::string& prefix, std::size_t query_dim, std::size_t key_dim,
                    std::size_t model_dim, SplitMix64& rng) {
    params.add(prefix + ".wq", glorot_uniform(query_dim, model_dim, rng));
    params.add(prefix + ".wk", glorot_uniform(key_dim, model_dim, rng));
    params.add(prefix + ".wv", glorot_uniform(key_dim, model_dim, rng));
    params.add(prefix + ".wo", glorot_uniform(model_dim, model_dim, rng));
}

Var multi_head_attention(const Var& query, const Var& keys, const Var& vals, std::size_t heads,
                         const ParameterSet& params, const std::string& prefix) {
    if (query->value.rows() != 1) throw UsageError("multi_head_attention: expected a single query row");
    if (keys->value.rows() == 0) throw UsageError("multi_head_attention: empty key set");
    const std::size_t offsets[] = {0, keys->value.rows()};
    auto mix = segment_attention(matmul(query, params.get(prefix + ".wq")), matmul(keys, params.get(prefix + ".wk")),
                                 matmul(vals, params.get(prefix + ".wv")), offsets, heads);
    return matmul(mix, params.get(prefix + ".wo"));
}

Var segment_multi_head_attention(const Var& queries, const Var& entries, std::span<const std::size_t> offsets,
                                 std::size_t heads, const ParameterSet& params, const std::string& prefix) {
    auto mix = segment_attention(matmul(queries, params.get(prefix + ".wq")), matmul(entries, params.get(prefix + ".wk")),
                                 matmul(entries, params.get(prefix + ".wv")), offsets, heads);
    return matmul(mix, params.get(prefix + ".wo"));
}

void init_time_encoding(ParameterSet& params, const std::string& prefix, std::size_t dim) {
    Tensor omega(1, dim);
    for (std::size_t i = 0; i < dim; ++i)
        omega[i] = dim == 1 ? 1.0 : std::pow(10.0, 3.0 * static_cast<double>(i) / static_cast<double>(dim - 1));
    params.add(prefix + ".omega", std::move(omega));
    params.add(prefix + ".bias", Tensor(1, dim));
}

Var time_encode(const Var& times, const ParameterSet& params, const std::string& prefix) {
    if (times->value.cols() != 1) throw UsageError("time_encode: expects a column of times");
    return cos(add_row(matmul(times, params.get(prefix + ".omega")), params.get(prefix + ".bias")));
}

}  // namespace dnim::nn
