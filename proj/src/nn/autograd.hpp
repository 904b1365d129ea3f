#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "nn/tensor.hpp"

namespace dnim::nn {

struct Node;
using Var = std::shared_ptr<Node>;

// One value in a reverse-mode computation. Gradient buffers are allocated on
// first accumulation.
struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<Var> parents;
    std::function<void(Node&)> backward_fn;

    void accumulate(const Tensor& g);
    Tensor& grad_buffer();
};

Var constant(Tensor value);
Var leaf(Tensor value);  // requires_grad

// Seeds d(root)/d(root) = 1 (root must be 1x1) and propagates to every
// ancestor that requires a gradient.
void backward(const Var& root);

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);            // elementwise
Var add_row(const Var& a, const Var& row);      // a (n x c) + row (1 x c) broadcast
Var affine(const Var& a, double scale, double shift);
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var cos(const Var& a);
Var square(const Var& a);
Var sum(const Var& a);   // 1x1
Var mean(const Var& a);  // 1x1
Var concat_cols(std::span<const Var> parts);
Var gather_rows(const Var& a, std::span<const std::size_t> rows);
// Copy of base with base[rows[i]] replaced by replacement[i]; rows distinct.
Var scatter_rows(const Var& base, std::span<const std::size_t> rows, const Var& replacement);
// Row i multiplied by mask[i].
Var mask_rows(const Var& a, std::span<const double> mask);

// Segment-wise multi-head scaled dot-product attention. Query row i attends
// over key/value rows [offsets[i], offsets[i+1]); head h uses columns
// [h*dh, (h+1)*dh). Empty segments yield zero rows.
Var segment_attention(const Var& queries, const Var& keys, const Var& vals, std::span<const std::size_t> offsets,
                      std::size_t heads);

// c (n x 1) with c_j = sum_i sigmoid(a_i . b_j). The n x n matrix is never
// stored; backward recomputes it.
Var sigmoid_gram_colsum(const Var& a, const Var& b);

}  // namespace dnim::nn
