#include "nn/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>

#include "common/error.hpp"

namespace dnim::nn {

void Node::accumulate(const Tensor& g) { grad_buffer() += g; }

Tensor& Node::grad_buffer() {
    if (!grad.same_shape(value)) grad = Tensor(value.rows(), value.cols());
    return grad;
}

namespace {

void require(bool ok, const char* op, const char* what) {
    if (!ok) throw UsageError(std::string(op) + ": " + what);
}

void check_shape(const Tensor& a, const Tensor& b, const char* op) {
    require(a.same_shape(b), op, "shape mismatch");
}

Var make(Tensor value, std::vector<Var> parents, std::function<void(Node&)> fn, const char* op) {
    if (!value.all_finite()) throw NumericError(std::string(op) + " produced a non-finite value");
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->requires_grad = std::any_of(parents.begin(), parents.end(), [](const Var& p) { return p->requires_grad; });
    if (node->requires_grad) {
        node->parents = std::move(parents);
        node->backward_fn = std::move(fn);
    }
    return node;
}

// Elementwise unary op whose derivative is expressed via input x and output y.
template <class Forward, class Deriv>
Var elementwise(const Var& a, const char* op, Forward fwd, Deriv deriv) {
    Tensor out(a->value.rows(), a->value.cols());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(a->value[i]);
    return make(std::move(out), {a},
                [deriv](Node& self) {
                    auto& in = self.parents[0];
                    if (!in->requires_grad) return;
                    Tensor& g = in->grad_buffer();
                    for (std::size_t i = 0; i < g.size(); ++i)
                        g[i] += self.grad[i] * deriv(in->value[i], self.value[i]);
                },
                op);
}

}  // namespace

Var constant(Tensor value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    return node;
}

Var leaf(Tensor value) {
    auto node = constant(std::move(value));
    node->requires_grad = true;
    return node;
}

void backward(const Var& root) {
    require(root->value.rows() == 1 && root->value.cols() == 1, "backward", "root must be a scalar");
    if (!root->requires_grad) return;

    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root->grad_buffer()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (node->backward_fn && node->grad.same_shape(node->value)) node->backward_fn(*node);
    }
}

Var matmul(const Var& a, const Var& b) {
    require(a->value.cols() == b->value.rows(), "matmul", "inner dimensions differ");
    Tensor out;
    gemm(a->value, b->value, out);
    return make(std::move(out), {a, b},
                [](Node& self) {
                    auto& x = self.parents[0];
                    auto& w = self.parents[1];
                    if (x->requires_grad) gemm_nt_acc(self.grad, w->value, x->grad_buffer());
                    if (w->requires_grad) gemm_tn_acc(x->value, self.grad, w->grad_buffer());
                },
                "matmul");
}

Var add(const Var& a, const Var& b) {
    check_shape(a->value, b->value, "add");
    Tensor out = a->value;
    out += b->value;
    return make(std::move(out), {a, b},
                [](Node& self) {
                    for (auto& p : self.parents)
                        if (p->requires_grad) p->accumulate(self.grad);
                },
                "add");
}

Var sub(const Var& a, const Var& b) {
    check_shape(a->value, b->value, "sub");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b->value[i];
    return make(std::move(out), {a, b},
                [](Node& self) {
                    if (self.parents[0]->requires_grad) self.parents[0]->accumulate(self.grad);
                    if (self.parents[1]->requires_grad) {
                        Tensor& g = self.parents[1]->grad_buffer();
                        for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
                    }
                },
                "sub");
}

Var mul(const Var& a, const Var& b) {
    check_shape(a->value, b->value, "mul");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b->value[i];
    return make(std::move(out), {a, b},
                [](Node& self) {
                    auto& x = self.parents[0];
                    auto& y = self.parents[1];
                    if (x->requires_grad) {
                        Tensor& g = x->grad_buffer();
                        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * y->value[i];
                    }
                    if (y->requires_grad) {
                        Tensor& g = y->grad_buffer();
                        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * x->value[i];
                    }
                },
                "mul");
}

Var add_row(const Var& a, const Var& row) {
    require(row->value.rows() == 1 && row->value.cols() == a->value.cols(), "add_row", "bias shape mismatch");
    Tensor out = a->value;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += row->value[c];
    return make(std::move(out), {a, row},
                [](Node& self) {
                    if (self.parents[0]->requires_grad) self.parents[0]->accumulate(self.grad);
                    if (self.parents[1]->requires_grad) {
                        Tensor& g = self.parents[1]->grad_buffer();
                        for (std::size_t r = 0; r < self.grad.rows(); ++r)
                            for (std::size_t c = 0; c < self.grad.cols(); ++c) g[c] += self.grad(r, c);
                    }
                },
                "add_row");
}

Var affine(const Var& a, double scale, double shift) {
    return elementwise(
        a, "affine", [=](double x) { return scale * x + shift; }, [=](double, double) { return scale; });
}

Var relu(const Var& a) {
    return elementwise(
        a, "relu", [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(const Var& a) {
    return elementwise(
        a, "sigmoid", [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](double, double y) { return y * (1.0 - y); });
}

Var tanh(const Var& a) {
    return elementwise(
        a, "tanh", [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var cos(const Var& a) {
    return elementwise(
        a, "cos", [](double x) { return std::cos(x); }, [](double x, double) { return -std::sin(x); });
}

Var square(const Var& a) {
    return elementwise(
        a, "square", [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var sum(const Var& a) {
    double s = 0.0;
    for (double v : a->value.values()) s += v;
    return make(Tensor(1, 1, s), {a},
                [](Node& self) {
                    Tensor& g = self.parents[0]->grad_buffer();
                    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0];
                },
                "sum");
}

Var mean(const Var& a) {
    require(a->value.size() > 0, "mean", "empty tensor");
    return affine(sum(a), 1.0 / static_cast<double>(a->value.size()), 0.0);
}

Var concat_cols(std::span<const Var> parts) {
    require(!parts.empty(), "concat_cols", "no inputs");
    const std::size_t rows = parts.front()->value.rows();
    std::size_t cols = 0;
    for (const auto& p : parts) {
        require(p->value.rows() == rows, "concat_cols", "row counts differ");
        cols += p->value.cols();
    }
    Tensor out(rows, cols);
    std::size_t off = 0;
    for (const auto& p : parts) {
        for (std::size_t r = 0; r < rows; ++r)
            std::copy_n(p->value.row_span(r).data(), p->value.cols(), &out(r, off));
        off += p->value.cols();
    }
    return make(std::move(out), std::vector<Var>(parts.begin(), parts.end()),
                [](Node& self) {
                    std::size_t off = 0;
                    for (auto& p : self.parents) {
                        const std::size_t w = p->value.cols();
                        if (p->requires_grad) {
                            Tensor& g = p->grad_buffer();
                            for (std::size_t r = 0; r < g.rows(); ++r)
                                for (std::size_t c = 0; c < w; ++c) g(r, c) += self.grad(r, off + c);
                        }
                        off += w;
                    }
                },
                "concat_cols");
}

Var gather_rows(const Var& a, std::span<const std::size_t> rows) {
    const std::size_t cols = a->value.cols();
    Tensor out(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i] < a->value.rows(), "gather_rows", "row index out of range");
        std::copy_n(a->value.row_span(rows[i]).data(), cols, &out(i, 0));
    }
    return make(std::move(out), {a},
                [idx = std::vector<std::size_t>(rows.begin(), rows.end())](Node& self) {
                    Tensor& g = self.parents[0]->grad_buffer();
                    const std::size_t cols = g.cols();
                    for (std::size_t i = 0; i < idx.size(); ++i)
                        for (std::size_t c = 0; c < cols; ++c) g(idx[i], c) += self.grad(i, c);
                },
                "gather_rows");
}

Var scatter_rows(const Var& base, std::span<const std::size_t> rows, const Var& replacement) {
    require(replacement->value.rows() == rows.size() && replacement->value.cols() == base->value.cols(),
            "scatter_rows", "replacement shape mismatch");
    Tensor out = base->value;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i] < out.rows(), "scatter_rows", "row index out of range");
        std::copy_n(replacement->value.row_span(i).data(), out.cols(), &out(rows[i], 0));
    }
    return make(std::move(out), {base, replacement},
                [idx = std::vector<std::size_t>(rows.begin(), rows.end())](Node& self) {
                    auto& b = self.parents[0];
                    auto& rep = self.parents[1];
                    const std::size_t cols = self.grad.cols();
                    if (rep->requires_grad) {
                        Tensor& g = rep->grad_buffer();
                        for (std::size_t i = 0; i < idx.size(); ++i)
                            for (std::size_t c = 0; c < cols; ++c) g(i, c) += self.grad(idx[i], c);
                    }
                    if (b->requires_grad) {
                        Tensor pass = self.grad;
                        for (std::size_t r : idx)
                            for (std::size_t c = 0; c < cols; ++c) pass(r, c) = 0.0;
                        b->accumulate(pass);
                    }
                },
                "scatter_rows");
}

Var mask_rows(const Var& a, std::span<const double> mask) {
    require(mask.size() == a->value.rows(), "mask_rows", "mask length mismatch");
    Tensor out = a->value;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) *= mask[r];
    return make(std::move(out), {a},
                [m = std::vector<double>(mask.begin(), mask.end())](Node& self) {
                    Tensor& g = self.parents[0]->grad_buffer();
                    for (std::size_t r = 0; r < g.rows(); ++r)
                        for (std::size_t c = 0; c < g.cols(); ++c) g(r, c) += self.grad(r, c) * m[r];
                },
                "mask_rows");
}

Var segment_attention(const Var& queries, const Var& keys, const Var& vals, std::span<const std::size_t> offsets,
                      std::size_t heads) {
    const Tensor& q = queries->value;
    const Tensor& k = keys->value;
    const Tensor& v = vals->value;
    const std::size_t n = q.rows(), dm = q.cols();
    require(heads > 0 && dm % heads == 0, "segment_attention", "width not divisible by head count");
    require(k.cols() == dm && v.cols() == dm, "segment_attention", "key/value width differs from query width");
    require(k.rows() == v.rows(), "segment_attention", "key and value counts differ");
    require(offsets.size() == n + 1 && offsets.front() == 0 && offsets.back() == k.rows(), "segment_attention",
            "offsets do not partition the keys");
    const std::size_t dh = dm / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Tensor weights(k.rows(), heads);  // softmax weights per (key, head)
    Tensor out(n, dm);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = offsets[i], hi = offsets[i + 1];
        require(lo <= hi, "segment_attention", "offsets must be non-decreasing");
        if (lo == hi) continue;
        for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t c0 = h * dh;
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t e = lo; e < hi; ++e) {
                double s = 0.0;
                for (std::size_t c = c0; c < c0 + dh; ++c) s += q(i, c) * k(e, c);
                weights(e, h) = s * scale;
                mx = std::max(mx, weights(e, h));
            }
            double z = 0.0;
            for (std::size_t e = lo; e < hi; ++e) z += (weights(e, h) = std::exp(weights(e, h) - mx));
            for (std::size_t e = lo; e < hi; ++e) {
                weights(e, h) /= z;
                for (std::size_t c = c0; c < c0 + dh; ++c) out(i, c) += weights(e, h) * v(e, c);
            }
        }
    }

    return make(std::move(out), {queries, keys, vals},
                [w = std::move(weights), off = std::vector<std::size_t>(offsets.begin(), offsets.end()), heads, dh,
                 scale](Node& self) {
                    auto& qn = self.parents[0];
                    auto& kn = self.parents[1];
                    auto& vn = self.parents[2];
                    const Tensor& q = qn->value;
                    const Tensor& k = kn->value;
                    const Tensor& v = vn->value;
                    const Tensor& g = self.grad;
                    Tensor* dq = qn->requires_grad ? &qn->grad_buffer() : nullptr;
                    Tensor* dk = kn->requires_grad ? &kn->grad_buffer() : nullptr;
                    Tensor* dv = vn->requires_grad ? &vn->grad_buffer() : nullptr;
                    std::vector<double> dalpha;
                    for (std::size_t i = 0; i + 1 < off.size(); ++i) {
                        const std::size_t lo = off[i], hi = off[i + 1];
                        if (lo == hi) continue;
                        dalpha.resize(hi - lo);
                        for (std::size_t h = 0; h < heads; ++h) {
                            const std::size_t c0 = h * dh;
                            double dot = 0.0;
                            for (std::size_t e = lo; e < hi; ++e) {
                                double da = 0.0;
                                for (std::size_t c = c0; c < c0 + dh; ++c) {
                                    da += g(i, c) * v(e, c);
                                    if (dv) (*dv)(e, c) += w(e, h) * g(i, c);
                                }
                                dalpha[e - lo] = da;
                                dot += w(e, h) * da;
                            }
                            for (std::size_t e = lo; e < hi; ++e) {
                                const double ds = w(e, h) * (dalpha[e - lo] - dot) * scale;
                                if (ds == 0.0) continue;
                                for (std::size_t c = c0; c < c0 + dh; ++c) {
                                    if (dq) (*dq)(i, c) += ds * k(e, c);
                                    if (dk) (*dk)(e, c) += ds * q(i, c);
                                }
                            }
                        }
                    }
                },
                "segment_attention");
}

Var sigmoid_gram_colsum(const Var& a, const Var& b) {
    const Tensor& av = a->value;
    const Tensor& bv = b->value;
    require(av.same_shape(bv), "sigmoid_gram_colsum", "operands must share a shape");
    const std::size_t n = av.rows(), d = av.cols();
    Tensor out(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double* ai = &av(i, 0);
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = &bv(j, 0);
            double s = 0.0;
            for (std::size_t p = 0; p < d; ++p) s += ai[p] * bj[p];
            out[j] += 1.0 / (1.0 + std::exp(-s));
        }
    }
    return make(std::move(out), {a, b},
                [](Node& self) {
                    auto& an = self.parents[0];
                    auto& bn = self.parents[1];
                    const Tensor& av = an->value;
                    const Tensor& bv = bn->value;
                    const std::size_t n = av.rows(), d = av.cols();
                    Tensor da(n, d), db(n, d);
                    for (std::size_t i = 0; i < n; ++i) {
                        const double* ai = &av(i, 0);
                        double* dai = &da(i, 0);
                        for (std::size_t j = 0; j < n; ++j) {
                            const double gj = self.grad[j];
                            if (gj == 0.0) continue;
                            const double* bj = &bv(j, 0);
                            double s = 0.0;
                            for (std::size_t p = 0; p < d; ++p) s += ai[p] * bj[p];
                            const double y = 1.0 / (1.0 + std::exp(-s));
                            const double coef = gj * y * (1.0 - y);
                            double* dbj = &db(j, 0);
                            for (std::size_t p = 0; p < d; ++p) {
                                dai[p] += coef * bj[p];
                                dbj[p] += coef * ai[p];
                            }
                        }
                    }
                    if (an->requires_grad) an->accumulate(da);
                    if (bn->requires_grad) bn->accumulate(db);
                },
                "sigmoid_gram_colsum");
}

}  // namespace dnim::nn
