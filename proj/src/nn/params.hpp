#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "common/rng.hpp"
#include "nn/autograd.hpp"

namespace dnim::nn {

// Named learnable tensors, in insertion order. Each entry is a leaf Var whose
// grad slot receives gradients from backward().
class ParameterSet {
public:
    Var add(const std::string& name, Tensor init);
    const Var& get(const std::string& name) const;
    bool contains(const std::string& name) const;

    std::size_t size() const noexcept { return entries_.size(); }
    const std::string& name(std::size_t i) const { return entries_.at(i).name; }
    const Var& at(std::size_t i) const { return entries_.at(i).var; }
    std::size_t scalar_count() const noexcept;

    void zero_grad();
    // Independent copy of the values (no shared storage, no grads).
    ParameterSet clone() const;
    // Overwrite values from another set with identical names and shapes.
    void assign(const ParameterSet& other);
    bool same_values(const ParameterSet& other) const;

private:
    struct Entry {
        std::string name;
        Var var;
    };
    std::vector<Entry> entries_;
};

// uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, SplitMix64& rng);

// Binary checkpoint: magic, version, tensor count, then (name, rows, cols,
// values) per tensor.
void save_checkpoint(std::ostream& out, const ParameterSet& params);
ParameterSet load_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const ParameterSet& params);
ParameterSet load_checkpoint(const std::string& path);

// Rescales all gradients so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_grad_norm(ParameterSet& params, double max_norm);

class Optimizer {
public:
    virtual ~Optimizer() = default;
    virtual void step(ParameterSet& params) = 0;
};

class Sgd final : public Optimizer {
public:
    explicit Sgd(double lr) : lr_(lr) {}
    void step(ParameterSet& params) override;

private:
    double lr_;
};

class Adam final : public Optimizer {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
    void step(ParameterSet& params) override;

private:
    double lr_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
    std::vector<Tensor> m_, v_;
};

}  // namespace dnim::nn
