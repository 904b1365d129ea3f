#include "nn/params.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "common/error.hpp"

namespace dnim::nn {

namespace {

constexpr char kMagic[8] = {'D', 'N', 'I', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError("truncated checkpoint");
    return v;
}

}  // namespace

Var ParameterSet::add(const std::string& name, Tensor init) {
    if (contains(name)) throw UsageError("duplicate parameter name " + name);
    entries_.push_back({name, leaf(std::move(init))});
    return entries_.back().var;
}

const Var& ParameterSet::get(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return e.var;
    throw UsageError("unknown parameter " + name);
}

bool ParameterSet::contains(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return true;
    return false;
}

std::size_t ParameterSet::scalar_count() const noexcept {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.var->value.size();
    return n;
}

void ParameterSet::zero_grad() {
    for (auto& e : entries_) e.var->grad = Tensor(e.var->value.rows(), e.var->value.cols());
}

ParameterSet ParameterSet::clone() const {
    ParameterSet copy;
    for (const auto& e : entries_) copy.add(e.name, e.var->value);
    return copy;
}

void ParameterSet::assign(const ParameterSet& other) {
    if (other.size() != size()) throw UsageError("parameter sets differ in size");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name != other.entries_[i].name ||
            !entries_[i].var->value.same_shape(other.entries_[i].var->value))
            throw UsageError("parameter layout mismatch at " + entries_[i].name);
        entries_[i].var->value = other.entries_[i].var->value;
    }
}

bool ParameterSet::same_values(const ParameterSet& other) const {
    if (other.size() != size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].name != other.entries_[i].name || !(entries_[i].var->value == other.entries_[i].var->value))
            return false;
    return true;
}

Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, SplitMix64& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t(fan_in, fan_out);
    for (auto& v : t.values()) v = rng.uniform(-a, a);
    return t;
}

void save_checkpoint(std::ostream& out, const ParameterSet& params) {
    out.write(kMagic, sizeof kMagic);
    put(out, kVersion);
    put(out, static_cast<std::uint32_t>(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& name = params.name(i);
        const Tensor& t = params.at(i)->value;
        put(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put(out, static_cast<std::uint64_t>(t.rows()));
        put(out, static_cast<std::uint64_t>(t.cols()));
        out.write(reinterpret_cast<const char*>(t.values().data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!out) throw DataError("failed writing checkpoint");
}

ParameterSet load_checkpoint(std::istream& in) {
    char magic[sizeof kMagic] = {};
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw DataError("not a parameter checkpoint");
    const auto version = get<std::uint32_t>(in);
    if (version != kVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
    const auto count = get<std::uint32_t>(in);
    ParameterSet params;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto len = get<std::uint32_t>(in);
        std::string name(len, '\0');
        in.read(name.data(), len);
        const auto rows = get<std::uint64_t>(in);
        const auto cols = get<std::uint64_t>(in);
        std::vector<double> values(rows * cols);
        in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
        if (!in) throw DataError("truncated checkpoint");
        params.add(name, Tensor(rows, cols, std::move(values)));
    }
    return params;
}

void save_checkpoint(const std::string& path, const ParameterSet& params) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    save_checkpoint(out, params);
}

ParameterSet load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    return load_checkpoint(in);
}

double clip_grad_norm(ParameterSet& params, double max_norm) {
    double sq = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i)
        for (double g : params.at(i)->grad.values()) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double f = max_norm / norm;
        for (std::size_t i = 0; i < params.size(); ++i)
            for (double& g : params.at(i)->grad.values()) g *= f;
    }
    return norm;
}

void Sgd::step(ParameterSet& params) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        Node& p = *params.at(i);
        if (!p.grad.same_shape(p.value)) continue;
        for (std::size_t j = 0; j < p.value.size(); ++j) p.value[j] -= lr_ * p.grad[j];
    }
}

void Adam::step(ParameterSet& params) {
    if (m_.empty()) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_.emplace_back(params.at(i)->value.rows(), params.at(i)->value.cols());
            v_.emplace_back(params.at(i)->value.rows(), params.at(i)->value.cols());
        }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Node& p = *params.at(i);
        if (!p.grad.same_shape(p.value)) continue;
        for (std::size_t j = 0; j < p.value.size(); ++j) {
            const double g = p.grad[j];
            m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g;
            v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g * g;
            p.value[j] -= lr_ * (m_[i][j] / c1) / (std::sqrt(v_[i][j] / c2) + eps_);
        }
    }
}

}  // namespace dnim::nn
