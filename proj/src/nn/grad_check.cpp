#include "nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/error.hpp"

namespace dnim::nn {

GradCheckReport grad_check(ParameterSet& params, const std::function<Var()>& loss, const GradCheckOptions& opts) {
    params.zero_grad();
    auto root = loss();
    backward(root);

    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) analytic.push_back(params.at(i)->grad);

    SplitMix64 rng(opts.seed);
    GradCheckReport report;
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& value = params.at(i)->value;
        std::vector<std::size_t> coords(value.size());
        std::iota(coords.begin(), coords.end(), std::size_t{0});
        if (opts.coords_per_tensor != 0 && coords.size() > opts.coords_per_tensor) {
            for (std::size_t j = 0; j < opts.coords_per_tensor; ++j)
                std::swap(coords[j], coords[j + rng.below(coords.size() - j)]);
            coords.resize(opts.coords_per_tensor);
        }
        for (std::size_t c : coords) {
            const double orig = value[c];
            value[c] = orig + opts.eps;
            const double up = loss()->value[0];
            value[c] = orig - opts.eps;
            const double down = loss()->value[0];
            value[c] = orig;
            const double fd = (up - down) / (2.0 * opts.eps);
            const double g = analytic[i][c];
            if (!std::isfinite(fd) || !std::isfinite(g)) throw NumericError("grad_check: non-finite gradient");
            const double denom = std::max({std::abs(g), std::abs(fd), opts.floor});
            const double err = g == fd ? 0.0 : std::abs(g - fd) / denom;
            ++report.coords_checked;
            if (err > report.max_rel_error) {
                report.max_rel_error = err;
                report.worst_param = params.name(i);
            }
        }
    }
    params.zero_grad();
    return report;
}

}  // namespace dnim::nn
