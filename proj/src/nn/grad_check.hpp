#pragma once

#include <cstdint>
#include <functional>

#include "nn/params.hpp"

namespace dnim::nn {

struct GradCheckOptions {
    double eps = 1e-5;
    std::size_t coords_per_tensor = 8;  // 0 checks every coordinate
    std::uint64_t seed = 0;
    // Denominator floor: error = |g - fd| / max(|g|, |fd|, floor).
    double floor = 1e-8;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t coords_checked = 0;
    std::string worst_param;
};

// Compares reverse-mode gradients of `loss` (a scalar built from `params`)
// with central differences over sampled coordinates. `loss` is re-evaluated
// at each perturbation, so it must read parameter values afresh.
GradCheckReport grad_check(ParameterSet& params, const std::function<Var()>& loss, const GradCheckOptions& opts = {});

}  // namespace dnim::nn
