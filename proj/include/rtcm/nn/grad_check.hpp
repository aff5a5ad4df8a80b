#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "rtcm/nn/tape.hpp"

namespace rtcm::nn {

struct GradCheckOptions {
    double step = 1e-5;
    // 0 checks every coordinate; otherwise a seeded sample of this many per tensor.
    std::size_t coords_per_param = 0;
    std::uint64_t seed = 0;
    // Denominator floor for the relative error.
    double floor = 1e-8;
    // A probe whose ReLU/max-pool/loss pattern differs from the base point
    // straddles a kink; the step is shrunk by 10x up to this many times
    // before the coordinate is skipped.
    int kink_retries = 3;
    // Combine the central differences at h and h / 2 as (4 D(h/2) - D(h)) / 3,
    // cancelling the h^2 truncation term. Useful when curvature differs by
    // orders of magnitude across parameters.
    bool richardson = false;
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;
    std::string worst;  // "param[index]" of the largest error
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

// Builds a scalar graph from the current parameter values.
using Objective = std::function<Var(Tape<double>&)>;

// Compares reverse-mode gradients with central differences
// D(h) = (f(x+h) - f(x-h)) / 2h, coordinate by coordinate. Parameters are restored
// before returning.
GradCheckResult grad_check(const Objective& f, std::span<Param<double>* const> params,
                           const GradCheckOptions& options = {});

}  // namespace rtcm::nn
