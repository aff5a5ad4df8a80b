#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rtcm/nn/tensor.hpp"

namespace rtcm::nn {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// First/second moments per parameter, in the same order as the parameter list.
template <typename T>
struct AdamState {
    std::vector<std::vector<T>> m;
    std::vector<std::vector<T>> v;
    std::uint64_t step = 0;

    static AdamState zeros_like(std::span<const Param<T>> params);
};

// One bias-corrected Adam update using Param::grad. Throws NumericalError
// naming the parameter if any gradient entry is not finite; nothing is
// modified in that case.
template <typename T>
void adam_step(std::span<Param<T>> params, AdamState<T>& state, double lr, const AdamConfig& cfg = {});

// lr = base_lr * gamma^floor(epoch / step_size)
double step_lr(std::uint64_t epoch, double base_lr, std::uint64_t step_size = 32, double gamma = 0.2);

}  // namespace rtcm::nn
