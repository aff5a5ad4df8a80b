#include "rtcm/nn/adam.hpp"

#include <cmath>
#include <string>

namespace rtcm::nn {

template <typename T>
AdamState<T> AdamState<T>::zeros_like(std::span<const Param<T>> params) {
    AdamState<T> s;
    for (const auto& p : params) {
        s.m.emplace_back(p.value.size(), T(0));
        s.v.emplace_back(p.value.size(), T(0));
    }
    return s;
}

template <typename T>
void adam_step(std::span<Param<T>> params, AdamState<T>& state, double lr, const AdamConfig& cfg) {
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw ShapeError("adam_step: optimizer state holds " + std::to_string(state.m.size()) + " moments for " +
                         std::to_string(params.size()) + " parameters");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& p = params[i];
        if (p.grad.size() != p.value.size() || state.m[i].size() != p.value.size() ||
            state.v[i].size() != p.value.size()) {
            throw ShapeError("adam_step: moment/gradient shape mismatch for " + p.id);
        }
        for (T g : p.grad) {
            if (!std::isfinite(g)) throw NumericalError("adam_step: non-finite gradient in parameter " + p.id);
        }
    }

    state.step += 1;
    const double t = static_cast<double>(state.step);
    const T b1 = static_cast<T>(cfg.beta1);
    const T b2 = static_cast<T>(cfg.beta2);
    const T one_b1 = static_cast<T>(1.0 - cfg.beta1);
    const T one_b2 = static_cast<T>(1.0 - cfg.beta2);
    const T inv_bc1 = static_cast<T>(1.0 / (1.0 - std::pow(cfg.beta1, t)));
    const T inv_bc2 = static_cast<T>(1.0 / (1.0 - std::pow(cfg.beta2, t)));
    const T step = static_cast<T>(lr);
    const T eps = static_cast<T>(cfg.epsilon);

    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& w = params[i].value.data;
        const auto& g = params[i].grad;
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = b1 * m[j] + one_b1 * g[j];
            v[j] = b2 * v[j] + one_b2 * g[j] * g[j];
            const T m_hat = m[j] * inv_bc1;
            const T v_hat = v[j] * inv_bc2;
            w[j] -= step * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

double step_lr(std::uint64_t epoch, double base_lr, std::uint64_t step_size, double gamma) {
    const std::uint64_t decays = step_size == 0 ? 0 : epoch / step_size;
    double lr = base_lr;
    for (std::uint64_t i = 0; i < decays; ++i) lr *= gamma;
    return lr;
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step<float>(std::span<Param<float>>, AdamState<float>&, double, const AdamConfig&);
template void adam_step<double>(std::span<Param<double>>, AdamState<double>&, double, const AdamConfig&);

}  // namespace rtcm::nn
