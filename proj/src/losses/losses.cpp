#include "rtcm/losses/losses.hpp"

#include <cmath>
#include <string>

#include "rtcm/errors.hpp"
#include "rtcm/util/hash.hpp"

namespace rtcm::losses {

void LossConfig::validate() const {
    if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ConfigError("loss weights alpha and beta must be >= 0");
    if (kind == LossKind::MagOri && alpha == 0.0 && beta == 0.0) throw ConfigError("alpha and beta cannot both be 0");
    if (!(ori_epsilon > 0.0)) throw ConfigError("ori_epsilon must be > 0");
}

const char* to_string(LossKind kind) { return kind == LossKind::MagOri ? "magori" : "mse"; }

LossKind loss_kind_from_string(const std::string& s) {
    if (s == "magori") return LossKind::MagOri;
    if (s == "mse") return LossKind::MSE;
    throw ConfigError("unknown loss kind '" + s + "' (expected magori or mse)");
}

const char* to_string(Reduction r) { return r == Reduction::PerFrame ? "per_frame" : "flattened"; }

Reduction reduction_from_string(const std::string& s) {
    if (s == "per_frame") return Reduction::PerFrame;
    if (s == "flattened") return Reduction::Flattened;
    throw ConfigError("unknown loss reduction '" + s + "' (expected per_frame or flattened)");
}

std::size_t group_size(const LossConfig& cfg, std::size_t frames) {
    return cfg.reduction == Reduction::PerFrame ? 3 : 3 * frames;
}

namespace {

template <typename T>
std::size_t check_shapes(std::span<const T> pred, std::span<const T> gt, std::size_t group, const char* op) {
    if (pred.size() != gt.size()) {
        throw ShapeError(std::string(op) + ": prediction has " + std::to_string(pred.size()) + " values, ground truth " +
                         std::to_string(gt.size()));
    }
    if (group == 0 || pred.size() % group != 0 || pred.empty()) {
        throw ShapeError(std::string(op) + ": " + std::to_string(pred.size()) + " values do not split into vectors of " +
                         std::to_string(group));
    }
    return pred.size() / group;
}

void mix(std::uint64_t* pattern, util::Fnv1a& h) {
    if (pattern) *pattern ^= h.digest() + 0x9e3779b97f4a7c15ULL + (*pattern << 6) + (*pattern >> 2);
}

}  // namespace

template <typename T>
double magnitude_loss(std::span<const T> pred, std::span<const T> gt, std::size_t group, double eps,
                      std::span<T> grad, std::uint64_t* pattern) {
    const std::size_t count = check_shapes(pred, gt, group, "magnitude_loss");
    if (!grad.empty() && grad.size() != pred.size()) throw ShapeError("magnitude_loss: gradient buffer size mismatch");
    util::Fnv1a h;
    double total = 0.0;
    const double inv = 1.0 / static_cast<double>(count);
    for (std::size_t g = 0; g < count; ++g) {
        const T* p = pred.data() + g * group;
        const T* y = gt.data() + g * group;
        double pp = 0.0, yy = 0.0;
        for (std::size_t c = 0; c < group; ++c) {
            pp += static_cast<double>(p[c]) * p[c];
            yy += static_cast<double>(y[c]) * y[c];
        }
        const double diff = std::sqrt(yy) - std::sqrt(pp);
        total += std::abs(diff);
        const int sign = (diff > 0.0) - (diff < 0.0);
        if (pattern) h.update_u64(static_cast<std::uint64_t>(sign + 1));
        if (!grad.empty()) {
            const double scale = -sign * inv / std::sqrt(pp + eps * eps);
            for (std::size_t c = 0; c < group; ++c) grad[g * group + c] = static_cast<T>(scale * p[c]);
        }
    }
    mix(pattern, h);
    return total * inv;
}

template <typename T>
double orientation_loss(std::span<const T> pred, std::span<const T> gt, std::size_t group, double eps,
                        std::span<T> grad, std::uint64_t* pattern) {
    const std::size_t count = check_shapes(pred, gt, group, "orientation_loss");
    if (!grad.empty() && grad.size() != pred.size()) throw ShapeError("orientation_loss: gradient buffer size mismatch");
    util::Fnv1a h;
    double total = 0.0;
    const double inv = 1.0 / static_cast<double>(count);
    for (std::size_t g = 0; g < count; ++g) {
        const T* p = pred.data() + g * group;
        const T* y = gt.data() + g * group;
        double pp = 0.0, yy = 0.0, py = 0.0;
        for (std::size_t c = 0; c < group; ++c) {
            pp += static_cast<double>(p[c]) * p[c];
            yy += static_cast<double>(y[c]) * y[c];
            py += static_cast<double>(p[c]) * y[c];
        }
        const double ny = std::sqrt(yy);
        const bool masked = ny < eps;
        if (pattern) h.update_u64(masked);
        if (masked) {
            if (!grad.empty())
                for (std::size_t c = 0; c < group; ++c) grad[g * group + c] = T(0);
            continue;
        }
        const double np = std::sqrt(pp);
        const double denom = ny * np + eps;
        total += 1.0 - py / denom;
        if (!grad.empty()) {
            // d/dp (py / denom) = y / denom - py * ny * (p / np) / denom^2
            const double radial = np > 0.0 ? py * ny / (np * denom * denom) : 0.0;
            for (std::size_t c = 0; c < group; ++c) {
                grad[g * group + c] = static_cast<T>(-inv * (y[c] / denom - radial * p[c]));
            }
        }
    }
    mix(pattern, h);
    return total * inv;
}

template <typename T>
double mse_loss(std::span<const T> pred, std::span<const T> gt, std::span<T> grad) {
    check_shapes(pred, gt, 1, "mse_loss");
    if (!grad.empty() && grad.size() != pred.size()) throw ShapeError("mse_loss: gradient buffer size mismatch");
    const double inv = 1.0 / static_cast<double>(pred.size());
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(pred[i]) - gt[i];
        total += d * d;
        if (!grad.empty()) grad[i] = static_cast<T>(2.0 * d * inv);
    }
    return total * inv;
}

template <typename T>
double combined_loss(std::span<const T> pred, std::span<const T> gt, std::size_t frames, const LossConfig& cfg) {
    const std::size_t group = group_size(cfg, frames);
    return cfg.alpha * magnitude_loss(pred, gt, group, cfg.ori_epsilon) +
           cfg.beta * orientation_loss(pred, gt, group, cfg.ori_epsilon);
}

namespace {

template <typename T>
std::size_t frames_of(const nn::Tensor<T>& t) {
    // Predictions are [..., frames, 3] or [..., frames * 3].
    if (t.shape.size() >= 2 && t.shape.back() == 3) return t.shape[t.shape.size() - 2];
    return t.channels() / 3;
}

template <typename T, typename Fn>
nn::Var scalar_loss_op(nn::Tape<T>& tape, nn::Var pred, const nn::Tensor<T>& gt, const char* op, Fn fn) {
    const auto& pv = tape.value(pred);
    if (pv.size() != gt.size()) {
        throw ShapeError(std::string(op) + ": prediction " + nn::to_string(pv.shape) + " vs ground truth " +
                         nn::to_string(gt.shape));
    }
    std::vector<T> grad(pv.size());
    std::uint64_t pattern = 0;
    const double value = fn(pv.span(), gt.span(), std::span<T>(grad), tape.tracking_pattern() ? &pattern : nullptr);
    if (tape.tracking_pattern()) tape.note_pattern(pattern);
    return tape.record(nn::Tensor<T>(nn::Shape{1}, {static_cast<T>(value)}), {pred},
                       [pred, grad = std::move(grad)](nn::Tape<T>& t, nn::Var self) {
                           const T g = t.grad(self)[0];
                           auto& dp = t.grad(pred);
                           for (std::size_t i = 0; i < grad.size(); ++i) dp[i] += g * grad[i];
                       });
}

}  // namespace

template <typename T>
nn::Var magnitude_loss(nn::Tape<T>& tape, nn::Var pred, const nn::Tensor<T>& gt, const LossConfig& cfg) {
    const std::size_t group = group_size(cfg, frames_of(gt));
    return scalar_loss_op(tape, pred, gt, "magnitude_loss", [&](auto p, auto y, auto g, auto* pat) {
        return magnitude_loss<T>(p, y, group, cfg.ori_epsilon, g, pat);
    });
}

template <typename T>
nn::Var orientation_loss(nn::Tape<T>& tape, nn::Var pred, const nn::Tensor<T>& gt, const LossConfig& cfg) {
    const std::size_t group = group_size(cfg, frames_of(gt));
    return scalar_loss_op(tape, pred, gt, "orientation_loss", [&](auto p, auto y, auto g, auto* pat) {
        return orientation_loss<T>(p, y, group, cfg.ori_epsilon, g, pat);
    });
}

template <typename T>
nn::Var mse_loss(nn::Tape<T>& tape, nn::Var pred, const nn::Tensor<T>& gt) {
    return scalar_loss_op(tape, pred, gt, "mse_loss",
                          [&](auto p, auto y, auto g, auto*) { return mse_loss<T>(p, y, g); });
}

template <typename T>
nn::Var training_loss(nn::Tape<T>& tape, nn::Var pred, const nn::Tensor<T>& gt, const LossConfig& cfg) {
    if (cfg.kind == LossKind::MSE) return mse_loss(tape, pred, gt);
    const std::size_t group = group_size(cfg, frames_of(gt));
    return scalar_loss_op(tape, pred, gt, "combined_loss", [&](auto p, auto y, auto g, auto* pat) {
        std::vector<T> g_mag(g.size()), g_ori(g.size());
        const double mag = magnitude_loss<T>(p, y, group, cfg.ori_epsilon, std::span<T>(g_mag), pat);
        const double ori = orientation_loss<T>(p, y, group, cfg.ori_epsilon, std::span<T>(g_ori), pat);
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] = static_cast<T>(cfg.alpha * g_mag[i] + cfg.beta * g_ori[i]);
        }
        return cfg.alpha * mag + cfg.beta * ori;
    });
}

#define RTCM_INSTANTIATE_LOSSES(T)                                                                                \
    template double magnitude_loss<T>(std::span<const T>, std::span<const T>, std::size_t, double, std::span<T>, \
                                      std::uint64_t*);                                                           \
    template double orientation_loss<T>(std::span<const T>, std::span<const T>, std::size_t, double,            \
                                        std::span<T>, std::uint64_t*);                                           \
    template double mse_loss<T>(std::span<const T>, std::span<const T>, std::span<T>);                           \
    template double combined_loss<T>(std::span<const T>, std::span<const T>, std::size_t, const LossConfig&);    \
    template nn::Var magnitude_loss<T>(nn::Tape<T>&, nn::Var, const nn::Tensor<T>&, const LossConfig&);          \
    template nn::Var orientation_loss<T>(nn::Tape<T>&, nn::Var, const nn::Tensor<T>&, const LossConfig&);        \
    template nn::Var mse_loss<T>(nn::Tape<T>&, nn::Var, const nn::Tensor<T>&);                                   \
    template nn::Var training_loss<T>(nn::Tape<T>&, nn::Var, const nn::Tensor<T>&, const LossConfig&);

RTCM_INSTANTIATE_LOSSES(float)
RTCM_INSTANTIATE_LOSSES(double)

}  // namespace rtcm::losses
