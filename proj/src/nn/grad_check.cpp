#include "rtcm/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rtcm/util/random.hpp"

namespace rtcm::nn {
namespace {

struct Probe {
    double value;
    std::uint64_t pattern;
};

Probe evaluate(const Objective& f) {
    Tape<double> tape;
    tape.track_pattern(true);
    const Var out = f(tape);
    return {tape.value(out).data.at(0), tape.pattern()};
}

}  // namespace

GradCheckResult grad_check(const Objective& f, std::span<Param<double>* const> params,
                           const GradCheckOptions& options) {
    Tape<double> tape;
    tape.track_pattern(true);
    const Var out = f(tape);
    if (tape.value(out).size() != 1) throw ShapeError("grad_check: objective must be scalar");
    tape.backward(out);
    const std::uint64_t base_pattern = tape.pattern();

    GradCheckResult result;
    util::Rng rng(options.seed);
    for (Param<double>* p : params) {
        const auto analytic_span = tape.param_grad(*p);
        std::vector<double> analytic(analytic_span.begin(), analytic_span.end());
        analytic.resize(p->value.size(), 0.0);

        std::vector<std::size_t> coords(p->value.size());
        std::iota(coords.begin(), coords.end(), std::size_t{0});
        if (options.coords_per_param > 0 && coords.size() > options.coords_per_param) {
            rng.shuffle(coords);
            coords.resize(options.coords_per_param);
            std::sort(coords.begin(), coords.end());
        }

        for (std::size_t i : coords) {
            double& x = p->value.data[i];
            const double saved = x;
            double h = options.step;
            bool smooth = false;
            double numeric = 0.0;
            for (int attempt = 0; attempt <= options.kink_retries; ++attempt, h /= 10.0) {
                bool same_piece = true;
                auto central = [&](double step) {
                    x = saved + step;
                    const Probe plus = evaluate(f);
                    x = saved - step;
                    const Probe minus = evaluate(f);
                    x = saved;
                    same_piece = same_piece && plus.pattern == base_pattern && minus.pattern == base_pattern;
                    return (plus.value - minus.value) / (2.0 * step);
                };
                const double d = central(h);
                numeric = options.richardson ? (4.0 * central(h / 2.0) - d) / 3.0 : d;
                if (same_piece) {
                    smooth = true;
                    break;
                }
            }
            if (!smooth) {
                ++result.skipped;
                continue;
            }
            const double a = analytic[i];
            const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
            const double rel = std::abs(a - numeric) / denom;
            ++result.checked;
            if (rel > result.max_rel_error || result.worst.empty()) {
                result.max_rel_error = std::max(rel, result.max_rel_error);
                if (rel >= result.max_rel_error) {
                    result.worst = p->id + "[" + std::to_string(i) + "]";
                    result.worst_analytic = a;
                    result.worst_numeric = numeric;
                }
            }
        }
    }
    return result;
}

}  // namespace rtcm::nn
