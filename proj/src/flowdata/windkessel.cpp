#include <cmath>
#include <numbers>
#include <string>

#include "rtcm/errors.hpp"
#include "rtcm/flowdata/synth.hpp"

namespace rtcm::flowdata {

double inflow(const SynthConfig& cfg, double t) {
    const auto& c = cfg.inflow_waveform;
    if (c.empty()) return 0.0;
    double q = c[0];
    const double w = 2.0 * std::numbers::pi / cfg.cardiac_period;
    for (std::size_t n = 1; 2 * n - 1 < c.size(); ++n) {
        const double phase = w * static_cast<double>(n) * t;
        q += c[2 * n - 1] * std::cos(phase);
        if (2 * n < c.size()) q += c[2 * n] * std::sin(phase);
    }
    return q;
}

double windkessel_rate(const SynthConfig& cfg, double resistance, double t, double v) {
    return (inflow(cfg, t) - v / resistance) / cfg.windkessel_capacitance;
}

std::vector<double> windkessel_trace(const SynthConfig& cfg, double resistance, double dt, std::size_t n_steps,
                                     Integrator integrator) {
    if (!(resistance > 0.0) || !(dt > 0.0) || n_steps < 1) {
        throw ConfigError("windkessel_trace needs resistance > 0, dt > 0 and at least one step");
    }
    std::vector<double> trace;
    trace.reserve(n_steps + 1);
    double v = cfg.inflow_waveform.empty() ? 0.0 : cfg.inflow_waveform[0] * resistance;
    trace.push_back(v);
    for (std::size_t i = 0; i < n_steps; ++i) {
        const double t = static_cast<double>(i) * dt;
        if (integrator == Integrator::Euler) {
            v += dt * windkessel_rate(cfg, resistance, t, v);
        } else {
            const double k1 = windkessel_rate(cfg, resistance, t, v);
            const double k2 = windkessel_rate(cfg, resistance, t + 0.5 * dt, v + 0.5 * dt * k1);
            const double k3 = windkessel_rate(cfg, resistance, t + 0.5 * dt, v + 0.5 * dt * k2);
            const double k4 = windkessel_rate(cfg, resistance, t + dt, v + dt * k3);
            v += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if (!std::isfinite(v) || std::abs(v) > cfg.instability_bound) {
            throw NumericalError(std::string(integrator == Integrator::Euler ? "Euler" : "RK4") +
                                 " step size too large: |V| exceeded " + std::to_string(cfg.instability_bound) +
                                 " at step " + std::to_string(i + 1) + " (dt=" + std::to_string(dt) +
                                 ", R=" + std::to_string(resistance) + ")");
        }
        trace.push_back(v);
    }
    return trace;
}

}  // namespace rtcm::flowdata
