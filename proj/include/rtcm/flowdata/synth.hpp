#pragma once

#include <cstdint>
#include <vector>

#include "rtcm/flowdata/geometry.hpp"
#include "rtcm/flowdata/types.hpp"

namespace rtcm::flowdata {

enum class Integrator { Euler, RK4 };

// Synthetic pulsatile-flow generator settings. The defaults are the
// desk-scale dataset: 2 vessels (straight and curved) x 4 resistances,
// 256 points, 50 Low / 100 High frames.
struct SynthConfig {
    std::size_t n_points = 256;
    std::size_t n_vessels = 2;
    double tube_radius = 10.0;    // mm
    double tube_length = 100.0;   // mm
    double curvature = 0.015;     // 1/mm of the most curved vessel; vessel v gets curvature * v / (n_vessels - 1)
    double windkessel_capacitance = 0.09375;
    double cardiac_period = 1.0;  // s
    // Q(t) = a0 + sum_n a_n cos(2 pi n t / T) + b_n sin(2 pi n t / T), stored as [a0, a1, b1, a2, b2, ...].
    // Default: six harmonics of a sharp systolic pulse over a low diastolic
    // plateau; Q stays between 7 and 77 and never reverses.
    std::vector<double> inflow_waveform = {18.46, 4.77, 18.05, -11.7, 8.5, -9.6, -5.92,
                                           2.45,  -7.55, 4.09, 0.58,  0.49, 1.53};
    std::vector<double> resistances = {1.0, 1.5, 2.0, 2.5};
    double dt_low = 0.125;   // 8 Low frames per cardiac cycle
    double dt_high = 0.0625;
    std::size_t n_frames_low = 50;
    std::size_t n_frames_high = 100;
    std::size_t euler_substeps = 1;  // Euler steps per Low frame
    std::size_t rk4_substeps = 4;    // RK4 steps per High frame
    double swirl_gain = 0.1875;      // s; in-plane swirl speed per unit dV/dt
    double instability_bound = 1.0e4;
    std::size_t interp_k = 1;        // frames the dataset must support between Low frames
    std::uint64_t seed = 7;

    // Throws ConfigError naming the first violated constraint.
    void validate() const;

    TubeGeometry vessel_geometry(std::size_t vessel) const;

    // 5 vessels x 20 resistances, 8192 points, 250 Low / 500 High frames.
    static SynthConfig full_scale();
};

// Inflow waveform Q(t).
double inflow(const SynthConfig& cfg, double t);

// Right-hand side of C dV/dt = Q(t) - V / R.
double windkessel_rate(const SynthConfig& cfg, double resistance, double t, double v);

// Amplitude trace V(t_j), t_j = j * dt, j = 0..n_steps, starting from the
// mean-flow equilibrium V(0) = a0 * R. Throws NumericalError when |V|
// exceeds cfg.instability_bound (the step is too large for the integrator).
std::vector<double> windkessel_trace(const SynthConfig& cfg, double resistance, double dt, std::size_t n_steps,
                                     Integrator integrator);

// N x 3 binary32 lumen points of one vessel; deterministic in (cfg.seed, vessel).
std::vector<float> sample_tube_points(const SynthConfig& cfg, std::size_t vessel = 0);

// Poiseuille-like axial profile V (1 - (r/R)^2) along the local tangent plus
// an azimuthal swirl swirl_gain * dVdt * (r/R) * (1 - (r/R)^2). Exactly zero
// at and beyond the wall.
std::vector<float> synth_velocity_field(const TubeGeometry& geometry, const std::vector<float>& coords, double v,
                                        double dvdt, double swirl_gain);

// Low (Euler at dt_low) and High (RK4 at dt_high) sequences for every
// (vessel, resistance), Low before High, vessels outermost.
FlowDataset build_dataset(const SynthConfig& cfg);

}  // namespace rtcm::flowdata
