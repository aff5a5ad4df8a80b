#include <cmath>
#include <map>
#include <string>
#include <tuple>

#include "rtcm/errors.hpp"
#include "rtcm/flowdata/samples.hpp"
#include "rtcm/flowdata/synth.hpp"
#include "rtcm/util/hash.hpp"

namespace rtcm::flowdata {

const char* to_string(Resolution r) { return r == Resolution::Low ? "low" : "high"; }

Resolution resolution_from_string(const std::string& s) {
    if (s == "low") return Resolution::Low;
    if (s == "high") return Resolution::High;
    throw IoError("unknown resolution tag '" + s + "'");
}

PointCloudFrame FlowSequence::frame(std::size_t i) const {
    const Frame& f = frames.at(i);
    return {coords, f.velocity, f.time_index, f.time_seconds};
}

void FlowSequence::validate() const {
    const std::size_t n = n_points();
    if (n == 0 || coords.size() != 3 * n) throw ShapeError("sequence " + vessel_id + ": empty or ragged coordinates");
    if (!(dt > 0.0) || !(resistance > 0.0)) throw ShapeError("sequence " + vessel_id + ": dt and resistance must be positive");
    for (float c : coords)
        if (!std::isfinite(c)) throw NumericalError("sequence " + vessel_id + ": non-finite coordinate");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const Frame& f = frames[i];
        if (f.velocity.size() != 3 * n) {
            throw ShapeError("sequence " + vessel_id + ": frame " + std::to_string(i) + " has " +
                             std::to_string(f.velocity.size()) + " velocity values, expected " + std::to_string(3 * n));
        }
        for (float v : f.velocity)
            if (!std::isfinite(v)) throw NumericalError("sequence " + vessel_id + ": non-finite velocity");
        if (i > 0 && !(f.time_seconds > frames[i - 1].time_seconds)) {
            throw ShapeError("sequence " + vessel_id + ": frame times are not strictly increasing");
        }
    }
}

void SynthConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("synth config: " + msg); };
    if (n_points < 8) fail("n_points must be >= 8");
    if (n_vessels < 1) fail("n_vessels must be >= 1");
    if (resistances.empty()) fail("at least one resistance is required");
    for (double r : resistances)
        if (!(r > 0.0) || !std::isfinite(r)) fail("resistances must be positive");
    if (!(windkessel_capacitance > 0.0)) fail("windkessel_capacitance must be positive");
    if (!(cardiac_period > 0.0)) fail("cardiac_period must be positive");
    if (inflow_waveform.empty()) fail("inflow_waveform needs at least the mean term");
    if (!(dt_low > 0.0) || !(dt_high > 0.0)) fail("dt_low and dt_high must be positive");
    if (n_frames_low < 2 || n_frames_high < 2) fail("need at least 2 frames per sequence");
    if (euler_substeps < 1 || rk4_substeps < 1) fail("substep counts must be >= 1");
    if (!(instability_bound > 0.0)) fail("instability_bound must be positive");
    if (interp_k < 1) fail("interp_k must be >= 1");
    const double low_span = dt_low * static_cast<double>(n_frames_low);
    const double high_span = dt_high * static_cast<double>(n_frames_high);
    if (std::abs(low_span - high_span) > 1e-9 * std::max(low_span, high_span)) {
        fail("dt_low * n_frames_low must equal dt_high * n_frames_high");
    }
    frame_stride(dt_low, dt_high, interp_k);
    for (std::size_t v = 0; v < n_vessels; ++v) vessel_geometry(v).validate();
}

TubeGeometry SynthConfig::vessel_geometry(std::size_t vessel) const {
    const double fraction = n_vessels > 1 ? static_cast<double>(vessel) / static_cast<double>(n_vessels - 1) : 0.0;
    return {tube_radius, tube_length, curvature * fraction};
}

SynthConfig SynthConfig::full_scale() {
    SynthConfig cfg;
    cfg.n_points = 8192;
    cfg.n_vessels = 5;
    cfg.resistances.clear();
    for (int i = 0; i < 20; ++i) cfg.resistances.push_back(1.0 + 0.1 * i);
    cfg.dt_low = 0.004;   // 1000 steps of 1 ms, every 4th kept
    cfg.dt_high = 0.002;  // 10000 steps of 0.1 ms, every 20th kept
    cfg.n_frames_low = 250;
    cfg.n_frames_high = 500;
    cfg.euler_substeps = 4;
    cfg.rk4_substeps = 20;
    return cfg;
}

std::vector<float> sample_tube_points(const SynthConfig& cfg, std::size_t vessel) {
    const auto points = sample_lumen(cfg.vessel_geometry(vessel), cfg.n_points, util::mix_seed(cfg.seed, vessel));
    std::vector<float> coords;
    coords.reserve(3 * points.size());
    for (const auto& p : points)
        for (double c : p) coords.push_back(static_cast<float>(c));
    return coords;
}

std::vector<float> synth_velocity_field(const TubeGeometry& geometry, const std::vector<float>& coords, double v,
                                        double dvdt, double swirl_gain) {
    std::vector<float> out(coords.size(), 0.0f);
    const double radius = geometry.radius;
    for (std::size_t i = 0; i + 2 < coords.size(); i += 3) {
        const Vec3 p{coords[i], coords[i + 1], coords[i + 2]};
        const TubeLocal local = to_local(geometry, p);
        const double r = local.radial();
        const double rel = r / radius;
        if (rel >= 1.0) continue;
        const auto frame = centerline_frame(geometry, local.s);
        const double profile = 1.0 - rel * rel;
        const double axial = v * profile;
        // Azimuthal direction (-b N + a B) / r, scaled by r so that r = 0 needs no special case.
        const double swirl = swirl_gain * dvdt * profile / radius;
        for (int c = 0; c < 3; ++c) {
            const double azimuthal = -local.b * frame.normal[c] + local.a * frame.binormal[c];
            out[i + c] = static_cast<float>(axial * frame.tangent[c] + swirl * azimuthal);
        }
    }
    return out;
}

namespace {

FlowSequence make_sequence(const SynthConfig& cfg, std::size_t vessel, const std::vector<float>& coords,
                           double resistance, Resolution resolution) {
    const bool low = resolution == Resolution::Low;
    const double frame_dt = low ? cfg.dt_low : cfg.dt_high;
    const std::size_t substeps = low ? cfg.euler_substeps : cfg.rk4_substeps;
    const std::size_t n_frames = low ? cfg.n_frames_low : cfg.n_frames_high;
    const double step = frame_dt / static_cast<double>(substeps);
    const auto trace = windkessel_trace(cfg, resistance, step, (n_frames - 1) * substeps,
                                        low ? Integrator::Euler : Integrator::RK4);
    const TubeGeometry geometry = cfg.vessel_geometry(vessel);

    FlowSequence seq;
    seq.vessel_id = "vessel" + std::to_string(vessel);
    seq.resolution = resolution;
    seq.resistance = resistance;
    seq.dt = frame_dt;
    seq.coords = coords;
    seq.frames.reserve(n_frames);
    for (std::size_t j = 0; j < n_frames; ++j) {
        const std::size_t step_index = j * substeps;
        const double t = static_cast<double>(step_index) * step;
        const double v = trace[step_index];
        const double dvdt = windkessel_rate(cfg, resistance, t, v);
        Frame f;
        f.time_index = j;
        f.time_seconds = static_cast<double>(j) * frame_dt;
        f.velocity = synth_velocity_field(geometry, coords, v, dvdt, cfg.swirl_gain);
        seq.frames.push_back(std::move(f));
    }
    return seq;
}

}  // namespace

FlowDataset build_dataset(const SynthConfig& cfg) {
    cfg.validate();
    FlowDataset ds;
    ds.dt_low = cfg.dt_low;
    ds.dt_high = cfg.dt_high;
    for (std::size_t v = 0; v < cfg.n_vessels; ++v) {
        const auto coords = sample_tube_points(cfg, v);
        for (double r : cfg.resistances) {
            ds.sequences.push_back(make_sequence(cfg, v, coords, r, Resolution::Low));
            ds.sequences.push_back(make_sequence(cfg, v, coords, r, Resolution::High));
        }
    }
    ds.stats = compute_stats(ds.sequences);
    return ds;
}

std::vector<SequencePair> pair_sequences(const FlowDataset& dataset) {
    std::map<std::tuple<std::string, double>, std::size_t> highs;
    for (std::size_t i = 0; i < dataset.sequences.size(); ++i) {
        const auto& s = dataset.sequences[i];
        if (s.resolution == Resolution::High) highs.emplace(std::make_tuple(s.vessel_id, s.resistance), i);
    }
    std::vector<SequencePair> pairs;
    for (std::size_t i = 0; i < dataset.sequences.size(); ++i) {
        const auto& s = dataset.sequences[i];
        if (s.resolution != Resolution::Low) continue;
        auto it = highs.find(std::make_tuple(s.vessel_id, s.resistance));
        if (it == highs.end()) continue;
        if (dataset.sequences[it->second].coords != s.coords) {
            throw ShapeError("sequences of " + s.vessel_id + " disagree on point coordinates");
        }
        pairs.push_back({i, it->second});
    }
    return pairs;
}

NormalizationStats compute_stats(const std::vector<FlowSequence>& sequences) {
    NormalizationStats st;
    std::vector<double> resistances;
    double speed_sq = 0.0;
    std::size_t speed_count = 0;
    double center[3] = {0.0, 0.0, 0.0};
    std::size_t coord_count = 0;
    for (const auto& s : sequences) {
        for (std::size_t i = 0; i + 2 < s.coords.size(); i += 3) {
            for (int c = 0; c < 3; ++c) center[c] += s.coords[i + c];
            ++coord_count;
        }
        if (s.resolution != Resolution::Low) continue;
        resistances.push_back(s.resistance);
        for (const auto& f : s.frames) {
            for (std::size_t i = 0; i + 2 < f.velocity.size(); i += 3) {
                const double x = f.velocity[i], y = f.velocity[i + 1], z = f.velocity[i + 2];
                speed_sq += x * x + y * y + z * z;
                ++speed_count;
            }
        }
    }
    if (coord_count > 0) {
        for (int c = 0; c < 3; ++c) st.coord_center[c] = center[c] / static_cast<double>(coord_count);
        double extent = 0.0;
        for (const auto& s : sequences)
            for (std::size_t i = 0; i + 2 < s.coords.size(); i += 3)
                for (int c = 0; c < 3; ++c) extent = std::max(extent, std::abs(s.coords[i + c] - st.coord_center[c]));
        st.coord_scale = extent > 0.0 ? extent : 1.0;
    }
    if (!resistances.empty()) {
        double mean = 0.0;
        for (double r : resistances) mean += r;
        mean /= static_cast<double>(resistances.size());
        double var = 0.0;
        for (double r : resistances) var += (r - mean) * (r - mean);
        var /= static_cast<double>(resistances.size());
        st.resistance_mean = mean;
        st.resistance_std = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    if (speed_count > 0 && speed_sq > 0.0) st.velocity_scale = std::sqrt(speed_sq / static_cast<double>(speed_count));
    return st;
}

std::size_t frame_stride(double dt_low, double dt_high, std::size_t k) {
    if (!(dt_low > 0.0) || !(dt_high > 0.0)) throw ConfigError("frame alignment: time steps must be positive");
    const double ratio = dt_low / dt_high;
    const double rounded = std::round(ratio);
    if (rounded < 2.0 || std::abs(ratio - rounded) > 1e-9 * ratio) {
        throw ConfigError("frame alignment: dt_low / dt_high = " + std::to_string(ratio) + " is not an integer >= 2");
    }
    const auto high_per_low = static_cast<std::size_t>(rounded);
    if (k < 1 || high_per_low % (k + 1) != 0) {
        throw ConfigError("frame alignment: " + std::to_string(high_per_low) +
                          " High frames per Low interval cannot be split into k + 1 = " + std::to_string(k + 1) +
                          " equal steps");
    }
    return high_per_low;
}

double normalize_resistance(const NormalizationStats& stats, double resistance) {
    return (resistance - stats.resistance_mean) / stats.resistance_std;
}

double normalize_time(double low_position, std::size_t n_low) {
    return n_low > 1 ? low_position / static_cast<double>(n_low - 1) : 0.0;
}

std::vector<SampleIndex> enumerate_samples(const FlowDataset& dataset, const std::vector<SequencePair>& pairs,
                                           std::size_t k) {
    std::vector<SampleIndex> out;
    if (pairs.empty()) return out;
    const std::size_t stride = frame_stride(dataset.dt_low, dataset.dt_high, k);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto& low = dataset.sequences[pairs[p].low];
        const auto& high = dataset.sequences[pairs[p].high];
        if (low.n_frames() < 2) continue;
        const std::size_t last_high = (low.n_frames() - 1) * stride;
        if (last_high >= high.n_frames()) {
            throw ConfigError("frame alignment: " + low.vessel_id + " High sequence has " +
                              std::to_string(high.n_frames()) + " frames, needs " + std::to_string(last_high + 1));
        }
        for (std::size_t t = 0; t + 1 < low.n_frames(); ++t) out.push_back({p, t});
    }
    return out;
}

SampleRecord make_sample(const FlowDataset& dataset, const std::vector<SequencePair>& pairs, const SampleIndex& index,
                         std::size_t k) {
    const std::size_t stride = frame_stride(dataset.dt_low, dataset.dt_high, k);
    const auto& low = dataset.sequences.at(pairs.at(index.pair).low);
    const auto& high = dataset.sequences.at(pairs.at(index.pair).high);
    if (index.low_index + 1 >= low.n_frames()) throw ShapeError("sample index past the end of the Low sequence");

    SampleRecord rec;
    rec.index = index;
    rec.k = k;
    rec.n_points = low.n_points();
    rec.coords = low.coords;
    rec.u_t = low.frames[index.low_index].velocity;
    rec.u_t1 = low.frames[index.low_index + 1].velocity;
    rec.resistance = low.resistance;
    rec.resistance_normalized = normalize_resistance(dataset.stats, low.resistance);
    rec.targets.reserve((k + 2) * 3 * rec.n_points);
    const std::size_t step = stride / (k + 1);
    for (std::size_t j = 0; j < k + 2; ++j) {
        const std::size_t h = index.low_index * stride + j * step;
        if (h >= high.n_frames()) throw ConfigError("frame alignment: target frame beyond the High sequence");
        const double position = static_cast<double>(index.low_index) + static_cast<double>(j) / static_cast<double>(k + 1);
        rec.times.push_back(normalize_time(position, low.n_frames()));
        rec.times_seconds.push_back(high.frames[h].time_seconds);
        rec.high_indices.push_back(h);
        const auto& v = high.frames[h].velocity;
        rec.targets.insert(rec.targets.end(), v.begin(), v.end());
    }
    return rec;
}

}  // namespace rtcm::flowdata
