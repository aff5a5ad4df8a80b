#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rtcm::flowdata {

enum class Resolution { Low, High };

const char* to_string(Resolution r);
Resolution resolution_from_string(const std::string& s);

// Positions in millimeters, velocities in cm/s, both stored as N x 3 binary32.
struct PointCloudFrame {
    std::vector<float> coords;
    std::vector<float> velocity;
    std::uint64_t time_index = 0;
    double time_seconds = 0.0;

    std::size_t n_points() const { return coords.size() / 3; }
};

struct Frame {
    std::uint64_t time_index = 0;
    double time_seconds = 0.0;
    std::vector<float> velocity;  // N x 3
};

// One simulation of one vessel at one resistance and one temporal resolution.
// Coordinates are shared by every frame.
struct FlowSequence {
    std::string vessel_id;
    Resolution resolution = Resolution::Low;
    double resistance = 1.0;
    double dt = 1.0;
    std::vector<float> coords;  // N x 3
    std::vector<Frame> frames;

    std::size_t n_points() const { return coords.size() / 3; }
    std::size_t n_frames() const { return frames.size(); }
    PointCloudFrame frame(std::size_t i) const;

    // Throws ShapeError / NumericalError when the sequence invariants do not hold.
    void validate() const;
};

// Dataset-level statistics used to condition network inputs.
struct NormalizationStats {
    double resistance_mean = 0.0;
    double resistance_std = 1.0;
    double velocity_scale = 1.0;  // RMS speed over all low-resolution frames
    double coord_center[3] = {0.0, 0.0, 0.0};
    double coord_scale = 1.0;  // largest |coord - center| component
};

// Everything stored in one dataset directory.
struct FlowDataset {
    std::vector<FlowSequence> sequences;
    NormalizationStats stats;
    double dt_low = 0.0;   // 0 when the dataset holds no Low sequence
    double dt_high = 0.0;  // 0 when the dataset holds no High sequence
};

// Indices of a Low sequence and its High counterpart (same vessel, same resistance).
struct SequencePair {
    std::size_t low = 0;
    std::size_t high = 0;
};

std::vector<SequencePair> pair_sequences(const FlowDataset& dataset);

NormalizationStats compute_stats(const std::vector<FlowSequence>& sequences);

// Two adjacent Low frames with the k + 2 High frames spanning them.
struct SampleIndex {
    std::size_t pair = 0;
    std::size_t low_index = 0;

    auto operator<=>(const SampleIndex&) const = default;
};

struct SampleRecord {
    SampleIndex index;
    std::size_t k = 1;
    std::size_t n_points = 0;
    std::vector<float> coords;  // N x 3
    std::vector<float> u_t;     // N x 3, Low frame t
    std::vector<float> u_t1;    // N x 3, Low frame t + 1
    double resistance = 0.0;
    double resistance_normalized = 0.0;
    std::vector<double> times;          // k + 2 normalized frame times in [0, 1]
    std::vector<double> times_seconds;  // k + 2 physical times
    std::vector<std::size_t> high_indices;
    std::vector<float> targets;  // (k + 2) x N x 3, High frames
};

}  // namespace rtcm::flowdata
