#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rtcm/evalkit/metrics.hpp"
#include "rtcm/flowdata/types.hpp"
#include "rtcm/model/model.hpp"

namespace rtcm::evalkit {

// Velocity estimates for one sample as [N, k + 2, 3], point-major.
using Predictor = std::function<std::vector<float>(const flowdata::SampleRecord&)>;

// Returns the sample's own targets; for plumbing checks.
Predictor ground_truth_echo();

// Wraps a model by reference; the model must outlive the predictor.
Predictor model_predictor(const model::PointNetModel<float>& model);

// Network and baseline compared on the High frames of one (vessel, resistance)
// sequence that the evaluated samples cover.
struct SequenceEval {
    std::string vessel_id;
    double resistance = 0.0;
    std::size_t samples = 0;
    std::vector<std::size_t> frame_index;  // High-sequence frame numbers, ascending
    std::vector<double> mme_network;
    std::vector<double> mme_baseline;
    double mme_mean_network = 0.0;
    double mme_mean_baseline = 0.0;
    double re_network = 0.0;  // percent
    double re_baseline = 0.0;
    RangeTable range_network, range_baseline, range_gt;

    std::string csv_name() const;
};

struct EvalReport {
    std::vector<SequenceEval> sequences;
    std::size_t k = 1;
    std::size_t frames = 0;
    // Pooled over every evaluated (point, frame) pair / every frame.
    double re_network = 0.0;
    double re_baseline = 0.0;
    double mme_mean_network = 0.0;
    double mme_mean_baseline = 0.0;
    // Unweighted means of the per-sequence values.
    double re_network_avg = 0.0;
    double re_baseline_avg = 0.0;
    RangeTable range_network, range_baseline, range_gt;

    nlohmann::json to_json() const;
};

// Runs predictor and linear baseline over the samples, grouped per sequence.
// A High frame shared by two adjacent samples is scored once, using the
// sample that starts at it. The baseline's endpoint frames are the
// low-resolution inputs. Predictions run on up to `threads` workers and are
// aggregated in sample order, so results do not depend on the thread count.
// Throws ConfigError for an empty sample list.
EvalReport evaluate(const flowdata::FlowDataset& dataset, const std::vector<flowdata::SequencePair>& pairs,
                    const std::vector<flowdata::SampleIndex>& samples, std::size_t k, const Predictor& predictor,
                    std::size_t threads = 1);

// Writes one CSV per sequence (frame_index, mme_network, mme_baseline) and
// summary.json under dir. Floats use 9 significant digits.
void write_report(const std::filesystem::path& dir, const EvalReport& report);

// "%.9g"
std::string format_float(double value);

// Input record for interval [t, t + 1] of a standalone Low sequence (no targets).
flowdata::SampleRecord interval_sample(const flowdata::FlowSequence& low, std::size_t t, std::size_t k);

// Reconstructs a High-rate sequence from a Low one: (n - 1)(k + 1) + 1 frames
// at dt / (k + 1). Interior endpoints come from the interval that starts there.
flowdata::FlowSequence interpolate_sequence(const flowdata::FlowSequence& low, std::size_t k, const Predictor& predictor);

}  // namespace rtcm::evalkit
