#pragma once

#include <vector>

#include "rtcm/flowdata/types.hpp"

namespace rtcm::flowdata {

// High frames per Low interval (dt_low / dt_high); throws ConfigError unless
// it is an integer >= 2 divisible by k + 1.
std::size_t frame_stride(double dt_low, double dt_high, std::size_t k);

// Every adjacent Low-frame pair of every sequence pair, in (pair, t) order.
// Throws ConfigError if the High sequences do not contain frames at all
// k + 2 target times.
std::vector<SampleIndex> enumerate_samples(const FlowDataset& dataset, const std::vector<SequencePair>& pairs,
                                           std::size_t k);

SampleRecord make_sample(const FlowDataset& dataset, const std::vector<SequencePair>& pairs,
                         const SampleIndex& index, std::size_t k);

// Resistance after standardization with the dataset statistics.
double normalize_resistance(const NormalizationStats& stats, double resistance);

// Frame position mapped to [0, 1] over a Low sequence of n_low frames;
// fractional positions address interpolated times.
double normalize_time(double low_position, std::size_t n_low);

}  // namespace rtcm::flowdata
