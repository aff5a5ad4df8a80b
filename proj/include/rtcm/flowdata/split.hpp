#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rtcm/flowdata/types.hpp"

namespace rtcm::flowdata {

struct DatasetSplit {
    std::vector<SampleIndex> train;
    std::vector<SampleIndex> val;
    std::vector<SampleIndex> test;

    // Order-independent fingerprint of the test set, used to assert that
    // experiment arms evaluate on identical data.
    std::uint64_t test_fingerprint() const;
};

// Seeded random partition. Part sizes follow the ratios by largest
// remainder, so each is within 1 of its exact share. Throws ConfigError for
// fewer than 3 records or non-positive ratios.
DatasetSplit split_dataset(const std::vector<SampleIndex>& records, std::array<double, 3> ratios = {8.0, 1.0, 1.0},
                           std::uint64_t seed = 0);

}  // namespace rtcm::flowdata
