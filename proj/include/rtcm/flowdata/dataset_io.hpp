#pragma once

#include <filesystem>

#include "rtcm/flowdata/types.hpp"

namespace rtcm::flowdata {

// A dataset is a directory holding
//   manifest.json  format tag, counts, time steps, normalization statistics and,
//                  per sequence, metadata plus float offsets/lengths into data.bin
//   data.bin       little-endian binary32 arrays in manifest order: for each
//                  sequence its coordinates, then its frame velocities.
// Round trips are bit-exact.
inline constexpr const char* kDatasetFormat = "rtcm-dataset/1";

void write_dataset(const std::filesystem::path& dir, const FlowDataset& dataset);

// Validates every length against the manifest before reading arrays; throws
// IoError on malformed manifests, length mismatches or unknown format tags.
FlowDataset read_dataset(const std::filesystem::path& dir);

}  // namespace rtcm::flowdata
