#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rtcm/nn/adam.hpp"
#include "rtcm/nn/tensor.hpp"

namespace rtcm::nn {

// Serialized training state.
//
// File layout: the 8-byte magic "RTCMCKPT", a little-endian u64 manifest
// length, the JSON manifest, then little-endian binary32 arrays in manifest
// order (every parameter, then every first moment, then every second moment).
struct Checkpoint {
    static constexpr const char* kFormat = "rtcm-checkpoint/1";

    nlohmann::json model_config;  // architecture, as written by the model module
    std::string config_hash;
    nlohmann::json metadata;      // training settings, split fingerprint, losses
    std::vector<Param<float>> params;
    AdamState<float> optimizer;
    std::uint64_t epoch = 0;
    std::uint64_t seed = 0;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace rtcm::nn
