#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rtcm/flowdata/types.hpp"
#include "rtcm/nn/checkpoint.hpp"
#include "rtcm/nn/tape.hpp"

namespace rtcm::model {

// What the first decoder layer sees for point i: its own pre-pool feature
// next to the global features (per_point, PointNet segmentation style), or
// only the global features repeated for every point (global_tiled).
enum class DecoderInput { PerPoint, GlobalTiled };

const char* to_string(DecoderInput d);
DecoderInput decoder_input_from_string(const std::string& s);

// Fixed affine maps applied to raw inputs before the first layer and to the
// output after the last one. Taken from the training dataset's statistics.
struct InputNormalization {
    double velocity_scale = 1.0;
    double coord_center[3] = {0.0, 0.0, 0.0};
    double coord_scale = 1.0;
    double resistance_mean = 0.0;
    double resistance_std = 1.0;

    static InputNormalization from_stats(const flowdata::NormalizationStats& stats);
};

struct ModelConfig {
    static constexpr std::size_t kFeatureWidth = 1024;
    static constexpr std::size_t kEncoderLayers = 6;
    static constexpr std::size_t kRtLayers = 3;
    static constexpr std::size_t kDecoderLayers = 7;

    std::size_t k = 1;
    // Output widths of each layer; the input widths follow from k and the
    // other blocks (encoder 9, rt k + 3, decoder 3072/2048/1024, output 3(k + 2)).
    std::vector<std::size_t> encoder_widths = {64, 64, 128, 256, 512, 1024};
    std::vector<std::size_t> rt_widths = {256, 512, 1024};
    std::vector<std::size_t> decoder_hidden = {1024, 512, 256, 128, 64, 32};
    bool use_rtcm = true;
    DecoderInput decoder_input = DecoderInput::PerPoint;
    bool zero_init_output = false;
    InputNormalization norm;

    void validate() const;

    std::size_t encoder_input_width() const { return 9; }
    std::size_t rt_input_width() const { return k + 3; }
    std::size_t decoder_input_width() const;
    std::size_t output_width() const { return 3 * (k + 2); }
    std::size_t frames() const { return k + 2; }

    // Full decoder schedule including input and output widths.
    std::vector<std::size_t> decoder_schedule() const;

    std::size_t parameter_count() const;

    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
    // FNV-1a of the canonical JSON form, as 16 hex digits.
    std::string hash() const;
};

// Network inputs for B point clouds of N points each.
template <typename T>
struct Batch {
    std::size_t clouds = 0;
    std::size_t n_points = 0;
    nn::Tensor<T> point_features;  // [B, N, 9]: u_t, u_t+1, coordinates (normalized)
    nn::Tensor<T> rt_features;     // [B, k + 3]: resistance, then k + 2 times
    nn::Tensor<T> targets;         // [B, N, k + 2, 3] in cm/s; empty if not requested
};

template <typename T>
Batch<T> make_batch(const ModelConfig& cfg, std::span<const flowdata::SampleRecord* const> samples,
                    bool with_targets = true);

template <typename T>
Batch<T> make_batch(const ModelConfig& cfg, const flowdata::SampleRecord& sample, bool with_targets = true);

template <typename T>
class PointNetModel {
public:
    struct Output {
        nn::Var f_pp;  // [B, N, 1024] per-point features before pooling
        nn::Var f_v;   // [B, 1024]
        nn::Var f_rt;  // [B, 1024]; invalid without the resistance-time encoder
        nn::Var y;     // [B, N, k + 2, 3] velocities in cm/s
    };

    // Uniform(+-sqrt(6 / (fan_in + fan_out))) weights, zero biases.
    static PointNetModel init(const ModelConfig& cfg, std::uint64_t seed);

    // Throws ConfigError if the checkpoint's config hash differs from
    // expected_hash (when given) or from the hash of its own config.
    static PointNetModel from_checkpoint(const nn::Checkpoint& ckpt, const std::string& expected_hash = {});

    const ModelConfig& config() const { return cfg_; }
    std::vector<nn::Param<T>>& params() { return params_; }
    const std::vector<nn::Param<T>>& params() const { return params_; }

    // f_pp and f_v from [B, N, 9] inputs.
    std::pair<nn::Var, nn::Var> velocity_encoder(nn::Tape<T>& tape, nn::Var point_features) const;
    // f_rt from [B, k + 3] inputs.
    nn::Var rt_encoder(nn::Tape<T>& tape, nn::Var rt_features) const;
    // Raw normalized output [B, N, 3(k + 2)]; f_rt may be invalid when use_rtcm is false.
    nn::Var decoder(nn::Tape<T>& tape, nn::Var f_pp, nn::Var f_v, nn::Var f_rt, std::size_t n_points) const;

    Output forward(nn::Tape<T>& tape, const Batch<T>& batch) const;

    // Velocities only, [N, k + 2, 3] flattened, without recording gradients.
    std::vector<T> predict(const flowdata::SampleRecord& sample) const;

    template <typename U>
    PointNetModel<U> cast() const;

    // Parameters as binary32 in checkpoint order.
    std::vector<nn::Param<float>> export_params() const;

private:
    ModelConfig cfg_;
    std::vector<nn::Param<T>> params_;
    // Parameter indices per block: weight at 2i, bias at 2i + 1.
    std::size_t encoder_begin_ = 0, rt_begin_ = 0, decoder_begin_ = 0;

    template <typename U>
    friend class PointNetModel;
    void build_layout();
};

extern template class PointNetModel<float>;
extern template class PointNetModel<double>;

}  // namespace rtcm::model
