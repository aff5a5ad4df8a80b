#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rtcm/flowdata/split.hpp"
#include "rtcm/flowdata/types.hpp"
#include "rtcm/losses/losses.hpp"
#include "rtcm/model/model.hpp"
#include "rtcm/nn/adam.hpp"
#include "rtcm/nn/checkpoint.hpp"

namespace rtcm::trainer {

// Whether lr_step counts epochs or optimizer iterations.
enum class LrUnit { Epoch, Iteration };

const char* to_string(LrUnit u);
LrUnit lr_unit_from_string(const std::string& s);

struct TrainConfig {
    std::size_t epochs = 60;
    std::size_t batch_size = 32;
    double base_lr = 3e-4;
    std::uint64_t lr_step = 32;
    double lr_gamma = 0.2;
    LrUnit lr_unit = LrUnit::Epoch;
    nn::AdamConfig adam;
    losses::LossConfig loss;
    bool use_rtcm = true;
    std::uint64_t seed = 0;        // initialization and batch order
    std::uint64_t split_seed = 0;  // train/val/test partition
    std::size_t checkpoint_every = 0;  // epochs; 0 disables periodic checkpoints

    void validate() const;
    nlohmann::json to_json() const;
};

struct EpochLog {
    std::size_t epoch = 0;        // 1-based
    std::uint64_t iterations = 0;  // cumulative optimizer steps
    double lr = 0.0;               // rate in effect at the start of the epoch
    double train_loss = 0.0;       // mean of the minibatch losses seen during the epoch
    double val_loss = 0.0;         // frozen parameters; NaN without a validation split
    double seconds = 0.0;          // wall clock; not persisted
};

struct TrainLog {
    std::vector<EpochLog> epochs;
    double initial_train_loss = 0.0;  // whole training split, before the first update
    double final_train_loss = 0.0;    // whole training split, after the last update
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;

    // epoch,iterations,lr,train_loss,val_loss: deterministic, so reruns
    // produce identical files.
    std::string to_csv() const;
};

struct TrainResult {
    nn::Checkpoint final_checkpoint;
    nn::Checkpoint best_checkpoint;  // lowest validation loss (final one without a validation split)
    TrainLog log;
    model::ModelConfig model_config;  // as trained: use_rtcm and normalization filled in
};

struct TrainCallbacks {
    std::function<void(const EpochLog&)> on_epoch;
    std::function<void(const nn::Checkpoint&)> on_checkpoint;  // every checkpoint_every epochs
};

// Architecture actually trained: use_rtcm from the train config,
// normalization from the dataset statistics.
model::ModelConfig resolve_model_config(const model::ModelConfig& base, const TrainConfig& train_cfg,
                                        const flowdata::FlowDataset& dataset);

// Split of every sample of the dataset at the train config's split seed.
flowdata::DatasetSplit make_split(const flowdata::FlowDataset& dataset, const std::vector<flowdata::SequencePair>& pairs,
                                  std::size_t k, std::uint64_t split_seed);

// Seeded minibatch Adam training with step decay. Fully deterministic for
// fixed inputs. Throws NumericalError naming epoch and batch when a loss is
// not finite, ConfigError for an empty training split or k mismatch.
TrainResult train(const flowdata::FlowDataset& dataset, const std::vector<flowdata::SequencePair>& pairs,
                  const flowdata::DatasetSplit& split, const model::ModelConfig& model_cfg, const TrainConfig& train_cfg,
                  const TrainCallbacks& callbacks = {});

// Mean per-sample loss over the samples in batches, without touching parameters.
double dataset_loss(const model::PointNetModel<float>& model, const flowdata::FlowDataset& dataset,
                    const std::vector<flowdata::SequencePair>& pairs, const std::vector<flowdata::SampleIndex>& samples,
                    const losses::LossConfig& loss, std::size_t batch_size);

// FNV-1a over the ids, shapes and bytes of the parameters.
std::uint64_t parameter_hash(const std::vector<nn::Param<float>>& params);

}  // namespace rtcm::trainer
