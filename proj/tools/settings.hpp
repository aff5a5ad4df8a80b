#pragma once

#include <string>
#include <vector>

#include "rtcm/evalkit/evaluate.hpp"
#include "rtcm/flowdata/synth.hpp"
#include "rtcm/model/model.hpp"
#include "rtcm/trainer/trainer.hpp"
#include "rtcm/util/keyvalue.hpp"

namespace rtcm::cli {

struct EvalSettings {
    std::string split = "test";        // test | val | train | all
    std::string split_seed = "checkpoint";  // integer, or taken from the checkpoint
    std::string stub = "none";         // none | ground_truth
    std::size_t k = 1;                 // only used by the stub
};

struct InterpSettings {
    std::size_t sequence = 0;  // index among the Low sequences of the input dataset
};

void bind(util::ConfigSchema& schema, flowdata::SynthConfig& cfg);
void bind(util::ConfigSchema& schema, model::ModelConfig& model_cfg, trainer::TrainConfig& train_cfg);
void bind(util::ConfigSchema& schema, EvalSettings& cfg);
void bind(util::ConfigSchema& schema, InterpSettings& cfg);

}  // namespace rtcm::cli
