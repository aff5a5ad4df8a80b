#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "rtcm/evalkit/evaluate.hpp"
#include "rtcm/evalkit/report.hpp"
#include "rtcm/trainer/trainer.hpp"

namespace rtcm::trainer {

enum class Arm { Full, NoRtcm, Mse };

const char* to_string(Arm arm);  // "full", "no_rtcm", "mse"
Arm arm_from_string(const std::string& s);

struct ArmResult {
    Arm arm = Arm::Full;
    TrainResult training;
    evalkit::EvalReport evaluation;  // final checkpoint on the test split
};

struct AblationReport {
    std::vector<ArmResult> arms;
    std::uint64_t test_fingerprint = 0;

    evalkit::ReTable table() const;
    nlohmann::json to_json() const;
};

// The arm's train config: NoRtcm drops the resistance-time encoder, Mse
// switches the objective to L_mse. Everything else, seeds included, is shared.
TrainConfig arm_config(Arm arm, const TrainConfig& base);

// Trains and evaluates each arm on one shared split. Throws std::logic_error
// if any arm reports a different test fingerprint.
AblationReport ablation_suite(const flowdata::FlowDataset& dataset, const std::vector<flowdata::SequencePair>& pairs,
                              const model::ModelConfig& model_cfg, const TrainConfig& base,
                              const std::vector<Arm>& arms = {Arm::Full, Arm::NoRtcm, Arm::Mse},
                              const TrainCallbacks& callbacks = {});

}  // namespace rtcm::trainer
