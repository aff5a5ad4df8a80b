#include "rtcm/trainer/ablation.hpp"

#include <stdexcept>

#include "rtcm/errors.hpp"
#include "rtcm/util/hash.hpp"

namespace rtcm::trainer {

const char* to_string(Arm arm) {
    switch (arm) {
        case Arm::Full: return "full";
        case Arm::NoRtcm: return "no_rtcm";
        case Arm::Mse: return "mse";
    }
    return "?";
}

Arm arm_from_string(const std::string& s) {
    if (s == "full") return Arm::Full;
    if (s == "no_rtcm") return Arm::NoRtcm;
    if (s == "mse") return Arm::Mse;
    throw ConfigError("unknown ablation arm '" + s + "' (full, no_rtcm, mse)");
}

TrainConfig arm_config(Arm arm, const TrainConfig& base) {
    TrainConfig cfg = base;
    cfg.use_rtcm = arm != Arm::NoRtcm && base.use_rtcm;
    if (arm == Arm::Mse) cfg.loss.kind = losses::LossKind::MSE;
    if (arm != Arm::Mse) cfg.loss.kind = losses::LossKind::MagOri;
    return cfg;
}

AblationReport ablation_suite(const flowdata::FlowDataset& dataset, const std::vector<flowdata::SequencePair>& pairs,
                              const model::ModelConfig& model_cfg, const TrainConfig& base, const std::vector<Arm>& arms,
                              const TrainCallbacks& callbacks) {
    const auto split = make_split(dataset, pairs, model_cfg.k, base.split_seed);
    AblationReport report;
    report.test_fingerprint = split.test_fingerprint();
    for (Arm arm : arms) {
        ArmResult r;
        r.arm = arm;
        r.training = train(dataset, pairs, split, model_cfg, arm_config(arm, base), callbacks);
        const std::string fp = r.training.final_checkpoint.metadata.at("test_fingerprint").get<std::string>();
        if (fp != util::hex64(report.test_fingerprint)) {
            throw std::logic_error(std::string("arm ") + to_string(arm) + " was tested on a different split");
        }
        const auto net = model::PointNetModel<float>::from_checkpoint(r.training.final_checkpoint);
        r.evaluation = evalkit::evaluate(dataset, pairs, split.test, model_cfg.k, evalkit::model_predictor(net));
        report.arms.push_back(std::move(r));
    }
    return report;
}

evalkit::ReTable AblationReport::table() const {
    std::vector<std::pair<std::string, nlohmann::json>> s;
    for (const auto& a : arms) s.emplace_back(to_string(a.arm), a.evaluation.to_json());
    return evalkit::re_table(s);
}

nlohmann::json AblationReport::to_json() const {
    nlohmann::json arms_json = nlohmann::json::array();
    for (const auto& a : arms) {
        arms_json.push_back({
            {"arm", to_string(a.arm)},
            {"config_hash", a.training.final_checkpoint.config_hash},
            {"initial_train_loss", a.training.log.initial_train_loss},
            {"final_train_loss", a.training.log.final_train_loss},
            {"evaluation", a.evaluation.to_json()},
        });
    }
    return {{"test_fingerprint", util::hex64(test_fingerprint)}, {"arms", arms_json}};
}

}  // namespace rtcm::trainer
