#include "rtcm/trainer/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "rtcm/errors.hpp"
#include "rtcm/flowdata/samples.hpp"
#include "rtcm/util/hash.hpp"
#include "rtcm/util/random.hpp"

namespace rtcm::trainer {

using flowdata::SampleIndex;
using flowdata::SampleRecord;
using model::PointNetModel;

const char* to_string(LrUnit u) { return u == LrUnit::Epoch ? "epoch" : "iteration"; }

LrUnit lr_unit_from_string(const std::string& s) {
    if (s == "epoch") return LrUnit::Epoch;
    if (s == "iteration") return LrUnit::Iteration;
    throw ConfigError("lr_unit must be epoch or iteration, got '" + s + "'");
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(base_lr > 0.0) || !std::isfinite(base_lr)) throw ConfigError("base_lr must be positive");
    if (lr_step < 1) throw ConfigError("lr_step must be >= 1");
    if (!(lr_gamma > 0.0) || !std::isfinite(lr_gamma)) throw ConfigError("lr_gamma must be positive");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 && adam.epsilon > 0.0)) {
        throw ConfigError("adam betas must lie in [0, 1) and epsilon must be positive");
    }
    loss.validate();
}

nlohmann::json TrainConfig::to_json() const {
    return {
        {"epochs", epochs},
        {"batch_size", batch_size},
        {"base_lr", base_lr},
        {"lr_step", lr_step},
        {"lr_gamma", lr_gamma},
        {"lr_unit", to_string(lr_unit)},
        {"adam", {{"beta1", adam.beta1}, {"beta2", adam.beta2}, {"epsilon", adam.epsilon}}},
        {"loss",
         {{"kind", losses::to_string(loss.kind)},
          {"alpha", loss.alpha},
          {"beta", loss.beta},
          {"ori_epsilon", loss.ori_epsilon},
          {"reduction", losses::to_string(loss.reduction)}}},
        {"use_rtcm", use_rtcm},
        {"seed", seed},
        {"split_seed", split_seed},
        {"checkpoint_every", checkpoint_every},
    };
}

std::string TrainLog::to_csv() const {
    std::string out = "epoch,iterations,lr,train_loss,val_loss\n";
    char buf[160];
    for (const auto& e : epochs) {
        std::snprintf(buf, sizeof buf, "%zu,%llu,%.9g,%.9g,%.9g\n", e.epoch, static_cast<unsigned long long>(e.iterations),
                      e.lr, e.train_loss, e.val_loss);
        out += buf;
    }
    return out;
}

model::ModelConfig resolve_model_config(const model::ModelConfig& base, const TrainConfig& train_cfg,
                                        const flowdata::FlowDataset& dataset) {
    model::ModelConfig cfg = base;
    cfg.use_rtcm = train_cfg.use_rtcm;
    cfg.norm = model::InputNormalization::from_stats(dataset.stats);
    cfg.validate();
    return cfg;
}

flowdata::DatasetSplit make_split(const flowdata::FlowDataset& dataset, const std::vector<flowdata::SequencePair>& pairs,
                                  std::size_t k, std::uint64_t split_seed) {
    return flowdata::split_dataset(flowdata::enumerate_samples(dataset, pairs, k), {8.0, 1.0, 1.0}, split_seed);
}

std::uint64_t parameter_hash(const std::vector<nn::Param<float>>& params) {
    util::Fnv1a h;
    for (const auto& p : params) {
        h.update(p.id);
        for (std::size_t d : p.value.shape) h.update_u64(d);
        h.update(std::as_bytes(p.value.span()));
    }
    return h.digest();
}

namespace {

std::vector<SampleRecord> load_records(const flowdata::FlowDataset& dataset, const std::vector<flowdata::SequencePair>& pairs,
                                       std::span<const SampleIndex> indices, std::size_t k) {
    std::vector<SampleRecord> out;
    out.reserve(indices.size());
    for (const auto& idx : indices) out.push_back(flowdata::make_sample(dataset, pairs, idx, k));
    return out;
}

std::vector<const SampleRecord*> pointers(const std::vector<SampleRecord>& records) {
    std::vector<const SampleRecord*> out;
    for (const auto& r : records) out.push_back(&r);
    return out;
}

}  // namespace

double dataset_loss(const PointNetModel<float>& m, const flowdata::FlowDataset& dataset,
                    const std::vector<flowdata::SequencePair>& pairs, const std::vector<SampleIndex>& samples,
                    const losses::LossConfig& loss, std::size_t batch_size) {
    if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
    double total = 0.0;
    for (std::size_t begin = 0; begin < samples.size(); begin += batch_size) {
        const std::size_t end = std::min(samples.size(), begin + batch_size);
        const auto records = load_records(dataset, pairs, std::span(samples).subspan(begin, end - begin), m.config().k);
        const auto ptrs = pointers(records);
        const auto batch = model::make_batch<float>(m.config(), ptrs);
        nn::Tape<float> tape;
        const auto out = m.forward(tape, batch);
        const nn::Var l = losses::training_loss(tape, out.y, batch.targets, loss);
        total += static_cast<double>(tape.value(l)[0]) * static_cast<double>(end - begin);
    }
    return total / static_cast<double>(samples.size());
}

TrainResult train(const flowdata::FlowDataset& dataset, const std::vector<flowdata::SequencePair>& pairs,
                  const flowdata::DatasetSplit& split, const model::ModelConfig& model_cfg, const TrainConfig& cfg,
                  const TrainCallbacks& callbacks) {
    cfg.validate();
    if (split.train.empty()) throw ConfigError("training split is empty");
    const model::ModelConfig arch = resolve_model_config(model_cfg, cfg, dataset);
    // Fails early with ConfigError when the dataset cannot serve this k.
    flowdata::frame_stride(dataset.dt_low, dataset.dt_high, arch.k);

    PointNetModel<float> net = PointNetModel<float>::init(arch, cfg.seed);
    auto& params = net.params();
    auto state = nn::AdamState<float>::zeros_like(params);

    const nlohmann::json meta_base = {
        {"train_config", cfg.to_json()},
        {"test_fingerprint", util::hex64(split.test_fingerprint())},
        {"split_sizes", {split.train.size(), split.val.size(), split.test.size()}},
    };
    auto snapshot = [&](std::uint64_t epoch, const nlohmann::json& extra) {
        nn::Checkpoint c;
        c.model_config = arch.to_json();
        c.config_hash = arch.hash();
        c.metadata = meta_base;
        for (const auto& [key, value] : extra.items()) c.metadata[key] = value;
        c.params = params;
        for (auto& p : c.params) p.zero_grad();
        c.optimizer = state;
        c.epoch = epoch;
        c.seed = cfg.seed;
        return c;
    };

    TrainResult result;
    result.model_config = arch;
    TrainLog& log = result.log;
    log.initial_train_loss = dataset_loss(net, dataset, pairs, split.train, cfg.loss, cfg.batch_size);
    log.best_val_loss = std::numeric_limits<double>::infinity();

    std::uint64_t iteration = 0;
    std::vector<SampleIndex> order = split.train;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        order = split.train;
        util::Rng rng(util::mix_seed(util::mix_seed(cfg.seed, 0x5bu), epoch));
        rng.shuffle(order);

        EpochLog entry;
        entry.epoch = epoch + 1;
        entry.lr = cfg.lr_unit == LrUnit::Epoch ? nn::step_lr(epoch, cfg.base_lr, cfg.lr_step, cfg.lr_gamma)
                                                : nn::step_lr(iteration, cfg.base_lr, cfg.lr_step, cfg.lr_gamma);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
            const auto records = load_records(dataset, pairs, std::span(order).subspan(begin, end - begin), arch.k);
            const auto ptrs = pointers(records);
            const auto batch = model::make_batch<float>(arch, ptrs);

            nn::Tape<float> tape;
            const auto out = net.forward(tape, batch);
            const nn::Var l = losses::training_loss(tape, out.y, batch.targets, cfg.loss);
            const double value = tape.value(l)[0];
            if (!std::isfinite(value)) {
                throw NumericalError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                                     std::to_string(batches + 1));
            }
            tape.backward(l);
            for (auto& p : params) {
                const auto g = tape.param_grad(p);
                if (g.empty()) {
                    p.zero_grad();
                } else {
                    std::copy(g.begin(), g.end(), p.grad.begin());
                }
            }
            const double lr = cfg.lr_unit == LrUnit::Epoch ? entry.lr
                                                           : nn::step_lr(iteration, cfg.base_lr, cfg.lr_step, cfg.lr_gamma);
            nn::adam_step<float>(params, state, lr, cfg.adam);
            ++iteration;
            loss_sum += value;
            ++batches;
        }
        entry.iterations = iteration;
        entry.train_loss = loss_sum / static_cast<double>(batches);

        const std::uint64_t before = parameter_hash(params);
        const std::string hash_before = arch.hash();
        entry.val_loss = dataset_loss(net, dataset, pairs, split.val, cfg.loss, cfg.batch_size);
        if (parameter_hash(params) != before || net.config().hash() != hash_before) {
            throw std::logic_error("validation modified the model");
        }
        entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        log.epochs.push_back(entry);

        // Without a validation split the latest epoch counts as best.
        const bool better = split.val.empty() || entry.val_loss < log.best_val_loss;
        if (better) {
            log.best_epoch = entry.epoch;
            log.best_val_loss = entry.val_loss;
            result.best_checkpoint = snapshot(entry.epoch, {{"val_loss", entry.val_loss}, {"kind", "best"}});
        }
        if (callbacks.on_epoch) callbacks.on_epoch(entry);
        if (cfg.checkpoint_every > 0 && entry.epoch % cfg.checkpoint_every == 0 && callbacks.on_checkpoint) {
            callbacks.on_checkpoint(snapshot(entry.epoch, {{"val_loss", entry.val_loss}, {"kind", "periodic"}}));
        }
    }
    log.final_train_loss = dataset_loss(net, dataset, pairs, split.train, cfg.loss, cfg.batch_size);
    result.final_checkpoint = snapshot(cfg.epochs, {{"val_loss", log.epochs.back().val_loss},
                                                    {"initial_train_loss", log.initial_train_loss},
                                                    {"final_train_loss", log.final_train_loss},
                                                    {"kind", "final"}});
    return result;
}

}  // namespace rtcm::trainer
