#include <doctest.h>

#include <cmath>

#include "rtcm/errors.hpp"
#include "rtcm/trainer/ablation.hpp"
#include "rtcm/trainer/trainer.hpp"
#include "rtcm/util/hash.hpp"
#include "model_fixture.hpp"
#include "test_support.hpp"

using namespace rtcm;
using namespace rtcm::trainer;

namespace {

TrainConfig quick_config() {
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 8;
    cfg.seed = 5;
    cfg.split_seed = 2;
    return cfg;
}

struct Fixture {
    test_support::SmallData data{16, 1, 6};
    TrainConfig cfg = quick_config();
    flowdata::DatasetSplit split = make_split(data.dataset, data.pairs, 1, cfg.split_seed);

    TrainResult run(const TrainCallbacks& cb = {}) const {
        return train(data.dataset, data.pairs, split, model::ModelConfig{}, cfg, cb);
    }
};

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("training is bitwise reproducible and reduces the loss") {
    Fixture f;
    CHECK(f.split.train.size() == 32);
    const auto a = f.run();
    const auto b = f.run();
    CHECK(a.log.to_csv() == b.log.to_csv());
    REQUIRE(a.final_checkpoint.params.size() == b.final_checkpoint.params.size());
    CHECK(parameter_hash(a.final_checkpoint.params) == parameter_hash(b.final_checkpoint.params));
    for (std::size_t i = 0; i < a.final_checkpoint.params.size(); ++i) {
        CHECK(test_support::bitwise_equal(a.final_checkpoint.optimizer.m[i], b.final_checkpoint.optimizer.m[i]));
    }
    CHECK(a.log.final_train_loss < a.log.initial_train_loss);
    CHECK(a.log.epochs.size() == 3);
    CHECK(a.log.epochs.back().iterations == 12);
    CHECK(a.final_checkpoint.epoch == 3);
    CHECK(a.final_checkpoint.config_hash == a.model_config.hash());
    CHECK(a.final_checkpoint.metadata.at("test_fingerprint").get<std::string>() ==
          util::hex64(f.split.test_fingerprint()));

    Fixture g;
    g.cfg.seed = 6;
    CHECK(parameter_hash(g.run().final_checkpoint.params) != parameter_hash(a.final_checkpoint.params));
}

TEST_CASE("train log CSV") {
    TrainLog log;
    log.epochs.push_back({1, 4, 3e-4, 0.5, 0.25, 12.0});
    CHECK(log.to_csv() == "epoch,iterations,lr,train_loss,val_loss\n1,4,0.0003,0.5,0.25\n");
}

TEST_CASE("step decay per epoch and per iteration") {
    Fixture f;
    f.cfg.epochs = 5;
    f.cfg.lr_step = 2;
    f.cfg.lr_gamma = 0.5;
    const auto by_epoch = f.run();
    const double want[] = {3e-4, 3e-4, 1.5e-4, 1.5e-4, 7.5e-5};
    for (std::size_t e = 0; e < 5; ++e) CHECK(by_epoch.log.epochs[e].lr == doctest::Approx(want[e]).epsilon(1e-12));

    f.cfg.epochs = 2;
    f.cfg.lr_unit = LrUnit::Iteration;
    f.cfg.lr_step = 3;
    const auto by_iter = f.run();
    // four iterations per epoch: epoch 2 starts at iteration 4, after one decay
    CHECK(by_iter.log.epochs[0].lr == doctest::Approx(3e-4));
    CHECK(by_iter.log.epochs[1].lr == doctest::Approx(1.5e-4));
}

TEST_CASE("validation loss leaves the parameters untouched") {
    Fixture f;
    const auto mcfg = resolve_model_config(model::ModelConfig{}, f.cfg, f.data.dataset);
    const auto net = model::PointNetModel<float>::init(mcfg, 1);
    const auto before = parameter_hash(net.export_params());
    const double l1 = dataset_loss(net, f.data.dataset, f.data.pairs, f.split.val, f.cfg.loss, 3);
    const double l2 = dataset_loss(net, f.data.dataset, f.data.pairs, f.split.val, f.cfg.loss, 8);
    CHECK(parameter_hash(net.export_params()) == before);
    CHECK(std::isfinite(l1));
    CHECK(l1 == doctest::Approx(l2).epsilon(1e-5));
}

TEST_CASE("model config follows the train config and dataset") {
    Fixture f;
    f.cfg.use_rtcm = false;
    const auto m = resolve_model_config(model::ModelConfig{}, f.cfg, f.data.dataset);
    CHECK_FALSE(m.use_rtcm);
    CHECK(m.norm.velocity_scale == f.data.dataset.stats.velocity_scale);
    CHECK(m.decoder_input_width() == 2048);
}

TEST_CASE("periodic checkpoints and best checkpoint") {
    Fixture f;
    f.cfg.epochs = 4;
    f.cfg.checkpoint_every = 2;
    std::vector<std::uint64_t> saved;
    std::size_t epochs_seen = 0;
    TrainCallbacks cb;
    cb.on_checkpoint = [&](const nn::Checkpoint& c) { saved.push_back(c.epoch); };
    cb.on_epoch = [&](const EpochLog&) { ++epochs_seen; };
    const auto r = f.run(cb);
    CHECK(saved == std::vector<std::uint64_t>{2, 4});
    CHECK(epochs_seen == 4);
    CHECK(r.best_checkpoint.epoch == r.log.best_epoch);
    double best = INFINITY;
    for (const auto& e : r.log.epochs) best = std::min(best, e.val_loss);
    CHECK(r.log.best_val_loss == best);
}

TEST_CASE("non-finite losses stop training") {
    Fixture f;
    f.cfg.base_lr = 1e30;
    f.cfg.epochs = 4;
    CHECK_THROWS_AS(f.run(), NumericalError);
}

TEST_CASE("bad inputs are rejected") {
    Fixture f;
    auto empty = f.split;
    empty.train.clear();
    CHECK_THROWS_AS(train(f.data.dataset, f.data.pairs, empty, model::ModelConfig{}, f.cfg), ConfigError);
    model::ModelConfig k2;
    k2.k = 2;
    CHECK_THROWS_AS(train(f.data.dataset, f.data.pairs, f.split, k2, f.cfg), ConfigError);
    TrainConfig bad = quick_config();
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = quick_config();
    bad.lr_gamma = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK_THROWS_AS(lr_unit_from_string("steps"), ConfigError);
}

TEST_CASE("ablation arms share one split") {
    Fixture f;
    f.cfg.epochs = 1;
    const auto report = ablation_suite(f.data.dataset, f.data.pairs, model::ModelConfig{}, f.cfg,
                                       {Arm::Full, Arm::NoRtcm, Arm::Mse});
    REQUIRE(report.arms.size() == 3);
    const auto t = report.table();
    CHECK(t.columns == std::vector<std::string>{"Field", "full", "no_rtcm", "mse", "Linear"});
    CHECK(arm_config(Arm::NoRtcm, f.cfg).use_rtcm == false);
    CHECK(arm_config(Arm::Mse, f.cfg).loss.kind == losses::LossKind::MSE);
}

}
