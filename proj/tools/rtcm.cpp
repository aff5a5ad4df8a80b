// rtcm: dataset generation, training, evaluation, interpolation and reports.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 I/O error or
// malformed input file, 4 numerical failure.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "rtcm/errors.hpp"
#include "rtcm/evalkit/evaluate.hpp"
#include "rtcm/evalkit/report.hpp"
#include "rtcm/flowdata/dataset_io.hpp"
#include "rtcm/flowdata/samples.hpp"
#include "rtcm/flowdata/synth.hpp"
#include "rtcm/nn/checkpoint.hpp"
#include "rtcm/trainer/trainer.hpp"
#include "rtcm/util/hash.hpp"
#include "settings.hpp"

namespace fs = std::filesystem;
using namespace rtcm;

namespace {

constexpr int kUsage = 2;
constexpr int kIo = 3;
constexpr int kNumerical = 4;

// Flags shared by every subcommand that takes settings.
struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    bool print_config = false;
    std::string out_dir;
};

void add_common(CLI::App* app, Common& c, const util::ConfigSchema& schema) {
    app->add_option("--config", c.config_path, "key = value settings file");
    app->add_option("--set", c.overrides, "override one setting, KEY=VALUE (repeatable)");
    app->add_flag("--print-config", c.print_config, "print the resolved settings and exit");
    app->add_option("--out", c.out_dir, "output directory (created if missing)");
    app->footer("Settings (for --config and --set):\n" + schema.describe());
}

// Defaults, then the config file, then --set overrides in order.
void resolve(const util::ConfigSchema& schema, const Common& c) {
    if (!c.config_path.empty()) schema.apply(util::read_key_value_file(c.config_path));
    util::KeyValues overrides;
    for (const auto& o : c.overrides) overrides.push_back(util::parse_override(o));
    schema.apply(overrides);
}

fs::path require_out(const Common& c) {
    if (c.out_dir.empty()) throw ConfigError("--out is required");
    std::error_code ec;
    fs::create_directories(c.out_dir, ec);
    if (ec) throw IoError("cannot create " + c.out_dir + ": " + ec.message());
    return c.out_dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw IoError("cannot write " + path.string());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

model::PointNetModel<float> load_model(const std::string& path) {
    return model::PointNetModel<float>::from_checkpoint(nn::read_checkpoint(path));
}

int run_gen_data(const Common& c, const flowdata::SynthConfig& cfg) {
    const fs::path out = require_out(c);
    cfg.validate();
    // Timed separately so the cost of the accurate High solve is visible.
    auto t0 = std::chrono::steady_clock::now();
    const auto ds = flowdata::build_dataset(cfg);
    const double gen_seconds = seconds_since(t0);
    flowdata::write_dataset(out, ds);
    const auto pairs = flowdata::pair_sequences(ds);
    const auto samples = flowdata::enumerate_samples(ds, pairs, cfg.interp_k);
    std::cout << "sequences: " << pairs.size() << " (" << cfg.n_vessels << " vessels × " << cfg.resistances.size()
              << " resistances)\n"
              << "low frames: " << pairs.size() * cfg.n_frames_low << ", high frames: "
              << pairs.size() * cfg.n_frames_high << "\n"
              << "samples (k=" << cfg.interp_k << "): " << samples.size() << "\n"
              << "points per cloud: " << cfg.n_points << "\n";
    std::printf("generation wall clock: %.3f s\n", gen_seconds);
    return 0;
}

int run_train(const Common& c, const std::string& data_dir, const model::ModelConfig& mcfg,
              const trainer::TrainConfig& tcfg, const std::string& config_text) {
    const fs::path out = require_out(c);
    const auto ds = flowdata::read_dataset(data_dir);
    const auto pairs = flowdata::pair_sequences(ds);
    const auto split = trainer::make_split(ds, pairs, mcfg.k, tcfg.split_seed);
    std::cout << "samples: train " << split.train.size() << ", val " << split.val.size() << ", test " << split.test.size()
              << "\n";
    const std::size_t per_epoch = (split.train.size() + tcfg.batch_size - 1) / tcfg.batch_size;
    std::cout << "iterations: " << per_epoch * tcfg.epochs << " (" << per_epoch << " per epoch)\n";

    trainer::TrainCallbacks cb;
    cb.on_epoch = [](const trainer::EpochLog& e) {
        std::printf("epoch %zu  lr %.3g  train %.6g  val %.6g  (%.1f s)\n", e.epoch, e.lr, e.train_loss, e.val_loss,
                    e.seconds);
        std::fflush(stdout);
    };
    cb.on_checkpoint = [&out](const nn::Checkpoint& ck) {
        char name[32];
        std::snprintf(name, sizeof name, "epoch_%04llu.ckpt", static_cast<unsigned long long>(ck.epoch));
        nn::write_checkpoint(out / name, ck);
    };
    auto t0 = std::chrono::steady_clock::now();
    const auto result = trainer::train(ds, pairs, split, mcfg, tcfg, cb);
    const double secs = seconds_since(t0);

    nn::write_checkpoint(out / "final.ckpt", result.final_checkpoint);
    nn::write_checkpoint(out / "best.ckpt", result.best_checkpoint);
    write_text(out / "train_log.csv", result.log.to_csv());
    write_text(out / "config.txt", config_text);
    nlohmann::json split_json = {
        {"split_seed", tcfg.split_seed},
        {"test_fingerprint", util::hex64(split.test_fingerprint())},
    };
    for (const auto& [name, part] : {std::pair{"train", &split.train}, {"val", &split.val}, {"test", &split.test}}) {
        nlohmann::json items = nlohmann::json::array();
        for (const auto& s : *part) items.push_back({s.pair, s.low_index});
        split_json[name] = items;
    }
    write_text(out / "split.json", split_json.dump(1) + "\n");

    std::printf("initial train loss %.6g, final train loss %.6g, best val epoch %zu\n", result.log.initial_train_loss,
                result.log.final_train_loss, result.log.best_epoch);
    std::printf("training wall clock: %.1f s\n", secs);
    return 0;
}

int run_eval(const Common& c, const std::string& data_dir, const std::string& ckpt_path, const cli::EvalSettings& s,
             std::size_t threads) {
    const fs::path out = require_out(c);
    const auto ds = flowdata::read_dataset(data_dir);
    const auto pairs = flowdata::pair_sequences(ds);

    std::optional<model::PointNetModel<float>> net;
    std::size_t k = s.k;
    std::uint64_t split_seed = 0;
    evalkit::Predictor predictor;
    if (s.stub == "ground_truth") {
        if (s.split_seed != "checkpoint") split_seed = util::parse_u64("split_seed", s.split_seed);
        predictor = evalkit::ground_truth_echo();
    } else {
        if (ckpt_path.empty()) throw ConfigError("--checkpoint is required unless stub = ground_truth");
        const auto ck = nn::read_checkpoint(ckpt_path);
        net = model::PointNetModel<float>::from_checkpoint(ck);
        k = net->config().k;
        if (s.split_seed == "checkpoint") {
            try {
                split_seed = ck.metadata.at("train_config").at("split_seed").get<std::uint64_t>();
            } catch (const nlohmann::json::exception&) {
                throw IoError("checkpoint metadata lacks train_config.split_seed; set split_seed explicitly");
            }
        } else {
            split_seed = util::parse_u64("split_seed", s.split_seed);
        }
        predictor = evalkit::model_predictor(*net);
    }
    std::vector<flowdata::SampleIndex> samples;
    if (s.split == "all") {
        samples = flowdata::enumerate_samples(ds, pairs, k);
    } else {
        const auto split = trainer::make_split(ds, pairs, k, split_seed);
        samples = s.split == "test" ? split.test : s.split == "val" ? split.val : split.train;
    }
    auto t0 = std::chrono::steady_clock::now();
    const auto report = evalkit::evaluate(ds, pairs, samples, k, predictor, threads);
    const double secs = seconds_since(t0);
    evalkit::write_report(out, report);
    std::printf("evaluated %zu samples, %zu frames in %zu sequences\n", samples.size(), report.frames,
                report.sequences.size());
    std::printf("RE network %.4f %%, linear %.4f %%\n", report.re_network, report.re_baseline);
    std::printf("MME network %.6g, linear %.6g\n", report.mme_mean_network, report.mme_mean_baseline);
    std::printf("evaluation wall clock: %.3f s\n", secs);
    return 0;
}

int run_interp(const Common& c, const std::string& data_dir, const std::string& ckpt_path, const cli::InterpSettings& s) {
    const fs::path out = require_out(c);
    if (ckpt_path.empty()) throw ConfigError("--checkpoint is required");
    const auto ds = flowdata::read_dataset(data_dir);
    std::vector<std::size_t> lows;
    for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
        if (ds.sequences[i].resolution == flowdata::Resolution::Low) lows.push_back(i);
    }
    if (s.sequence >= lows.size()) {
        throw ConfigError("sequence " + std::to_string(s.sequence) + " requested but the dataset has " +
                          std::to_string(lows.size()) + " Low sequences");
    }
    const auto& low = ds.sequences[lows[s.sequence]];
    const auto net = load_model(ckpt_path);
    auto t0 = std::chrono::steady_clock::now();
    auto high = evalkit::interpolate_sequence(low, net.config().k, evalkit::model_predictor(net));
    const double secs = seconds_since(t0);

    flowdata::FlowDataset result;
    result.stats = ds.stats;
    result.dt_high = high.dt;
    result.sequences.push_back(std::move(high));
    flowdata::write_dataset(out, result);
    std::printf("input: %s R=%g, %zu low frames\n", low.vessel_id.c_str(), low.resistance, low.n_frames());
    std::printf("frames: %zu (k=%zu)\n", result.sequences[0].n_frames(), net.config().k);
    std::printf("interpolation wall clock: %.3f s\n", secs);
    return 0;
}

int run_report(const Common& c, const std::vector<std::string>& evals) {
    const fs::path out = require_out(c);
    if (evals.empty()) throw ConfigError("report needs at least one --eval NAME=DIR");
    std::vector<std::pair<std::string, nlohmann::json>> summaries;
    for (const auto& e : evals) {
        const auto [name, dir] = util::parse_override(e);
        std::ifstream in(fs::path(dir) / "summary.json", std::ios::binary);
        if (!in) throw IoError("cannot read " + (fs::path(dir) / "summary.json").string());
        try {
            summaries.emplace_back(name, nlohmann::json::parse(in));
        } catch (const nlohmann::json::exception& ex) {
            throw IoError("malformed " + (fs::path(dir) / "summary.json").string() + ": " + ex.what());
        }
    }
    const auto table = evalkit::re_table(summaries);
    write_text(out / "re_table.csv", table.to_csv());
    write_text(out / "re_table.md", table.to_markdown());
    std::cout << table.to_markdown();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temporal super-resolution of point-cloud flow fields"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    // gen-data
    flowdata::SynthConfig synth;
    util::ConfigSchema synth_schema;
    cli::bind(synth_schema, synth);
    Common gen_common;
    std::string preset = "desk";
    auto* gen = app.add_subcommand("gen-data", "generate a paired Low/High synthetic dataset");
    gen->add_option("--preset", preset, "starting point before --config/--set: desk or full")
        ->check(CLI::IsMember({"desk", "full"}));
    add_common(gen, gen_common, synth_schema);

    // train
    model::ModelConfig mcfg;
    trainer::TrainConfig tcfg;
    util::ConfigSchema train_schema;
    cli::bind(train_schema, mcfg, tcfg);
    Common train_common;
    std::string train_data;
    auto* tr = app.add_subcommand("train", "train a model; writes final.ckpt, best.ckpt, train_log.csv");
    tr->add_option("--data", train_data, "dataset directory");
    add_common(tr, train_common, train_schema);

    // eval
    cli::EvalSettings eval_settings;
    util::ConfigSchema eval_schema;
    cli::bind(eval_schema, eval_settings);
    Common eval_common;
    std::string eval_data, eval_ckpt;
    std::size_t threads = 1;
    auto* ev = app.add_subcommand("eval", "compare a checkpoint with linear interpolation; writes CSV + summary.json");
    ev->add_option("--data", eval_data, "dataset directory");
    ev->add_option("--checkpoint", eval_ckpt, "checkpoint file");
    ev->add_option("--threads", threads, "worker threads for inference (results do not depend on it)")
        ->check(CLI::PositiveNumber);
    add_common(ev, eval_common, eval_schema);

    // interp
    cli::InterpSettings interp_settings;
    util::ConfigSchema interp_schema;
    cli::bind(interp_schema, interp_settings);
    Common interp_common;
    std::string interp_data, interp_ckpt;
    auto* ip = app.add_subcommand("interp", "reconstruct a High-rate sequence from one Low sequence");
    ip->add_option("--data", interp_data, "dataset directory holding the Low sequence");
    ip->add_option("--checkpoint", interp_ckpt, "checkpoint file");
    add_common(ip, interp_common, interp_schema);

    // report
    Common report_common;
    util::ConfigSchema report_schema;
    std::vector<std::string> report_evals;
    auto* rp = app.add_subcommand("report", "merge eval outputs into one relative-error table");
    rp->add_option("--eval", report_evals, "NAME=DIR of an eval output (repeatable; the first supplies Linear)");
    rp->add_option("--out", report_common.out_dir, "output directory (created if missing)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Help and version exit 0; every other parse problem is a usage error.
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsage;
    }

    try {
        if (gen->parsed()) {
            if (preset == "full") synth = flowdata::SynthConfig::full_scale();
            resolve(synth_schema, gen_common);
            if (gen_common.print_config) return std::cout << synth_schema.print(), 0;
            return run_gen_data(gen_common, synth);
        }
        if (tr->parsed()) {
            resolve(train_schema, train_common);
            if (train_common.print_config) return std::cout << train_schema.print(), 0;
            if (train_data.empty()) throw ConfigError("--data is required");
            mcfg.validate();
            tcfg.validate();
            return run_train(train_common, train_data, mcfg, tcfg, train_schema.print());
        }
        if (ev->parsed()) {
            resolve(eval_schema, eval_common);
            if (eval_common.print_config) return std::cout << eval_schema.print(), 0;
            if (eval_data.empty()) throw ConfigError("--data is required");
            return run_eval(eval_common, eval_data, eval_ckpt, eval_settings, threads);
        }
        if (ip->parsed()) {
            resolve(interp_schema, interp_common);
            if (interp_common.print_config) return std::cout << interp_schema.print(), 0;
            if (interp_data.empty()) throw ConfigError("--data is required");
            return run_interp(interp_common, interp_data, interp_ckpt, interp_settings);
        }
        return run_report(report_common, report_evals);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const ShapeError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
