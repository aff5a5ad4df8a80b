#include "settings.hpp"

#include "rtcm/errors.hpp"

namespace rtcm::cli {

using util::ConfigSchema;

namespace {

void size_key(ConfigSchema& s, const std::string& key, const std::string& help, std::size_t& ref) {
    s.add(key, help, [&ref, key](const std::string& v) { ref = util::parse_u64(key, v); },
          [&ref] { return std::to_string(ref); });
}

void u64_key(ConfigSchema& s, const std::string& key, const std::string& help, std::uint64_t& ref) {
    s.add(key, help, [&ref, key](const std::string& v) { ref = util::parse_u64(key, v); },
          [&ref] { return std::to_string(ref); });
}

void real_key(ConfigSchema& s, const std::string& key, const std::string& help, double& ref) {
    s.add(key, help, [&ref, key](const std::string& v) { ref = util::parse_double(key, v); },
          [&ref] { return util::format_double(ref); });
}

void bool_key(ConfigSchema& s, const std::string& key, const std::string& help, bool& ref) {
    s.add(key, help, [&ref, key](const std::string& v) { ref = util::parse_bool(key, v); },
          [&ref] { return std::string(ref ? "true" : "false"); });
}

void reals_key(ConfigSchema& s, const std::string& key, const std::string& help, std::vector<double>& ref) {
    s.add(key, help, [&ref, key](const std::string& v) { ref = util::parse_double_list(key, v); },
          [&ref] { return util::format_double_list(ref); });
}

void sizes_key(ConfigSchema& s, const std::string& key, const std::string& help, std::vector<std::size_t>& ref) {
    s.add(key, help, [&ref, key](const std::string& v) { ref = util::parse_size_list(key, v); },
          [&ref] { return util::format_size_list(ref); });
}

void choice_key(ConfigSchema& s, const std::string& key, const std::string& help, std::string& ref,
                std::vector<std::string> allowed, bool allow_integer = false) {
    s.add(
        key, help,
        [&ref, key, allowed, allow_integer](const std::string& v) {
            for (const auto& a : allowed) {
                if (v == a) {
                    ref = v;
                    return;
                }
            }
            if (allow_integer) {
                util::parse_u64(key, v);
                ref = v;
                return;
            }
            throw ConfigError(key + ": '" + v + "' is not one of the allowed values");
        },
        [&ref] { return ref; });
}

}  // namespace

void bind(ConfigSchema& s, flowdata::SynthConfig& c) {
    size_key(s, "n_points", "points per cloud (>= 8)", c.n_points);
    size_key(s, "n_vessels", "vessel geometries; vessel v has curvature * v / (n_vessels - 1)", c.n_vessels);
    real_key(s, "tube_radius", "lumen radius in mm", c.tube_radius);
    real_key(s, "tube_length", "centerline length in mm", c.tube_length);
    real_key(s, "curvature", "centerline curvature of the last vessel, 1/mm", c.curvature);
    real_key(s, "windkessel_capacitance", "C in C dV/dt = Q - V/R", c.windkessel_capacitance);
    real_key(s, "cardiac_period", "inflow period in s", c.cardiac_period);
    reals_key(s, "inflow_waveform", "Fourier coefficients a0,a1,b1,a2,b2,...", c.inflow_waveform);
    reals_key(s, "resistances", "resistance of every simulated sequence", c.resistances);
    real_key(s, "dt_low", "Low frame spacing in s", c.dt_low);
    real_key(s, "dt_high", "High frame spacing in s", c.dt_high);
    size_key(s, "n_frames_low", "frames per Low sequence", c.n_frames_low);
    size_key(s, "n_frames_high", "frames per High sequence", c.n_frames_high);
    size_key(s, "euler_substeps", "Euler steps per Low frame", c.euler_substeps);
    size_key(s, "rk4_substeps", "RK4 steps per High frame", c.rk4_substeps);
    real_key(s, "swirl_gain", "swirl speed per unit dV/dt, s", c.swirl_gain);
    real_key(s, "instability_bound", "largest |V| accepted before the integration is declared unstable",
             c.instability_bound);
    size_key(s, "interp_k", "interpolated frames the High sequence must support", c.interp_k);
    u64_key(s, "seed", "point sampling seed", c.seed);
}

void bind(ConfigSchema& s, model::ModelConfig& m, trainer::TrainConfig& t) {
    size_key(s, "k", "frames interpolated between two Low frames", m.k);
    sizes_key(s, "encoder_widths", "velocity encoder layer widths (last must be 1024)", m.encoder_widths);
    sizes_key(s, "rt_widths", "resistance-time encoder layer widths (last must be 1024)", m.rt_widths);
    sizes_key(s, "decoder_hidden", "widths of the first six decoder layers", m.decoder_hidden);
    s.add(
        "decoder_input", "per_point | global_tiled",
        [&m](const std::string& v) { m.decoder_input = model::decoder_input_from_string(v); },
        [&m] { return std::string(model::to_string(m.decoder_input)); });
    bool_key(s, "zero_init_output", "start the last decoder layer at zero", m.zero_init_output);
    bool_key(s, "use_rtcm", "include the resistance-time encoder", t.use_rtcm);
    size_key(s, "epochs", "training epochs", t.epochs);
    size_key(s, "batch_size", "samples per minibatch (the last one may be smaller)", t.batch_size);
    real_key(s, "base_lr", "Adam learning rate before decay", t.base_lr);
    u64_key(s, "lr_step", "StepLR step size", t.lr_step);
    real_key(s, "lr_gamma", "StepLR decay factor", t.lr_gamma);
    s.add(
        "lr_unit", "epoch | iteration: what lr_step counts",
        [&t](const std::string& v) { t.lr_unit = trainer::lr_unit_from_string(v); },
        [&t] { return std::string(trainer::to_string(t.lr_unit)); });
    real_key(s, "adam_beta1", "Adam first-moment decay", t.adam.beta1);
    real_key(s, "adam_beta2", "Adam second-moment decay", t.adam.beta2);
    real_key(s, "adam_epsilon", "Adam denominator offset", t.adam.epsilon);
    s.add(
        "loss", "magori | mse",
        [&t](const std::string& v) { t.loss.kind = losses::loss_kind_from_string(v); },
        [&t] { return std::string(losses::to_string(t.loss.kind)); });
    real_key(s, "loss_alpha", "magnitude loss weight", t.loss.alpha);
    real_key(s, "loss_beta", "orientation loss weight", t.loss.beta);
    real_key(s, "loss_epsilon", "orientation denominator offset and zero-vector mask", t.loss.ori_epsilon);
    s.add(
        "loss_reduction", "per_frame | flattened",
        [&t](const std::string& v) { t.loss.reduction = losses::reduction_from_string(v); },
        [&t] { return std::string(losses::to_string(t.loss.reduction)); });
    u64_key(s, "seed", "initialization and batch-order seed", t.seed);
    u64_key(s, "split_seed", "train/val/test partition seed", t.split_seed);
    size_key(s, "checkpoint_every", "write epoch_<n>.ckpt every n epochs (0 = never)", t.checkpoint_every);
}

void bind(ConfigSchema& s, EvalSettings& c) {
    choice_key(s, "split", "test | val | train | all", c.split, {"test", "val", "train", "all"});
    choice_key(s, "split_seed", "partition seed, or 'checkpoint' to reuse the training split", c.split_seed,
               {"checkpoint"}, true);
    choice_key(s, "stub", "none | ground_truth (echo the targets instead of running a checkpoint)", c.stub,
               {"none", "ground_truth"});
    size_key(s, "k", "interpolated frames; only read with a stub", c.k);
}

void bind(ConfigSchema& s, InterpSettings& c) {
    size_key(s, "sequence", "index of the Low sequence to reconstruct", c.sequence);
}

}  // namespace rtcm::cli
