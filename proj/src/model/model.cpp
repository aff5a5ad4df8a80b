#include "rtcm/model/model.hpp"

#include <cmath>
#include <tuple>

#include "rtcm/errors.hpp"
#include "rtcm/nn/ops.hpp"
#include "rtcm/util/hash.hpp"
#include "rtcm/util/random.hpp"

namespace rtcm::model {

using nlohmann::json;
using nn::Param;
using nn::Tape;
using nn::Tensor;
using nn::Var;

const char* to_string(DecoderInput d) { return d == DecoderInput::PerPoint ? "per_point" : "global_tiled"; }

DecoderInput decoder_input_from_string(const std::string& s) {
    if (s == "per_point") return DecoderInput::PerPoint;
    if (s == "global_tiled") return DecoderInput::GlobalTiled;
    throw ConfigError("decoder_input must be per_point or global_tiled, got '" + s + "'");
}

InputNormalization InputNormalization::from_stats(const flowdata::NormalizationStats& stats) {
    InputNormalization n;
    n.velocity_scale = stats.velocity_scale;
    for (int i = 0; i < 3; ++i) n.coord_center[i] = stats.coord_center[i];
    n.coord_scale = stats.coord_scale;
    n.resistance_mean = stats.resistance_mean;
    n.resistance_std = stats.resistance_std;
    return n;
}

namespace {

void check_widths(const std::vector<std::size_t>& widths, std::size_t layers, const char* name) {
    if (widths.size() != layers) {
        throw ConfigError(std::string(name) + " must list " + std::to_string(layers) + " layer widths, got " +
                          std::to_string(widths.size()));
    }
    for (std::size_t w : widths) {
        if (w == 0) throw ConfigError(std::string(name) + " contains a zero width");
    }
}

std::size_t mlp_params(std::size_t in, const std::vector<std::size_t>& widths) {
    std::size_t total = 0;
    for (std::size_t w : widths) {
        total += in * w + w;
        in = w;
    }
    return total;
}

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

void ModelConfig::validate() const {
    if (k < 1) throw ConfigError("k must be >= 1");
    check_widths(encoder_widths, kEncoderLayers, "encoder_widths");
    check_widths(rt_widths, kRtLayers, "rt_widths");
    check_widths(decoder_hidden, kDecoderLayers - 1, "decoder_hidden");
    if (encoder_widths.back() != kFeatureWidth) throw ConfigError("encoder output width must be 1024");
    if (rt_widths.back() != kFeatureWidth) throw ConfigError("rt encoder output width must be 1024");
    if (!positive_finite(norm.velocity_scale) || !positive_finite(norm.coord_scale) ||
        !positive_finite(norm.resistance_std)) {
        throw ConfigError("normalization scales must be positive and finite");
    }
    if (!std::isfinite(norm.resistance_mean) || !std::isfinite(norm.coord_center[0]) ||
        !std::isfinite(norm.coord_center[1]) || !std::isfinite(norm.coord_center[2])) {
        throw ConfigError("normalization offsets must be finite");
    }
}

std::size_t ModelConfig::decoder_input_width() const {
    std::size_t w = encoder_widths.back();
    if (decoder_input == DecoderInput::PerPoint) w += encoder_widths.back();
    if (use_rtcm) w += rt_widths.back();
    return w;
}

std::vector<std::size_t> ModelConfig::decoder_schedule() const {
    std::vector<std::size_t> s{decoder_input_width()};
    s.insert(s.end(), decoder_hidden.begin(), decoder_hidden.end());
    s.push_back(output_width());
    return s;
}

std::size_t ModelConfig::parameter_count() const {
    std::size_t total = mlp_params(encoder_input_width(), encoder_widths);
    if (use_rtcm) total += mlp_params(rt_input_width(), rt_widths);
    std::vector<std::size_t> dec(decoder_hidden);
    dec.push_back(output_width());
    total += mlp_params(decoder_input_width(), dec);
    return total;
}

json ModelConfig::to_json() const {
    return json{
        {"k", k},
        {"encoder_widths", encoder_widths},
        {"rt_widths", rt_widths},
        {"decoder_hidden", decoder_hidden},
        {"use_rtcm", use_rtcm},
        {"decoder_input", to_string(decoder_input)},
        {"zero_init_output", zero_init_output},
        {"normalization",
         {{"velocity_scale", norm.velocity_scale},
          {"coord_center", {norm.coord_center[0], norm.coord_center[1], norm.coord_center[2]}},
          {"coord_scale", norm.coord_scale},
          {"resistance_mean", norm.resistance_mean},
          {"resistance_std", norm.resistance_std}}},
    };
}

ModelConfig ModelConfig::from_json(const json& j) {
    try {
        ModelConfig c;
        c.k = j.at("k").get<std::size_t>();
        c.encoder_widths = j.at("encoder_widths").get<std::vector<std::size_t>>();
        c.rt_widths = j.at("rt_widths").get<std::vector<std::size_t>>();
        c.decoder_hidden = j.at("decoder_hidden").get<std::vector<std::size_t>>();
        c.use_rtcm = j.at("use_rtcm").get<bool>();
        c.decoder_input = decoder_input_from_string(j.at("decoder_input").get<std::string>());
        c.zero_init_output = j.at("zero_init_output").get<bool>();
        const json& n = j.at("normalization");
        c.norm.velocity_scale = n.at("velocity_scale").get<double>();
        const auto center = n.at("coord_center").get<std::vector<double>>();
        if (center.size() != 3) throw ConfigError("coord_center must have 3 entries");
        for (int i = 0; i < 3; ++i) c.norm.coord_center[i] = center[i];
        c.norm.coord_scale = n.at("coord_scale").get<double>();
        c.norm.resistance_mean = n.at("resistance_mean").get<double>();
        c.norm.resistance_std = n.at("resistance_std").get<double>();
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed model config: ") + e.what());
    }
}

std::string ModelConfig::hash() const { return util::hex64(util::fnv1a(to_json().dump())); }

template <typename T>
Batch<T> make_batch(const ModelConfig& cfg, std::span<const flowdata::SampleRecord* const> samples,
                    bool with_targets) {
    if (samples.empty()) throw ShapeError("empty batch");
    const std::size_t n = samples.front()->n_points;
    if (n == 0) throw ShapeError("sample has no points");
    const std::size_t b = samples.size();
    const std::size_t frames = cfg.frames();
    Batch<T> batch;
    batch.clouds = b;
    batch.n_points = n;
    batch.point_features = Tensor<T>({b, n, 9});
    batch.rt_features = Tensor<T>({b, cfg.rt_input_width()});
    if (with_targets) batch.targets = Tensor<T>({b, n, frames, 3});

    const auto& nm = cfg.norm;
    const double inv_v = 1.0 / nm.velocity_scale;
    const double inv_c = 1.0 / nm.coord_scale;
    for (std::size_t s = 0; s < b; ++s) {
        const auto& rec = *samples[s];
        if (rec.n_points != n) throw ShapeError("batch mixes point counts");
        if (rec.k != cfg.k) {
            throw ConfigError("sample k=" + std::to_string(rec.k) + " does not match model k=" + std::to_string(cfg.k));
        }
        if (rec.coords.size() != 3 * n || rec.u_t.size() != 3 * n || rec.u_t1.size() != 3 * n ||
            rec.times.size() != frames) {
            throw ShapeError("sample arrays do not match its point count");
        }
        T* pf = batch.point_features.data.data() + s * n * 9;
        for (std::size_t i = 0; i < n; ++i) {
            for (int c = 0; c < 3; ++c) {
                pf[i * 9 + c] = static_cast<T>(rec.u_t[3 * i + c] * inv_v);
                pf[i * 9 + 3 + c] = static_cast<T>(rec.u_t1[3 * i + c] * inv_v);
                pf[i * 9 + 6 + c] = static_cast<T>((rec.coords[3 * i + c] - nm.coord_center[c]) * inv_c);
            }
        }
        T* rt = batch.rt_features.data.data() + s * cfg.rt_input_width();
        rt[0] = static_cast<T>((rec.resistance - nm.resistance_mean) / nm.resistance_std);
        for (std::size_t f = 0; f < frames; ++f) rt[1 + f] = static_cast<T>(rec.times[f]);

        if (with_targets) {
            if (rec.targets.size() != frames * n * 3) throw ShapeError("sample targets do not match k and N");
            T* tg = batch.targets.data.data() + s * n * frames * 3;
            // stored frame-major, the network emits point-major
            for (std::size_t f = 0; f < frames; ++f) {
                for (std::size_t i = 0; i < n; ++i) {
                    for (int c = 0; c < 3; ++c) tg[(i * frames + f) * 3 + c] = static_cast<T>(rec.targets[(f * n + i) * 3 + c]);
                }
            }
        }
    }
    return batch;
}

template <typename T>
Batch<T> make_batch(const ModelConfig& cfg, const flowdata::SampleRecord& sample, bool with_targets) {
    const flowdata::SampleRecord* one[] = {&sample};
    return make_batch<T>(cfg, std::span<const flowdata::SampleRecord* const>(one), with_targets);
}

template <typename T>
void PointNetModel<T>::build_layout() {
    encoder_begin_ = 0;
    rt_begin_ = 2 * ModelConfig::kEncoderLayers;
    decoder_begin_ = rt_begin_ + (cfg_.use_rtcm ? 2 * ModelConfig::kRtLayers : 0);
}

template <typename T>
PointNetModel<T> PointNetModel<T>::init(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    PointNetModel m;
    m.cfg_ = cfg;
    m.build_layout();
    util::Rng rng(util::mix_seed(seed, 0x1417));

    auto add_block = [&](const std::string& name, std::size_t in, std::vector<std::size_t> widths, bool zero_last) {
        for (std::size_t l = 0; l < widths.size(); ++l) {
            const std::size_t out = widths[l];
            Tensor<T> w({in, out});
            if (!(zero_last && l + 1 == widths.size())) {
                const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
                for (auto& x : w.data) x = static_cast<T>(rng.uniform(-bound, bound));
            }
            const std::string prefix = name + "." + std::to_string(l);
            m.params_.emplace_back(prefix + ".weight", std::move(w));
            m.params_.emplace_back(prefix + ".bias", Tensor<T>({out}));
            in = out;
        }
    };
    add_block("encoder", cfg.encoder_input_width(), cfg.encoder_widths, false);
    if (cfg.use_rtcm) add_block("rt", cfg.rt_input_width(), cfg.rt_widths, false);
    std::vector<std::size_t> dec(cfg.decoder_hidden);
    dec.push_back(cfg.output_width());
    add_block("decoder", cfg.decoder_input_width(), dec, cfg.zero_init_output);
    return m;
}

template <typename T>
PointNetModel<T> PointNetModel<T>::from_checkpoint(const nn::Checkpoint& ckpt, const std::string& expected_hash) {
    const ModelConfig cfg = ModelConfig::from_json(ckpt.model_config);
    const std::string actual = cfg.hash();
    if (actual != ckpt.config_hash) {
        throw ConfigError("checkpoint config hash " + ckpt.config_hash + " does not match its config (" + actual + ")");
    }
    if (!expected_hash.empty() && expected_hash != actual) {
        throw ConfigError("checkpoint architecture " + actual + " does not match requested " + expected_hash);
    }
    PointNetModel m = init(cfg, 0);
    if (ckpt.params.size() != m.params_.size()) {
        throw ConfigError("checkpoint holds " + std::to_string(ckpt.params.size()) + " tensors, model expects " +
                          std::to_string(m.params_.size()));
    }
    for (std::size_t i = 0; i < m.params_.size(); ++i) {
        const auto& src = ckpt.params[i];
        auto& dst = m.params_[i];
        if (src.id != dst.id || src.value.shape != dst.value.shape) {
            throw ConfigError("checkpoint tensor " + src.id + " " + nn::to_string(src.value.shape) +
                              " does not match model tensor " + dst.id + " " + nn::to_string(dst.value.shape));
        }
        for (std::size_t j = 0; j < src.value.size(); ++j) dst.value.data[j] = static_cast<T>(src.value.data[j]);
    }
    return m;
}

template <typename T>
std::pair<Var, Var> PointNetModel<T>::velocity_encoder(Tape<T>& tape, Var x) const {
    const auto& shape = tape.value(x).shape;
    if (shape.size() < 2 || shape[shape.size() - 2] == 0) throw ShapeError("velocity encoder needs N >= 1 points");
    if (shape.back() != cfg_.encoder_input_width()) throw ShapeError("velocity encoder expects 9 input channels");
    Var h = x;
    for (std::size_t l = 0; l < ModelConfig::kEncoderLayers; ++l) {
        const auto& w = params_[encoder_begin_ + 2 * l];
        const auto& b = params_[encoder_begin_ + 2 * l + 1];
        h = nn::relu(tape, nn::pointwise_deconv(tape, h, tape.param(w), tape.param(b)));
    }
    return {h, nn::global_max_pool(tape, h)};
}

template <typename T>
Var PointNetModel<T>::rt_encoder(Tape<T>& tape, Var r) const {
    if (!cfg_.use_rtcm) throw ConfigError("model was built without the resistance-time encoder");
    if (tape.value(r).channels() != cfg_.rt_input_width()) {
        throw ShapeError("rt encoder expects " + std::to_string(cfg_.rt_input_width()) + " inputs");
    }
    Var h = r;
    for (std::size_t l = 0; l < ModelConfig::kRtLayers; ++l) {
        const auto& w = params_[rt_begin_ + 2 * l];
        const auto& b = params_[rt_begin_ + 2 * l + 1];
        h = nn::affine(tape, h, tape.param(w), tape.param(b));
        if (l + 1 < ModelConfig::kRtLayers) h = nn::relu(tape, h);
    }
    return h;
}

template <typename T>
Var PointNetModel<T>::decoder(Tape<T>& tape, Var f_pp, Var f_v, Var f_rt, std::size_t n_points) const {
    Var global = f_v;
    if (cfg_.use_rtcm) {
        if (!f_rt.valid()) throw ShapeError("decoder needs f_rt when the resistance-time encoder is enabled");
        global = nn::concat_channels(tape, f_v, f_rt);
    }
    const Var per_point = cfg_.decoder_input == DecoderInput::PerPoint ? f_pp : Var{};
    const std::size_t expected = cfg_.decoder_input_width();
    const std::size_t got = tape.value(global).channels() + (per_point.valid() ? tape.value(per_point).channels() : 0);
    if (got != expected) {
        throw ShapeError("decoder input width " + std::to_string(got) + " does not match config " + std::to_string(expected));
    }
    Var h;
    for (std::size_t l = 0; l < ModelConfig::kDecoderLayers; ++l) {
        const Var w = tape.param(params_[decoder_begin_ + 2 * l]);
        const Var b = tape.param(params_[decoder_begin_ + 2 * l + 1]);
        h = l == 0 ? nn::broadcast_deconv(tape, per_point, global, w, b, n_points) : nn::pointwise_deconv(tape, h, w, b);
        if (l + 1 < ModelConfig::kDecoderLayers) h = nn::relu(tape, h);
    }
    return h;
}

template <typename T>
typename PointNetModel<T>::Output PointNetModel<T>::forward(Tape<T>& tape, const Batch<T>& batch) const {
    Output out;
    const Var x = tape.constant(batch.point_features);
    std::tie(out.f_pp, out.f_v) = velocity_encoder(tape, x);
    if (cfg_.use_rtcm) out.f_rt = rt_encoder(tape, tape.constant(batch.rt_features));
    Var raw = decoder(tape, out.f_pp, out.f_v, out.f_rt, batch.n_points);
    raw = nn::scale(tape, raw, static_cast<T>(cfg_.norm.velocity_scale));
    out.y = nn::reshape(tape, raw, {batch.clouds, batch.n_points, cfg_.frames(), 3});
    return out;
}

template <typename T>
std::vector<T> PointNetModel<T>::predict(const flowdata::SampleRecord& sample) const {
    Tape<T> tape;
    const Batch<T> batch = make_batch<T>(cfg_, sample, false);
    const Output out = forward(tape, batch);
    return tape.value(out.y).data;
}

template <typename T>
template <typename U>
PointNetModel<U> PointNetModel<T>::cast() const {
    PointNetModel<U> m;
    m.cfg_ = cfg_;
    m.build_layout();
    m.params_.reserve(params_.size());
    for (const auto& p : params_) {
        nn::Tensor<U> v(p.value.shape);
        for (std::size_t i = 0; i < v.size(); ++i) v.data[i] = static_cast<U>(p.value.data[i]);
        m.params_.emplace_back(p.id, std::move(v));
    }
    return m;
}

template <typename T>
std::vector<Param<float>> PointNetModel<T>::export_params() const {
    return cast<float>().params();
}

template class PointNetModel<float>;
template class PointNetModel<double>;
template PointNetModel<double> PointNetModel<float>::cast<double>() const;
template PointNetModel<float> PointNetModel<double>::cast<float>() const;
template PointNetModel<float> PointNetModel<float>::cast<float>() const;
template PointNetModel<double> PointNetModel<double>::cast<double>() const;

template Batch<float> make_batch<float>(const ModelConfig&, std::span<const flowdata::SampleRecord* const>, bool);
template Batch<double> make_batch<double>(const ModelConfig&, std::span<const flowdata::SampleRecord* const>, bool);
template Batch<float> make_batch<float>(const ModelConfig&, const flowdata::SampleRecord&, bool);
template Batch<double> make_batch<double>(const ModelConfig&, const flowdata::SampleRecord&, bool);

}  // namespace rtcm::model
