#include "rtcm/nn/checkpoint.hpp"

#include <fstream>

#include "rtcm/util/binary_io.hpp"

namespace rtcm::nn {
namespace {

constexpr char kMagic[8] = {'R', 'T', 'C', 'M', 'C', 'K', 'P', 'T'};

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    const bool has_moments = !ckpt.optimizer.m.empty();
    if (has_moments && (ckpt.optimizer.m.size() != ckpt.params.size() || ckpt.optimizer.v.size() != ckpt.params.size())) {
        throw ShapeError("write_checkpoint: optimizer state does not match parameter list");
    }

    nlohmann::json manifest;
    manifest["format"] = Checkpoint::kFormat;
    manifest["model_config"] = ckpt.model_config;
    manifest["config_hash"] = ckpt.config_hash;
    manifest["metadata"] = ckpt.metadata;
    manifest["epoch"] = ckpt.epoch;
    manifest["seed"] = ckpt.seed;
    manifest["optimizer"] = {{"step", ckpt.optimizer.step}, {"has_moments", has_moments}};
    auto& list = manifest["params"] = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& p : ckpt.params) {
        list.push_back({{"id", p.id}, {"shape", p.value.shape}, {"offset", offset}, {"length", p.value.size()}});
        offset += p.value.size();
    }
    manifest["floats_per_section"] = offset;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
    const std::string text = manifest.dump();
    out.write(kMagic, sizeof(kMagic));
    util::write_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& p : ckpt.params) util::write_f32(out, p.value.data);
    if (has_moments) {
        for (const auto& m : ckpt.optimizer.m) util::write_f32(out, m);
        for (const auto& v : ckpt.optimizer.v) util::write_f32(out, v);
    }
    if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    const std::string what = "checkpoint " + path.string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + what);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (in.gcount() != sizeof(magic) || !std::equal(magic, magic + 8, kMagic)) throw IoError(what + ": bad magic");
    const std::uint64_t len = util::read_u64(in, what);
    if (len > (1ULL << 30)) throw IoError(what + ": implausible manifest length");
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (static_cast<std::uint64_t>(in.gcount()) != len) throw IoError(what + ": truncated manifest");

    Checkpoint ckpt;
    try {
        const auto manifest = nlohmann::json::parse(text);
        if (manifest.at("format").get<std::string>() != Checkpoint::kFormat) {
            throw IoError(what + ": unsupported format " + manifest.at("format").dump());
        }
        ckpt.model_config = manifest.at("model_config");
        ckpt.config_hash = manifest.at("config_hash").get<std::string>();
        ckpt.metadata = manifest.at("metadata");
        ckpt.epoch = manifest.at("epoch").get<std::uint64_t>();
        ckpt.seed = manifest.at("seed").get<std::uint64_t>();
        ckpt.optimizer.step = manifest.at("optimizer").at("step").get<std::uint64_t>();
        const bool has_moments = manifest.at("optimizer").at("has_moments").get<bool>();
        std::uint64_t expected_offset = 0;
        for (const auto& entry : manifest.at("params")) {
            Shape shape = entry.at("shape").get<Shape>();
            const auto length = entry.at("length").get<std::uint64_t>();
            if (entry.at("offset").get<std::uint64_t>() != expected_offset || numel(shape) != length) {
                throw IoError(what + ": inconsistent entry for parameter " + entry.at("id").dump());
            }
            expected_offset += length;
            ckpt.params.emplace_back(entry.at("id").get<std::string>(), Tensor<float>(std::move(shape)));
        }
        if (manifest.at("floats_per_section").get<std::uint64_t>() != expected_offset) {
            throw IoError(what + ": parameter lengths do not add up");
        }
        for (auto& p : ckpt.params) util::read_f32(in, p.value.data, what);
        if (has_moments) {
            ckpt.optimizer = AdamState<float>::zeros_like(ckpt.params);
            ckpt.optimizer.step = manifest.at("optimizer").at("step").get<std::uint64_t>();
            for (auto& m : ckpt.optimizer.m) util::read_f32(in, m, what);
            for (auto& v : ckpt.optimizer.v) util::read_f32(in, v, what);
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(what + ": malformed manifest: " + e.what());
    }
    if (in.peek() != std::char_traits<char>::eof()) throw IoError(what + ": trailing bytes after arrays");
    return ckpt;
}

}  // namespace rtcm::nn
