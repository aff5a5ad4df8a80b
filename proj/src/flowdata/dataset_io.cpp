#include "rtcm/flowdata/dataset_io.hpp"

#include <fstream>

#include <json.hpp>

#include "rtcm/errors.hpp"
#include "rtcm/util/binary_io.hpp"

namespace rtcm::flowdata {

using nlohmann::json;

void write_dataset(const std::filesystem::path& dir, const FlowDataset& dataset) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create dataset directory " + dir.string() + ": " + ec.message());

    json manifest;
    manifest["format"] = kDatasetFormat;
    manifest["n_sequences"] = dataset.sequences.size();
    manifest["dt_low"] = dataset.dt_low;
    manifest["dt_high"] = dataset.dt_high;
    const auto& st = dataset.stats;
    manifest["normalization"] = {{"resistance_mean", st.resistance_mean},
                                 {"resistance_std", st.resistance_std},
                                 {"velocity_scale", st.velocity_scale},
                                 {"coord_center", {st.coord_center[0], st.coord_center[1], st.coord_center[2]}},
                                 {"coord_scale", st.coord_scale}};
    json resistances = json::array();
    json sequences = json::array();
    std::uint64_t offset = 0;
    for (const auto& s : dataset.sequences) {
        const std::uint64_t n = s.n_points();
        json entry = {{"vessel_id", s.vessel_id},
                      {"resolution", to_string(s.resolution)},
                      {"resistance", s.resistance},
                      {"dt", s.dt},
                      {"n_points", n},
                      {"n_frames", s.n_frames()},
                      {"first_time_index", s.frames.empty() ? 0 : s.frames.front().time_index},
                      {"coords_offset", offset},
                      {"coords_length", s.coords.size()}};
        offset += s.coords.size();
        std::uint64_t frame_floats = 0;
        for (const auto& f : s.frames) frame_floats += f.velocity.size();
        entry["frames_offset"] = offset;
        entry["frames_length"] = frame_floats;
        offset += frame_floats;
        sequences.push_back(std::move(entry));
        if (s.resolution == Resolution::Low) resistances.push_back(s.resistance);
    }
    manifest["resistances"] = std::move(resistances);
    manifest["sequences"] = std::move(sequences);
    manifest["total_floats"] = offset;

    {
        std::ofstream out(dir / "data.bin", std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + (dir / "data.bin").string());
        for (const auto& s : dataset.sequences) {
            util::write_f32(out, s.coords);
            for (const auto& f : s.frames) util::write_f32(out, f.velocity);
        }
        if (!out) throw IoError("failed writing " + (dir / "data.bin").string());
    }
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + (dir / "manifest.json").string());
}

FlowDataset read_dataset(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    const auto data_path = dir / "data.bin";
    std::ifstream mf(manifest_path);
    if (!mf) throw IoError("cannot open " + manifest_path.string());

    FlowDataset ds;
    struct Layout {
        std::uint64_t n_points, n_frames;
    };
    std::vector<Layout> layouts;
    std::uint64_t total = 0;
    try {
        const json manifest = json::parse(mf);
        const auto format = manifest.at("format").get<std::string>();
        if (format != kDatasetFormat) throw IoError(manifest_path.string() + ": unsupported format '" + format + "'");
        ds.dt_low = manifest.at("dt_low").get<double>();
        ds.dt_high = manifest.at("dt_high").get<double>();
        const auto& norm = manifest.at("normalization");
        ds.stats.resistance_mean = norm.at("resistance_mean").get<double>();
        ds.stats.resistance_std = norm.at("resistance_std").get<double>();
        ds.stats.velocity_scale = norm.at("velocity_scale").get<double>();
        const auto center = norm.at("coord_center").get<std::vector<double>>();
        if (center.size() != 3) throw IoError(manifest_path.string() + ": coord_center must have 3 entries");
        for (int c = 0; c < 3; ++c) ds.stats.coord_center[c] = center[c];
        ds.stats.coord_scale = norm.at("coord_scale").get<double>();

        const auto& seqs = manifest.at("sequences");
        if (manifest.at("n_sequences").get<std::uint64_t>() != seqs.size()) {
            throw IoError(manifest_path.string() + ": n_sequences disagrees with the sequence list");
        }
        std::uint64_t offset = 0;
        for (const auto& e : seqs) {
            FlowSequence s;
            s.vessel_id = e.at("vessel_id").get<std::string>();
            s.resolution = resolution_from_string(e.at("resolution").get<std::string>());
            s.resistance = e.at("resistance").get<double>();
            s.dt = e.at("dt").get<double>();
            const auto n = e.at("n_points").get<std::uint64_t>();
            const auto frames = e.at("n_frames").get<std::uint64_t>();
            const auto first = e.at("first_time_index").get<std::uint64_t>();
            const std::string where = manifest_path.string() + ": sequence " + s.vessel_id + "/" + to_string(s.resolution);
            if (e.at("coords_offset").get<std::uint64_t>() != offset) throw IoError(where + ": coords_offset out of order");
            if (e.at("coords_length").get<std::uint64_t>() != 3 * n) {
                throw IoError(where + ": coords_length " + e.at("coords_length").dump() + " does not match n_points " +
                              std::to_string(n) + " x 3");
            }
            offset += 3 * n;
            if (e.at("frames_offset").get<std::uint64_t>() != offset) throw IoError(where + ": frames_offset out of order");
            if (e.at("frames_length").get<std::uint64_t>() != 3 * n * frames) {
                throw IoError(where + ": frames_length " + e.at("frames_length").dump() + " does not match " +
                              std::to_string(frames) + " frames x " + std::to_string(n) + " points x 3");
            }
            offset += 3 * n * frames;
            if (!(s.dt > 0.0)) throw IoError(where + ": dt must be positive");
            s.frames.resize(frames);
            for (std::uint64_t j = 0; j < frames; ++j) {
                s.frames[j].time_index = first + j;
                s.frames[j].time_seconds = static_cast<double>(first + j) * s.dt;
            }
            layouts.push_back({n, frames});
            ds.sequences.push_back(std::move(s));
        }
        total = manifest.at("total_floats").get<std::uint64_t>();
        if (total != offset) throw IoError(manifest_path.string() + ": total_floats disagrees with sequence lengths");
    } catch (const json::exception& e) {
        throw IoError(manifest_path.string() + ": malformed manifest: " + e.what());
    }

    std::error_code ec;
    const auto size = std::filesystem::file_size(data_path, ec);
    if (ec) throw IoError("cannot stat " + data_path.string() + ": " + ec.message());
    if (size != total * 4) {
        throw IoError(data_path.string() + ": holds " + std::to_string(size) + " bytes, manifest describes " +
                      std::to_string(total * 4));
    }
    std::ifstream in(data_path, std::ios::binary);
    if (!in) throw IoError("cannot open " + data_path.string());
    for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
        auto& s = ds.sequences[i];
        s.coords.resize(3 * layouts[i].n_points);
        util::read_f32(in, s.coords, data_path.string());
        for (auto& f : s.frames) {
            f.velocity.resize(3 * layouts[i].n_points);
            util::read_f32(in, f.velocity, data_path.string());
        }
    }
    return ds;
}

}  // namespace rtcm::flowdata
