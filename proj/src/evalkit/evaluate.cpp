#include "rtcm/evalkit/evaluate.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <thread>

#include "rtcm/errors.hpp"
#include "rtcm/flowdata/samples.hpp"

namespace rtcm::evalkit {

using flowdata::SampleRecord;

namespace {

// [N, F, 3] point-major -> F fields of N x 3.
std::vector<std::vector<float>> split_frames(const std::vector<float>& point_major, std::size_t n, std::size_t frames) {
    std::vector<std::vector<float>> out(frames, std::vector<float>(3 * n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t f = 0; f < frames; ++f) {
            for (int c = 0; c < 3; ++c) out[f][3 * i + c] = point_major[(i * frames + f) * 3 + c];
        }
    }
    return out;
}

std::vector<float> checked_predict(const Predictor& predictor, const SampleRecord& rec) {
    std::vector<float> y = predictor(rec);
    if (y.size() != rec.n_points * (rec.k + 2) * 3) {
        throw ShapeError("predictor returned " + std::to_string(y.size()) + " values, expected N x (k + 2) x 3 = " +
                         std::to_string(rec.n_points * (rec.k + 2) * 3));
    }
    return y;
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn fn) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += threads) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

void merge(RangeTable& into, const RangeTable& from) {
    if (from.empty) return;
    auto widen = [&](Range& r, const Range& s) {
        if (into.empty) {
            r = s;
        } else {
            r.min = std::min(r.min, s.min);
            r.max = std::max(r.max, s.max);
        }
    };
    widen(into.norm, from.norm);
    widen(into.x, from.x);
    widen(into.y, from.y);
    widen(into.z, from.z);
    into.empty = false;
}

}  // namespace

Predictor ground_truth_echo() {
    return [](const SampleRecord& rec) {
        const std::size_t n = rec.n_points, frames = rec.k + 2;
        std::vector<float> y(n * frames * 3);
        for (std::size_t f = 0; f < frames; ++f) {
            for (std::size_t i = 0; i < n; ++i) {
                for (int c = 0; c < 3; ++c) y[(i * frames + f) * 3 + c] = rec.targets.at((f * n + i) * 3 + c);
            }
        }
        return y;
    };
}

Predictor model_predictor(const model::PointNetModel<float>& m) {
    return [&m](const SampleRecord& rec) { return m.predict(rec); };
}

std::string format_float(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

std::string SequenceEval::csv_name() const { return "mme_" + vessel_id + "_r" + format_float(resistance) + ".csv"; }

EvalReport evaluate(const flowdata::FlowDataset& dataset, const std::vector<flowdata::SequencePair>& pairs,
                    const std::vector<flowdata::SampleIndex>& samples, std::size_t k, const Predictor& predictor,
                    std::size_t threads) {
    if (samples.empty()) throw ConfigError("evaluation split is empty");
    const std::size_t frames = k + 2;

    std::vector<flowdata::SampleIndex> order(samples);
    std::sort(order.begin(), order.end());
    std::vector<SampleRecord> records(order.size());
    std::vector<std::vector<float>> predictions(order.size());
    parallel_for(order.size(), threads, [&](std::size_t i) {
        records[i] = flowdata::make_sample(dataset, pairs, order[i], k);
        predictions[i] = checked_predict(predictor, records[i]);
    });

    EvalReport report;
    report.k = k;
    RelativeError pooled_net, pooled_base;
    std::vector<double> all_mme_net, all_mme_base;

    std::size_t begin = 0;
    while (begin < order.size()) {
        std::size_t end = begin;
        while (end < order.size() && order[end].pair == order[begin].pair) ++end;

        // High frame -> (record, slot); the lowest slot wins so an interval's
        // start frame is preferred over the previous interval's end frame.
        std::map<std::size_t, std::pair<std::size_t, std::size_t>> chosen;
        for (std::size_t r = begin; r < end; ++r) {
            for (std::size_t j = 0; j < frames; ++j) {
                const std::size_t h = records[r].high_indices[j];
                auto it = chosen.find(h);
                if (it == chosen.end() || j < it->second.second) chosen[h] = {r, j};
            }
        }

        const auto& low = dataset.sequences.at(pairs.at(order[begin].pair).low);
        SequenceEval seq;
        seq.vessel_id = low.vessel_id;
        seq.resistance = low.resistance;
        seq.samples = end - begin;
        RelativeError re_net, re_base;
        std::map<std::size_t, std::vector<std::vector<float>>> split_cache;
        for (const auto& [h, slot] : chosen) {
            const auto [r, j] = slot;
            const SampleRecord& rec = records[r];
            const std::size_t n = rec.n_points;
            auto cached = split_cache.find(r);
            if (cached == split_cache.end()) cached = split_cache.emplace(r, split_frames(predictions[r], n, frames)).first;
            const std::vector<float>& net = cached->second[j];
            const std::vector<float> base = linear_interp<float>(rec.u_t, rec.u_t1, 0.0, static_cast<double>(k + 1),
                                                                 static_cast<double>(j));
            const std::span<const float> gt(rec.targets.data() + j * n * 3, n * 3);
            seq.frame_index.push_back(h);
            seq.mme_network.push_back(mme<float>(net, gt));
            seq.mme_baseline.push_back(mme<float>(base, gt));
            re_net.add<float>(net, gt);
            re_base.add<float>(base, gt);
            pooled_net.add<float>(net, gt);
            pooled_base.add<float>(base, gt);
            seq.range_network.add<float>(net);
            seq.range_baseline.add<float>(base);
            seq.range_gt.add<float>(gt);
        }
        seq.mme_mean_network = mean(seq.mme_network);
        seq.mme_mean_baseline = mean(seq.mme_baseline);
        seq.re_network = re_net.percent();
        seq.re_baseline = re_base.percent();
        all_mme_net.insert(all_mme_net.end(), seq.mme_network.begin(), seq.mme_network.end());
        all_mme_base.insert(all_mme_base.end(), seq.mme_baseline.begin(), seq.mme_baseline.end());
        merge(report.range_network, seq.range_network);
        merge(report.range_baseline, seq.range_baseline);
        merge(report.range_gt, seq.range_gt);
        report.sequences.push_back(std::move(seq));
        begin = end;
    }

    report.frames = all_mme_net.size();
    report.re_network = pooled_net.percent();
    report.re_baseline = pooled_base.percent();
    report.mme_mean_network = mean(all_mme_net);
    report.mme_mean_baseline = mean(all_mme_base);
    std::vector<double> re_n, re_b;
    for (const auto& s : report.sequences) {
        re_n.push_back(s.re_network);
        re_b.push_back(s.re_baseline);
    }
    report.re_network_avg = mean(re_n);
    report.re_baseline_avg = mean(re_b);
    return report;
}

nlohmann::json EvalReport::to_json() const {
    using nlohmann::json;
    // Values go through format_float so the file shows 9 significant digits.
    auto num = [](double v) { return json::parse(format_float(v)); };
    json seqs = json::array();
    for (const auto& s : sequences) {
        seqs.push_back({
            {"vessel_id", s.vessel_id},
            {"resistance", num(s.resistance)},
            {"samples", s.samples},
            {"frames", s.frame_index.size()},
            {"csv", s.csv_name()},
            {"re_network_percent", num(s.re_network)},
            {"re_baseline_percent", num(s.re_baseline)},
            {"mme_mean_network", num(s.mme_mean_network)},
            {"mme_mean_baseline", num(s.mme_mean_baseline)},
            {"ranges", {{"network", s.range_network.to_json()},
                        {"baseline", s.range_baseline.to_json()},
                        {"ground_truth", s.range_gt.to_json()}}},
        });
    }
    auto rounded = [&](json r) {
        for (auto& [key, v] : r.items()) v = json::array({num(v[0].get<double>()), num(v[1].get<double>())});
        return r;
    };
    for (auto& s : seqs) {
        for (auto& [key, r] : s["ranges"].items()) r = rounded(r);
    }
    return {
        {"k", k},
        {"frames", frames},
        {"units", {{"velocity", "cm/s"}, {"re", "percent"}}},
        {"re_network_percent", num(re_network)},
        {"re_baseline_percent", num(re_baseline)},
        {"re_network_avg_percent", num(re_network_avg)},
        {"re_baseline_avg_percent", num(re_baseline_avg)},
        {"mme_mean_network", num(mme_mean_network)},
        {"mme_mean_baseline", num(mme_mean_baseline)},
        {"ranges", {{"network", rounded(range_network.to_json())},
                    {"baseline", rounded(range_baseline.to_json())},
                    {"ground_truth", rounded(range_gt.to_json())}}},
        {"sequences", seqs},
    };
}

void write_report(const std::filesystem::path& dir, const EvalReport& report) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    for (const auto& s : report.sequences) {
        const auto path = dir / s.csv_name();
        std::ofstream out(path, std::ios::binary);
        out << "frame_index,mme_network,mme_baseline\n";
        for (std::size_t i = 0; i < s.frame_index.size(); ++i) {
            out << s.frame_index[i] << ',' << format_float(s.mme_network[i]) << ',' << format_float(s.mme_baseline[i])
                << '\n';
        }
        if (!out) throw IoError("cannot write " + path.string());
    }
    const auto path = dir / "summary.json";
    std::ofstream out(path, std::ios::binary);
    out << report.to_json().dump(2) << '\n';
    if (!out) throw IoError("cannot write " + path.string());
}

SampleRecord interval_sample(const flowdata::FlowSequence& low, std::size_t t, std::size_t k) {
    if (t + 1 >= low.n_frames()) throw ShapeError("interval past the end of the sequence");
    SampleRecord rec;
    rec.index = {0, t};
    rec.k = k;
    rec.n_points = low.n_points();
    rec.coords = low.coords;
    rec.u_t = low.frames[t].velocity;
    rec.u_t1 = low.frames[t + 1].velocity;
    rec.resistance = low.resistance;
    for (std::size_t j = 0; j < k + 2; ++j) {
        const double position = static_cast<double>(t) + static_cast<double>(j) / static_cast<double>(k + 1);
        rec.times.push_back(flowdata::normalize_time(position, low.n_frames()));
        rec.times_seconds.push_back(low.frames[t].time_seconds + low.dt * static_cast<double>(j) / static_cast<double>(k + 1));
    }
    return rec;
}

flowdata::FlowSequence interpolate_sequence(const flowdata::FlowSequence& low, std::size_t k, const Predictor& predictor) {
    low.validate();
    if (low.n_frames() < 2) throw ShapeError("interpolation needs at least two frames");
    flowdata::FlowSequence out;
    out.vessel_id = low.vessel_id;
    out.resolution = flowdata::Resolution::High;
    out.resistance = low.resistance;
    out.dt = low.dt / static_cast<double>(k + 1);
    out.coords = low.coords;
    const std::size_t n = low.n_points();
    const std::uint64_t first = low.frames.front().time_index * (k + 1);
    for (std::size_t t = 0; t + 1 < low.n_frames(); ++t) {
        const SampleRecord rec = interval_sample(low, t, k);
        const auto fields = split_frames(checked_predict(predictor, rec), n, k + 2);
        const bool last = t + 2 == low.n_frames();
        for (std::size_t j = 0; j < (last ? k + 2 : k + 1); ++j) {
            flowdata::Frame f;
            f.time_index = first + out.frames.size();
            f.time_seconds = low.frames.front().time_seconds + out.dt * static_cast<double>(out.frames.size());
            f.velocity = fields[j];
            out.frames.push_back(std::move(f));
        }
    }
    return out;
}

}  // namespace rtcm::evalkit
