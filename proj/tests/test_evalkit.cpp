#include <doctest.h>

#include <cmath>
#include <numeric>

#include "rtcm/errors.hpp"
#include "rtcm/evalkit/evaluate.hpp"
#include "rtcm/evalkit/metrics.hpp"
#include "rtcm/evalkit/report.hpp"
#include "rtcm/flowdata/samples.hpp"
#include "rtcm/util/random.hpp"
#include "model_fixture.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace rtcm;
using namespace rtcm::evalkit;

namespace {

using F = std::vector<float>;
using Span = std::span<const float>;

F random_field(util::Rng& rng, std::size_t n, double scale = 10.0) {
    F v(3 * n);
    for (auto& x : v) x = static_cast<float>(scale * (2.0 * rng.uniform() - 1.0));
    return v;
}

// Low and High sequences of a field that is exactly affine in time:
// v(x, t) = a(x) + t b(x), sampled identically by both resolutions.
flowdata::FlowDataset affine_dataset(std::size_t n_points, std::size_t n_low, std::size_t stride) {
    util::Rng rng(21);
    const F coords = random_field(rng, n_points, 5.0);
    const F a = random_field(rng, n_points, 8.0);
    const F b = random_field(rng, n_points, 2.0);
    const double dt_low = 0.25;  // binary fractions keep the times exact
    flowdata::FlowDataset ds;
    ds.dt_low = dt_low;
    ds.dt_high = dt_low / static_cast<double>(stride);
    for (auto [res, dt, frames] : {std::tuple{flowdata::Resolution::Low, dt_low, n_low},
                                   std::tuple{flowdata::Resolution::High, dt_low / stride, (n_low - 1) * stride + 1}}) {
        flowdata::FlowSequence s;
        s.vessel_id = "tube";
        s.resolution = res;
        s.resistance = 1.5;
        s.dt = dt;
        s.coords = coords;
        for (std::size_t j = 0; j < frames; ++j) {
            flowdata::Frame f;
            f.time_index = j;
            f.time_seconds = static_cast<double>(j) * dt;
            f.velocity.resize(coords.size());
            for (std::size_t c = 0; c < coords.size(); ++c) f.velocity[c] = static_cast<float>(a[c] + f.time_seconds * b[c]);
            s.frames.push_back(std::move(f));
        }
        ds.sequences.push_back(std::move(s));
    }
    ds.stats = flowdata::compute_stats(ds.sequences);
    return ds;
}

}  // namespace

TEST_SUITE("evalkit") {

TEST_CASE("linear interpolation examples") {
    const F vs{2, 0, 0}, ve{4, 0, 0};
    CHECK(linear_interp<float>(vs, ve, 0.0, 1.0, 0.5) == F{3, 0, 0});
    util::Rng rng(1);
    const F a = random_field(rng, 20), b = random_field(rng, 20);
    CHECK(linear_interp<float>(a, b, 0.3, 0.7, 0.3) == a);
    CHECK(linear_interp<float>(a, b, 0.3, 0.7, 0.7) == b);
    const auto third = linear_interp<float>(a, b, 2.0, 3.0, 2.0 + 1.0 / 3.0);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(third[i] == doctest::Approx(2.0 / 3.0 * a[i] + 1.0 / 3.0 * b[i]));
    CHECK_THROWS_AS(linear_interp<float>(a, b, 1.0, 1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(linear_interp<float>(a, F(3), 0.0, 1.0, 0.5), ShapeError);
}

TEST_CASE("linear interpolation is exact on time-affine fields") {
    util::Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> a(30), b(30);
        for (auto& x : a) x = 20.0 * rng.uniform() - 10.0;
        for (auto& x : b) x = 20.0 * rng.uniform() - 10.0;
        const double s = rng.uniform(), e = s + 0.1 + rng.uniform(), c = s + (e - s) * rng.uniform();
        std::vector<double> vs(30), ve(30);
        for (std::size_t i = 0; i < 30; ++i) {
            vs[i] = a[i] + s * b[i];
            ve[i] = a[i] + e * b[i];
        }
        const auto got = linear_interp<double>(vs, ve, s, e, c);
        for (std::size_t i = 0; i < 30; ++i) {
            const double want = a[i] + c * b[i];
            CHECK(std::abs(got[i] - want) <= 1e-6 * std::max(1.0, std::abs(want)));
        }
    }
}

TEST_CASE("mme examples") {
    const F gt{3, 0, 0, 0, 0, 0};
    const F pred{0, 4, 0, 2, 0, 0};
    CHECK(mme<float>(gt, gt) == 0.0);
    CHECK(mme<float>(pred, gt) == doctest::Approx(1.5));
    CHECK_THROWS_AS(mme<float>(F{1, 2, 3}, gt), ShapeError);
}

TEST_CASE("mme is invariant to joint point permutations") {
    util::Rng rng(3);
    const F p = random_field(rng, 40), g = random_field(rng, 40);
    std::vector<std::size_t> perm(40);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    F pp(p.size()), gp(g.size());
    for (std::size_t i = 0; i < 40; ++i)
        for (int c = 0; c < 3; ++c) {
            pp[3 * i + c] = p[3 * perm[i] + c];
            gp[3 * i + c] = g[3 * perm[i] + c];
        }
    CHECK(mme<float>(pp, gp) == doctest::Approx(mme<float>(p, g)).epsilon(1e-12));
}

TEST_CASE("relative error examples") {
    RelativeError one;
    one.add<float>(F{3, 0, 0}, F{0, 4, 0});
    CHECK(one.percent() == doctest::Approx(25.0));

    RelativeError two;
    two.add<float>(F{3, 0, 0, 0, 7, 0}, F{4, 0, 0, 0, 4, 0});
    CHECK(two.percent() == doctest::Approx(50.0));

    RelativeError filtered;
    filtered.add<float>(F{3, 0, 0, 1, 0, 0}, F{4, 0, 0, 1e-5f, 0, 0});
    CHECK(filtered.pairs() == 1);
    CHECK(filtered.excluded() == 1);
    CHECK(filtered.percent() == doctest::Approx(25.0));

    RelativeError none;
    none.add<float>(F{1, 0, 0}, F{0, 0, 0});
    CHECK_THROWS_AS(none.percent(), NumericalError);
}

TEST_CASE("metrics agree with brute-force loops") {
    util::Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.below(50), frames = 1 + rng.below(4);
        std::vector<F> pred, gt;
        for (std::size_t f = 0; f < frames; ++f) {
            pred.push_back(random_field(rng, n));
            gt.push_back(random_field(rng, n));
            if (rng.uniform() < 0.3) gt.back()[0] = gt.back()[1] = gt.back()[2] = 0.0f;
        }
        const double m = mme<float>(pred[0], gt[0]);
        const double mo = oracle::mme(pred[0], gt[0]);
        CHECK(std::abs(m - mo) <= 1e-9 * std::max(1.0, mo));
        std::vector<Span> ps(pred.begin(), pred.end()), gs(gt.begin(), gt.end());
        const double re = relative_error<float>(ps, gs);
        const double ro = oracle::relative_error(pred, gt);
        CHECK(std::abs(re - ro) <= 1e-9 * ro);
    }
}

TEST_CASE("relative error is unchanged when both fields are doubled") {
    util::Rng rng(5);
    const F p = random_field(rng, 30), g = random_field(rng, 30);
    F p2 = p, g2 = g;
    for (auto& x : p2) x *= 2.0f;
    for (auto& x : g2) x *= 2.0f;
    CHECK(relative_error<float>({Span(p2)}, {Span(g2)}) == doctest::Approx(relative_error<float>({Span(p)}, {Span(g)})));
}

TEST_CASE("range table examples") {
    const F v{1, -2, 2};
    const auto t = range_table<float>({Span(v)});
    CHECK(t.norm.min == doctest::Approx(3.0));
    CHECK(t.norm.max == doctest::Approx(3.0));
    CHECK(t.y.min == -2.0);
    CHECK(t.y.max == -2.0);
    util::Rng rng(6);
    const F w = random_field(rng, 25);
    const auto once = range_table<float>({Span(w), Span(v)});
    const auto twice = range_table<float>({Span(w), Span(v), Span(w)});
    CHECK(once.to_json() == twice.to_json());
    CHECK_THROWS_AS(range_table<float>({}), ShapeError);
}

TEST_CASE("ground-truth stub scores zero error and covers every frame once") {
    test_support::SmallData data(16, 1, 6);
    const auto samples = flowdata::enumerate_samples(data.dataset, data.pairs, 1);
    const auto report = evaluate(data.dataset, data.pairs, samples, 1, ground_truth_echo());
    CHECK(report.re_network == 0.0);
    CHECK(report.mme_mean_network == 0.0);
    CHECK(report.re_baseline > 0.0);
    REQUIRE(report.sequences.size() == data.pairs.size());
    for (const auto& s : report.sequences) {
        CHECK(s.samples == 5);
        std::vector<std::size_t> want(11);
        std::iota(want.begin(), want.end(), 0);
        CHECK(s.frame_index == want);
        CHECK(s.mme_network.size() == 11);
        for (double m : s.mme_network) CHECK(m == 0.0);
    }
    CHECK(report.frames == 11 * data.pairs.size());
}

TEST_CASE("a sample whose successor is absent contributes its final frame") {
    test_support::SmallData data(16, 1, 6);
    const std::vector<flowdata::SampleIndex> samples{{0, 1}, {0, 3}, {0, 4}};
    const auto report = evaluate(data.dataset, data.pairs, samples, 1, ground_truth_echo());
    REQUIRE(report.sequences.size() == 1);
    CHECK(report.sequences[0].frame_index == std::vector<std::size_t>{2, 3, 4, 6, 7, 8, 9, 10});
    CHECK_THROWS_AS(evaluate(data.dataset, data.pairs, {}, 1, ground_truth_echo()), ConfigError);
}

TEST_CASE("baseline is exact on fields linear in time") {
    for (std::size_t k : {1u, 2u}) {
        const auto ds = affine_dataset(12, 5, 2 * (k + 1));
        const auto pairs = flowdata::pair_sequences(ds);
        const auto samples = flowdata::enumerate_samples(ds, pairs, k);
        const auto report = evaluate(ds, pairs, samples, k, ground_truth_echo());
        for (double m : report.sequences[0].mme_baseline) CHECK(m <= 1e-5);
        CHECK(report.re_baseline < 1e-4);
    }
}

TEST_CASE("results do not depend on the thread count") {
    test_support::SmallData data(16, 1, 6);
    const auto cfg = data.model_config();
    const auto model = model::PointNetModel<float>::init(cfg, 3);
    const auto samples = flowdata::enumerate_samples(data.dataset, data.pairs, 1);
    const auto one = evaluate(data.dataset, data.pairs, samples, 1, model_predictor(model), 1);
    const auto three = evaluate(data.dataset, data.pairs, samples, 1, model_predictor(model), 3);
    CHECK(one.to_json().dump() == three.to_json().dump());
}

TEST_CASE("report files") {
    test_support::SmallData data(16, 1, 4);
    const auto samples = flowdata::enumerate_samples(data.dataset, data.pairs, 1);
    const auto report = evaluate(data.dataset, data.pairs, samples, 1, ground_truth_echo());
    test_support::TempDir tmp("evalkit_report");
    write_report(tmp.path, report);
    const auto& first = report.sequences[0];
    const auto csv = test_support::read_file(tmp.path / first.csv_name());
    CHECK(csv.rfind("frame_index,mme_network,mme_baseline\n", 0) == 0);
    CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == first.frame_index.size() + 1);
    const auto summary = nlohmann::json::parse(test_support::read_file(tmp.path / "summary.json"));
    CHECK(summary.at("sequences").size() == report.sequences.size());
    CHECK(format_float(0.1f) == "0.100000001");
    CHECK(format_float(1.0 / 3.0) == "0.333333333");
    CHECK(format_float(2.0) == "2");
}

TEST_CASE("relative-error table") {
    auto summary = [](double net, double lin, double r2) {
        return nlohmann::json{{"re_network_avg_percent", net},
                              {"re_baseline_avg_percent", lin},
                              {"sequences",
                               {{{"vessel_id", "vessel0"}, {"resistance", 1.0}, {"re_network_percent", net},
                                 {"re_baseline_percent", lin}},
                                {{"vessel_id", "vessel0"}, {"resistance", r2}, {"re_network_percent", net},
                                 {"re_baseline_percent", lin}}}}};
    };
    const auto t = re_table({{"full", summary(17.814, 34.03, 2.0)}, {"mse", summary(32.06, 34.03, 2.0)}});
    CHECK(t.columns == std::vector<std::string>{"Field", "full", "mse", "Linear"});
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[0] == std::vector<std::string>{"vessel0+R1", "17.81", "32.06", "34.03"});
    CHECK(t.rows[2] == std::vector<std::string>{"Average", "17.81", "32.06", "34.03"});
    CHECK(t.to_csv().rfind("Field,full,mse,Linear\n", 0) == 0);
    CHECK(t.to_markdown().find("| Average |") != std::string::npos);
    CHECK_THROWS_AS(re_table({{"a", summary(1, 2, 2.0)}, {"b", summary(1, 2, 2.5)}}), ConfigError);
    CHECK_THROWS_AS(re_table({{"a", nlohmann::json{{"sequences", 3}}}}), IoError);
    CHECK_THROWS_AS(re_table({}), ConfigError);
}

TEST_CASE("interpolated sequences have (n - 1)(k + 1) + 1 frames") {
    const auto ds = affine_dataset(8, 7, 6);
    const auto& low = ds.sequences[0];
    for (std::size_t k : {1u, 2u}) {
        // echo of the linear baseline is exact on this field
        const Predictor linear = [k](const flowdata::SampleRecord& s) {
            std::vector<float> out(s.n_points * (k + 2) * 3);
            for (std::size_t f = 0; f < k + 2; ++f) {
                const double c = static_cast<double>(f) / static_cast<double>(k + 1);
                const auto v = linear_interp<float>(s.u_t, s.u_t1, 0.0, 1.0, c);
                for (std::size_t i = 0; i < s.n_points; ++i)
                    for (int d = 0; d < 3; ++d) out[(i * (k + 2) + f) * 3 + d] = v[3 * i + d];
            }
            return out;
        };
        const auto high = interpolate_sequence(low, k, linear);
        CHECK(high.n_frames() == 6 * (k + 1) + 1);
        CHECK(high.dt == doctest::Approx(low.dt / static_cast<double>(k + 1)));
        CHECK(high.resolution == flowdata::Resolution::High);
        high.validate();
        CHECK(high.frames.front().velocity == low.frames.front().velocity);
        CHECK(high.frames.back().velocity == low.frames.back().velocity);
        CHECK(high.frames[k + 1].velocity == low.frames[1].velocity);
    }
}

}
