#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rtcm/errors.hpp"
#include "rtcm/nn/adam.hpp"
#include "rtcm/nn/checkpoint.hpp"
#include "rtcm/nn/gemm.hpp"
#include "rtcm/nn/grad_check.hpp"
#include "rtcm/nn/ops.hpp"
#include "rtcm/util/random.hpp"
#include "test_support.hpp"

using namespace rtcm;
using namespace rtcm::nn;

namespace {

template <typename T>
Tensor<T> random_tensor(Shape shape, util::Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor<T> t(std::move(shape));
    for (auto& x : t.data) x = static_cast<T>(lo + (hi - lo) * rng.uniform());
    return t;
}

// Values in [-1, -0.1] u [0.1, 1]: no ReLU kink within a finite-difference step.
Tensor<double> away_from_zero(Shape shape, util::Rng& rng) {
    Tensor<double> t(std::move(shape));
    for (auto& x : t.data) x = (0.1 + 0.9 * rng.uniform()) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    return t;
}

// Random linear read-out so that every output entry gets a distinct weight.
Var readout(Tape<double>& tape, Var y, const Tensor<double>& w) {
    const auto& v = tape.value(y);
    Var flat = reshape(tape, y, {1, v.size()});
    Var zero = tape.constant(Tensor<double>({1}));
    return sum(tape, affine(tape, flat, tape.constant(w), zero));
}

template <typename T>
std::vector<T> naive_gemm(std::size_t m, std::size_t k, std::size_t n, const std::vector<T>& a, const std::vector<T>& b) {
    std::vector<T> c(m * n, T(0));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            long double acc = 0;
            for (std::size_t p = 0; p < k; ++p) acc += static_cast<long double>(a[i * k + p]) * b[p * n + j];
            c[i * n + j] = static_cast<T>(acc);
        }
    return c;
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("affine examples") {
    Tape<float> tape;
    Var y = affine(tape, tape.constant(Tensor<float>({1, 1}, {3.0f})), tape.constant(Tensor<float>({1, 1}, {2.0f})),
                   tape.constant(Tensor<float>({1}, {1.0f})));
    CHECK(tape.value(y).data == std::vector<float>{7.0f});

    util::Rng rng(1);
    auto x = random_tensor<float>({5, 3}, rng);
    Tensor<float> eye({3, 3});
    for (int i = 0; i < 3; ++i) eye[i * 3 + i] = 1.0f;
    Var z = affine(tape, tape.constant(x), tape.constant(eye), tape.constant(Tensor<float>({3})));
    CHECK(tape.value(z).data == x.data);
}

TEST_CASE("gemm matches a naive triple loop") {
    util::Rng rng(2);
    for (auto [m, k, n] : {std::tuple<std::size_t, std::size_t, std::size_t>{1, 1, 1}, {7, 9, 13}, {33, 64, 17},
                           {6, 256, 300}, {100, 3, 64}, {13, 1030, 5}}) {
        auto a = random_tensor<double>({m, k}, rng).data;
        auto b = random_tensor<double>({k, n}, rng).data;
        std::vector<double> c(m * n, 0.5);
        gemm(m, k, n, a.data(), b.data(), c.data(), false);
        const auto ref = naive_gemm(m, k, n, a, b);
        for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(ref[i]).epsilon(1e-12));
        gemm(m, k, n, a.data(), b.data(), c.data(), true);
        for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(2 * ref[i]).epsilon(1e-12));

        std::vector<float> af(a.begin(), a.end()), bf(b.begin(), b.end()), cf(m * n);
        gemm(m, k, n, af.data(), bf.data(), cf.data(), false);
        const auto reff = naive_gemm(m, k, n, af, bf);
        for (std::size_t i = 0; i < cf.size(); ++i) CHECK(cf[i] == doctest::Approx(reff[i]).epsilon(1e-4));
    }
}

TEST_CASE("gemm rows are position independent") {
    util::Rng rng(3);
    const std::size_t m = 23, k = 70, n = 41;
    auto a = random_tensor<float>({m, k}, rng).data;
    auto b = random_tensor<float>({k, n}, rng).data;
    std::vector<float> c(m * n);
    gemm(m, k, n, a.data(), b.data(), c.data(), false);
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<float> row(n);
        gemm(1, k, n, a.data() + i * k, b.data(), row.data(), false);
        CHECK(std::equal(row.begin(), row.end(), c.begin() + i * n));
    }
}

TEST_CASE("transpose") {
    std::vector<float> src{1, 2, 3, 4, 5, 6}, dst(6);
    transpose(2, 3, src.data(), dst.data());
    CHECK(dst == std::vector<float>{1, 4, 2, 5, 3, 6});
}

TEST_CASE("relu examples") {
    Tape<double> tape;
    Var x = tape.variable(Tensor<double>({3}, {-1.0, 0.0, 2.0}));
    Var y = relu(tape, x);
    CHECK(tape.value(y).data == std::vector<double>{0.0, 0.0, 2.0});
    tape.backward(sum(tape, y));
    CHECK(tape.grad(x) == std::vector<double>{0.0, 0.0, 1.0});
}

TEST_CASE("global max pool examples") {
    Tape<double> tape;
    Var x = tape.variable(Tensor<double>({2, 2}, {1.0, 5.0, 3.0, 2.0}));
    Var y = global_max_pool(tape, x);
    CHECK(tape.value(y).data == std::vector<double>{3.0, 5.0});
    tape.backward(sum(tape, y));
    CHECK(tape.grad(x) == std::vector<double>{0.0, 1.0, 1.0, 0.0});

    Tape<double> ties;
    Var t = ties.variable(Tensor<double>({3, 1}, {2.0, 2.0, 1.0}));
    ties.backward(sum(ties, global_max_pool(ties, t)));
    CHECK(ties.grad(t) == std::vector<double>{1.0, 0.0, 0.0});
}

TEST_CASE("global max pool is invariant to point order") {
    util::Rng rng(4);
    const std::size_t n = 50, c = 17;
    auto x = random_tensor<float>({2, n, c}, rng);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Tape<float> tape;
    const auto base = tape.value(global_max_pool(tape, tape.constant(x))).data;
    for (int trial = 0; trial < 20; ++trial) {
        rng.shuffle(perm);
        Tensor<float> px({2, n, c});
        for (std::size_t b = 0; b < 2; ++b)
            for (std::size_t i = 0; i < n; ++i)
                std::copy_n(x.data.begin() + (b * n + perm[i]) * c, c, px.data.begin() + (b * n + i) * c);
        CHECK(tape.value(global_max_pool(tape, tape.constant(px))).data == base);
    }
}

TEST_CASE("concat examples") {
    Tape<double> tape;
    Var a = tape.variable(Tensor<double>({1, 2}, {1.0, 2.0}));
    Var b = tape.variable(Tensor<double>({1, 1}, {3.0}));
    Var ab = concat_channels(tape, a, b);
    CHECK(tape.value(ab).data == std::vector<double>{1.0, 2.0, 3.0});
    Var ae = concat_channels(tape, a, tape.constant(Tensor<double>({1, 0})));
    CHECK(tape.value(ae).data == tape.value(a).data);
    tape.backward(sum(tape, ab));
    CHECK(tape.grad(a) == std::vector<double>{1.0, 1.0});
    CHECK_THROWS_AS(concat_channels(tape, a, tape.constant(Tensor<double>({2, 1}))), ShapeError);
}

TEST_CASE("pointwise deconv equals row-wise affine and permutes with the rows") {
    util::Rng rng(5);
    const std::size_t n = 19, cin = 9, cout = 11;
    auto x = random_tensor<float>({n, cin}, rng);
    auto w = random_tensor<float>({cin, cout}, rng);
    auto b = random_tensor<float>({cout}, rng);
    Tape<float> tape;
    const auto y = tape.value(pointwise_deconv(tape, tape.constant(x), tape.constant(w), tape.constant(b))).data;
    for (std::size_t i = 0; i < n; ++i) {
        Tensor<float> row({1, cin}, std::vector<float>(x.data.begin() + i * cin, x.data.begin() + (i + 1) * cin));
        const auto r = tape.value(affine(tape, tape.constant(row), tape.constant(w), tape.constant(b))).data;
        CHECK(std::equal(r.begin(), r.end(), y.begin() + i * cout));
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    Tensor<float> px({n, cin});
    for (std::size_t i = 0; i < n; ++i) std::copy_n(x.data.begin() + perm[i] * cin, cin, px.data.begin() + i * cin);
    const auto py = tape.value(pointwise_deconv(tape, tape.constant(px), tape.constant(w), tape.constant(b))).data;
    for (std::size_t i = 0; i < n; ++i) CHECK(std::equal(py.begin() + i * cout, py.begin() + (i + 1) * cout, y.begin() + perm[i] * cout));
}

TEST_CASE("broadcast deconv equals concat, tile and deconv") {
    util::Rng rng(6);
    const std::size_t bsz = 2, n = 7, cp = 5, cg = 4, cout = 6;
    auto pp = random_tensor<double>({bsz, n, cp}, rng);
    auto g = random_tensor<double>({bsz, cg}, rng);
    auto w = random_tensor<double>({cp + cg, cout}, rng);
    auto b = random_tensor<double>({cout}, rng);
    Tape<double> tape;
    Var vpp = tape.constant(pp), vg = tape.constant(g), vw = tape.constant(w), vb = tape.constant(b);
    const auto fast = tape.value(broadcast_deconv(tape, vpp, vg, vw, vb)).data;
    const auto slow = tape.value(pointwise_deconv(tape, concat_channels(tape, vpp, tile_points(tape, vg, n)), vw, vb)).data;
    REQUIRE(fast.size() == slow.size());
    for (std::size_t i = 0; i < fast.size(); ++i) CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-13));

    auto wg = random_tensor<double>({cg, cout}, rng);
    const auto only_global = tape.value(broadcast_deconv(tape, Var{}, vg, tape.constant(wg), vb, n)).data;
    const auto tiled = tape.value(pointwise_deconv(tape, tile_points(tape, vg, n), tape.constant(wg), vb)).data;
    for (std::size_t i = 0; i < tiled.size(); ++i) CHECK(only_global[i] == doctest::Approx(tiled[i]).epsilon(1e-13));
}

TEST_CASE("x squared has derivative 6 at 3") {
    Param<double> p("x", Tensor<double>({1, 1}, {3.0}));
    Tape<double> tape;
    Var x = tape.param(p);
    Var y = sum(tape, affine(tape, x, x, tape.constant(Tensor<double>({1}))));
    tape.backward(y);
    CHECK(tape.param_grad(p)[0] == doctest::Approx(6.0));
    Param<double>* ps[] = {&p};
    const auto r = grad_check([&](Tape<double>& t) {
        Var v = t.param(p);
        return sum(t, affine(t, v, v, t.constant(Tensor<double>({1}))));
    }, ps);
    CHECK(r.checked == 1);
    CHECK(r.max_rel_error < 1e-8);
}

TEST_CASE("primitive gradients match central differences") {
    util::Rng rng(7);
    GradCheckOptions opt;
    opt.step = 1e-6;

    SUBCASE("affine") {
        Param<double> x("x", random_tensor<double>({4, 3}, rng));
        Param<double> w("w", random_tensor<double>({3, 2}, rng));
        Param<double> b("b", random_tensor<double>({2}, rng));
        const auto r_w = random_tensor<double>({8, 1}, rng);
        Param<double>* ps[] = {&x, &w, &b};
        const auto res = grad_check([&](Tape<double>& t) {
            return readout(t, affine(t, t.param(x), t.param(w), t.param(b)), r_w);
        }, ps, opt);
        CHECK(res.checked == 12 + 6 + 2);
        CHECK(res.max_rel_error < 1e-6);
    }
    SUBCASE("relu") {
        Param<double> x("x", away_from_zero({6, 5}, rng));
        const auto r_w = random_tensor<double>({30, 1}, rng);
        Param<double>* ps[] = {&x};
        const auto res = grad_check([&](Tape<double>& t) { return readout(t, relu(t, t.param(x)), r_w); }, ps, opt);
        CHECK(res.skipped == 0);
        CHECK(res.max_rel_error < 1e-6);
    }
    SUBCASE("global max pool") {
        Param<double> x("x", random_tensor<double>({2, 6, 4}, rng));
        const auto r_w = random_tensor<double>({8, 1}, rng);
        Param<double>* ps[] = {&x};
        const auto res = grad_check([&](Tape<double>& t) { return readout(t, global_max_pool(t, t.param(x)), r_w); }, ps, opt);
        CHECK(res.max_rel_error < 1e-6);
    }
    SUBCASE("concat and tile") {
        Param<double> a("a", random_tensor<double>({2, 3}, rng));
        Param<double> g("g", random_tensor<double>({1, 2}, rng));
        const auto r_w = random_tensor<double>({10, 1}, rng);
        Param<double>* ps[] = {&a, &g};
        const auto res = grad_check([&](Tape<double>& t) {
            Var tiled = reshape(t, tile_points(t, t.param(g), 2), {2, 2});
            return readout(t, concat_channels(t, t.param(a), tiled), r_w);
        }, ps, opt);
        CHECK(res.max_rel_error < 1e-6);
    }
    SUBCASE("pointwise and broadcast deconv") {
        Param<double> pp("pp", random_tensor<double>({2, 5, 3}, rng));
        Param<double> gl("gl", random_tensor<double>({2, 4}, rng));
        Param<double> w("w", random_tensor<double>({7, 3}, rng));
        Param<double> b("b", random_tensor<double>({3}, rng));
        const auto r_w = random_tensor<double>({30, 1}, rng);
        Param<double>* ps[] = {&pp, &gl, &w, &b};
        const auto res = grad_check([&](Tape<double>& t) {
            return readout(t, broadcast_deconv(t, t.param(pp), t.param(gl), t.param(w), t.param(b)), r_w);
        }, ps, opt);
        CHECK(res.max_rel_error < 1e-6);
        Param<double> w2("w2", random_tensor<double>({3, 3}, rng));
        Param<double>* ps2[] = {&pp, &w2, &b};
        const auto res2 = grad_check([&](Tape<double>& t) {
            return readout(t, pointwise_deconv(t, t.param(pp), t.param(w2), t.param(b)), r_w);
        }, ps2, opt);
        CHECK(res2.max_rel_error < 1e-6);
    }
    SUBCASE("scale") {
        Param<double> x("x", random_tensor<double>({3, 2}, rng));
        const auto r_w = random_tensor<double>({6, 1}, rng);
        Param<double>* ps[] = {&x};
        const auto res = grad_check([&](Tape<double>& t) { return readout(t, scale(t, t.param(x), 2.5), r_w); }, ps, opt);
        CHECK(res.max_rel_error < 1e-6);
    }
}

TEST_CASE("step_lr schedule") {
    CHECK(step_lr(0, 3e-4) == doctest::Approx(3e-4).epsilon(1e-15));
    CHECK(step_lr(31, 3e-4) == doctest::Approx(3e-4).epsilon(1e-15));
    CHECK(step_lr(32, 3e-4) == doctest::Approx(6e-5).epsilon(1e-15));
    CHECK(step_lr(63, 3e-4) == doctest::Approx(6e-5).epsilon(1e-15));
    CHECK(step_lr(64, 3e-4) == doctest::Approx(1.2e-5).epsilon(1e-15));
    for (std::uint64_t e = 1; e < 200; ++e) {
        const double ratio = step_lr(e, 1.0) / step_lr(e - 1, 1.0);
        if (e % 32 == 0) CHECK(ratio == doctest::Approx(0.2));
        else CHECK(ratio == 1.0);
    }
}

TEST_CASE("adam follows a hand-computed scalar trace") {
    const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    std::vector<Param<double>> params{Param<double>("p", Tensor<double>({1}, {0.5}))};
    auto state = AdamState<double>::zeros_like(params);
    double x = 0.5, m = 0.0, v = 0.0;
    const double grads[] = {1.0, -0.5, 2.0, 0.25};
    for (int t = 1; t <= 4; ++t) {
        const double g = grads[t - 1];
        params[0].grad = {g};
        adam_step<double>(params, state, lr, {b1, b2, eps});
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mh = m / (1 - std::pow(b1, t));
        const double vh = v / (1 - std::pow(b2, t));
        x -= lr * mh / (std::sqrt(vh) + eps);
        CHECK(params[0].value[0] == doctest::Approx(x).epsilon(1e-12));
        if (t == 1) CHECK(0.5 - params[0].value[0] == doctest::Approx(1e-3).epsilon(1e-6));
    }
}

TEST_CASE("adam leaves parameters alone for zero gradients and rejects non-finite ones") {
    std::vector<Param<float>> params{Param<float>("a", Tensor<float>({3}, {1.0f, -2.0f, 3.0f})),
                                     Param<float>("b", Tensor<float>({2}, {0.5f, 0.25f}))};
    auto state = AdamState<float>::zeros_like(params);
    adam_step<float>(params, state, 1e-3);
    CHECK(params[0].value.data == std::vector<float>{1.0f, -2.0f, 3.0f});
    CHECK(params[1].value.data == std::vector<float>{0.5f, 0.25f});

    params[1].grad = {1.0f, std::nanf("")};
    params[0].grad = {1.0f, 1.0f, 1.0f};
    const auto before = params[0].value.data;
    CHECK_THROWS_AS(adam_step<float>(params, state, 1e-3), NumericalError);
    CHECK(params[0].value.data == before);
}

TEST_CASE("adam is bitwise deterministic") {
    util::Rng rng(8);
    auto make = [&] {
        util::Rng local(9);
        std::vector<Param<float>> ps{Param<float>("w", random_tensor<float>({64}, local))};
        return ps;
    };
    auto a = make(), b = make();
    auto sa = AdamState<float>::zeros_like(a), sb = AdamState<float>::zeros_like(b);
    for (int step = 0; step < 10; ++step) {
        auto g = random_tensor<float>({64}, rng).data;
        a[0].grad = g;
        b[0].grad = g;
        adam_step<float>(a, sa, 3e-4);
        adam_step<float>(b, sb, 3e-4);
    }
    CHECK(test_support::bitwise_equal(a[0].value.data, b[0].value.data));
}

TEST_CASE("checkpoint round-trip is bitwise") {
    test_support::TempDir tmp("nn_ckpt");
    util::Rng rng(10);
    Checkpoint c;
    c.model_config = {{"k", 1}};
    c.config_hash = "abc";
    c.metadata = {{"note", "x"}};
    c.params.emplace_back("w", random_tensor<float>({3, 4}, rng));
    c.params.emplace_back("b", random_tensor<float>({4}, rng));
    c.optimizer = AdamState<float>::zeros_like(c.params);
    c.optimizer.m[0][2] = 0.125f;
    c.optimizer.v[1][3] = 1e-30f;
    c.optimizer.step = 17;
    c.epoch = 3;
    c.seed = 99;
    write_checkpoint(tmp.path / "a.ckpt", c);
    const auto r = read_checkpoint(tmp.path / "a.ckpt");
    CHECK(r.model_config == c.model_config);
    CHECK(r.config_hash == c.config_hash);
    CHECK(r.metadata == c.metadata);
    REQUIRE(r.params.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(r.params[i].id == c.params[i].id);
        CHECK(r.params[i].value.shape == c.params[i].value.shape);
        CHECK(test_support::bitwise_equal(r.params[i].value.data, c.params[i].value.data));
        CHECK(test_support::bitwise_equal(r.optimizer.m[i], c.optimizer.m[i]));
        CHECK(test_support::bitwise_equal(r.optimizer.v[i], c.optimizer.v[i]));
    }
    CHECK(r.optimizer.step == 17);
    CHECK(r.epoch == 3);
    CHECK(r.seed == 99);
    write_checkpoint(tmp.path / "b.ckpt", r);
    CHECK(test_support::read_file(tmp.path / "a.ckpt") == test_support::read_file(tmp.path / "b.ckpt"));

    std::filesystem::resize_file(tmp.path / "b.ckpt", std::filesystem::file_size(tmp.path / "b.ckpt") - 1);
    CHECK_THROWS_AS(read_checkpoint(tmp.path / "b.ckpt"), IoError);
    CHECK_THROWS_AS(read_checkpoint(tmp.path / "missing.ckpt"), IoError);
}

}
