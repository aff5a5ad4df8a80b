#include "rtcm/nn/ops.hpp"

#include <algorithm>

#include "rtcm/nn/gemm.hpp"
#include "rtcm/util/hash.hpp"

namespace rtcm::nn {
namespace {

template <typename T>
void check_affine_shapes(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, const char* op) {
    if (w.shape.size() != 2 || b.shape.size() != 1 || x.shape.empty()) {
        throw ShapeError(std::string(op) + ": expected x[..., in], W[in, out], b[out]; got x" + to_string(x.shape) +
                         " W" + to_string(w.shape) + " b" + to_string(b.shape));
    }
    if (x.channels() != w.shape[0] || b.shape[0] != w.shape[1]) {
        throw ShapeError(std::string(op) + ": inner dimension mismatch: x" + to_string(x.shape) + " W" +
                         to_string(w.shape) + " b" + to_string(b.shape));
    }
}

// dW += X^T dY
template <typename T>
void add_weight_grad(std::size_t rows, std::size_t in, std::size_t out, const T* x, const T* dy, T* dw) {
    std::vector<T> xt(rows * in);
    transpose(rows, in, x, xt.data());
    gemm(in, rows, out, xt.data(), dy, dw, true);
}

template <typename T>
void add_bias_grad(std::size_t rows, std::size_t out, const T* dy, T* db) {
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < out; ++j) db[j] += dy[r * out + j];
}

// dX += dY W^T, where w points at an [in x out] block of weights.
template <typename T>
void add_input_grad(std::size_t rows, std::size_t in, std::size_t out, const T* dy, const T* w, T* dx) {
    std::vector<T> wt(in * out);
    transpose(in, out, w, wt.data());
    gemm(rows, out, in, dy, wt.data(), dx, true);
}

template <typename T>
Var affine_impl(Tape<T>& tape, Var x, Var weight, Var bias, const char* op) {
    const Tensor<T>& xv = tape.value(x);
    const Tensor<T>& wv = tape.value(weight);
    const Tensor<T>& bv = tape.value(bias);
    check_affine_shapes(xv, wv, bv, op);
    const std::size_t rows = xv.rows();
    const std::size_t in = wv.shape[0];
    const std::size_t out = wv.shape[1];

    Shape shape = xv.shape;
    shape.back() = out;
    Tensor<T> y(shape);
    gemm(rows, in, out, xv.data.data(), wv.data.data(), y.data.data(), false);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < out; ++j) y.data[r * out + j] += bv.data[j];

    return tape.record(std::move(y), {x, weight, bias}, [=](Tape<T>& t, Var self) {
        const T* dy = t.grad(self).data();
        if (t.needs_grad(x)) add_input_grad(rows, in, out, dy, t.value(weight).data.data(), t.grad(x).data());
        if (t.needs_grad(weight)) add_weight_grad(rows, in, out, t.value(x).data.data(), dy, t.grad(weight).data());
        if (t.needs_grad(bias)) add_bias_grad(rows, out, dy, t.grad(bias).data());
    });
}

}  // namespace

template <typename T>
Var affine(Tape<T>& tape, Var x, Var weight, Var bias) {
    return affine_impl(tape, x, weight, bias, "affine");
}

template <typename T>
Var pointwise_deconv(Tape<T>& tape, Var x, Var weight, Var bias) {
    const auto rank = tape.value(x).shape.size();
    if (rank != 2 && rank != 3) {
        throw ShapeError("pointwise_deconv: expected [N, C] or [B, N, C], got " + to_string(tape.value(x).shape));
    }
    return affine_impl(tape, x, weight, bias, "pointwise_deconv");
}

template <typename T>
Var relu(Tape<T>& tape, Var x) {
    const Tensor<T>& xv = tape.value(x);
    Tensor<T> y(xv.shape);
    for (std::size_t i = 0; i < xv.size(); ++i) y.data[i] = xv.data[i] > T(0) ? xv.data[i] : T(0);
    if (tape.tracking_pattern()) {
        util::Fnv1a h;
        for (std::size_t i = 0; i < xv.size(); ++i) h.update_u64(xv.data[i] > T(0));
        tape.note_pattern(h.digest());
    }
    return tape.record(std::move(y), {x}, [x](Tape<T>& t, Var self) {
        const auto& xv = t.value(x).data;
        const auto& dy = t.grad(self);
        auto& dx = t.grad(x);
        for (std::size_t i = 0; i < xv.size(); ++i)
            if (xv[i] > T(0)) dx[i] += dy[i];
    });
}

template <typename T>
Var global_max_pool(Tape<T>& tape, Var x) {
    const Tensor<T>& xv = tape.value(x);
    if (xv.shape.size() != 2 && xv.shape.size() != 3) {
        throw ShapeError("global_max_pool: expected [N, C] or [B, N, C], got " + to_string(xv.shape));
    }
    const bool batched = xv.shape.size() == 3;
    const std::size_t clouds = batched ? xv.shape[0] : 1;
    const std::size_t n = xv.shape[batched ? 1 : 0];
    const std::size_t c = xv.shape.back();
    if (n == 0) throw ShapeError("global_max_pool: empty point axis");

    Tensor<T> y(batched ? Shape{clouds, c} : Shape{c});
    std::vector<std::size_t> argmax(clouds * c);
    for (std::size_t b = 0; b < clouds; ++b) {
        const T* base = xv.data.data() + b * n * c;
        T* best = y.data.data() + b * c;
        std::size_t* arg = argmax.data() + b * c;
        std::copy(base, base + c, best);
        std::fill(arg, arg + c, std::size_t{0});
        for (std::size_t p = 1; p < n; ++p) {
            const T* row = base + p * c;
            for (std::size_t j = 0; j < c; ++j) {
                if (row[j] > best[j]) {
                    best[j] = row[j];
                    arg[j] = p;
                }
            }
        }
    }
    if (tape.tracking_pattern()) {
        util::Fnv1a h;
        for (std::size_t a : argmax) h.update_u64(a);
        tape.note_pattern(h.digest());
    }
    return tape.record(std::move(y), {x}, [x, argmax = std::move(argmax), clouds, n, c](Tape<T>& t, Var self) {
        const auto& dy = t.grad(self);
        auto& dx = t.grad(x);
        for (std::size_t b = 0; b < clouds; ++b)
            for (std::size_t j = 0; j < c; ++j) dx[(b * n + argmax[b * c + j]) * c + j] += dy[b * c + j];
    });
}

template <typename T>
Var concat_channels(Tape<T>& tape, Var a, Var b) {
    const Tensor<T>& av = tape.value(a);
    const Tensor<T>& bv = tape.value(b);
    if (av.shape.size() != bv.shape.size() || av.shape.empty() ||
        !std::equal(av.shape.begin(), av.shape.end() - 1, bv.shape.begin())) {
        throw ShapeError("concat_channels: leading dimensions differ: " + to_string(av.shape) + " vs " +
                         to_string(bv.shape));
    }
    const std::size_t rows = av.rows();
    const std::size_t ca = av.shape.back();
    const std::size_t cb = bv.shape.back();
    Shape shape = av.shape;
    shape.back() = ca + cb;
    Tensor<T> y(shape);
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(av.data.data() + r * ca, ca, y.data.data() + r * (ca + cb));
        std::copy_n(bv.data.data() + r * cb, cb, y.data.data() + r * (ca + cb) + ca);
    }
    return tape.record(std::move(y), {a, b}, [=](Tape<T>& t, Var self) {
        const auto& dy = t.grad(self);
        if (t.needs_grad(a)) {
            auto& da = t.grad(a);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t j = 0; j < ca; ++j) da[r * ca + j] += dy[r * (ca + cb) + j];
        }
        if (t.needs_grad(b)) {
            auto& db = t.grad(b);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t j = 0; j < cb; ++j) db[r * cb + j] += dy[r * (ca + cb) + ca + j];
        }
    });
}

template <typename T>
Var tile_points(Tape<T>& tape, Var g, std::size_t n) {
    const Tensor<T>& gv = tape.value(g);
    if (gv.shape.size() != 1 && gv.shape.size() != 2) {
        throw ShapeError("tile_points: expected [C] or [B, C], got " + to_string(gv.shape));
    }
    const std::size_t clouds = gv.rows();
    const std::size_t c = gv.channels();
    Tensor<T> y(gv.shape.size() == 2 ? Shape{clouds, n, c} : Shape{n, c});
    for (std::size_t b = 0; b < clouds; ++b)
        for (std::size_t p = 0; p < n; ++p) std::copy_n(gv.data.data() + b * c, c, y.data.data() + (b * n + p) * c);
    return tape.record(std::move(y), {g}, [=](Tape<T>& t, Var self) {
        const auto& dy = t.grad(self);
        auto& dg = t.grad(g);
        for (std::size_t b = 0; b < clouds; ++b)
            for (std::size_t p = 0; p < n; ++p)
                for (std::size_t j = 0; j < c; ++j) dg[b * c + j] += dy[(b * n + p) * c + j];
    });
}

template <typename T>
Var broadcast_deconv(Tape<T>& tape, Var per_point, Var global, Var weight, Var bias, std::size_t n_points) {
    const Tensor<T>& gv = tape.value(global);
    const Tensor<T>& wv = tape.value(weight);
    const Tensor<T>& bv = tape.value(bias);
    if (gv.shape.size() != 1 && gv.shape.size() != 2) {
        throw ShapeError("broadcast_deconv: global feature must be [C] or [B, C], got " + to_string(gv.shape));
    }
    if (wv.shape.size() != 2 || bv.shape.size() != 1 || bv.shape[0] != wv.shape[1]) {
        throw ShapeError("broadcast_deconv: bad weight/bias shapes W" + to_string(wv.shape) + " b" +
                         to_string(bv.shape));
    }
    const bool batched = gv.shape.size() == 2;
    const std::size_t clouds = gv.rows();
    const std::size_t cg = gv.channels();
    const std::size_t out = wv.shape[1];
    std::size_t cp = 0;
    std::size_t n = n_points;
    if (per_point.valid()) {
        const Tensor<T>& pv = tape.value(per_point);
        const Shape expect_lead = batched ? Shape{clouds} : Shape{};
        if (pv.shape.size() != expect_lead.size() + 2 ||
            !std::equal(expect_lead.begin(), expect_lead.end(), pv.shape.begin())) {
            throw ShapeError("broadcast_deconv: per-point feature " + to_string(pv.shape) +
                             " does not match global feature " + to_string(gv.shape));
        }
        cp = pv.shape.back();
        n = pv.shape[pv.shape.size() - 2];
    }
    if (wv.shape[0] != cp + cg) {
        throw ShapeError("broadcast_deconv: weight rows " + std::to_string(wv.shape[0]) + " != " +
                         std::to_string(cp) + " + " + std::to_string(cg));
    }
    if (n == 0) throw ShapeError("broadcast_deconv: empty point axis");

    const T* w_global = wv.data.data() + cp * out;
    std::vector<T> gout(clouds * out);
    gemm(clouds, cg, out, gv.data.data(), w_global, gout.data(), false);
    for (std::size_t b = 0; b < clouds; ++b)
        for (std::size_t j = 0; j < out; ++j) gout[b * out + j] += bv.data[j];

    Tensor<T> y(batched ? Shape{clouds, n, out} : Shape{n, out});
    if (per_point.valid()) {
        gemm(clouds * n, cp, out, tape.value(per_point).data.data(), wv.data.data(), y.data.data(), false);
    }
    for (std::size_t b = 0; b < clouds; ++b)
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t j = 0; j < out; ++j) y.data[(b * n + p) * out + j] += gout[b * out + j];

    return tape.record(std::move(y), {per_point, global, weight, bias}, [=](Tape<T>& t, Var self) {
        const auto& dy = t.grad(self);
        std::vector<T> dg(clouds * out, T(0));
        for (std::size_t b = 0; b < clouds; ++b)
            for (std::size_t p = 0; p < n; ++p)
                for (std::size_t j = 0; j < out; ++j) dg[b * out + j] += dy[(b * n + p) * out + j];

        const T* w = t.value(weight).data.data();
        if (t.needs_grad(weight)) {
            T* dw = t.grad(weight).data();
            add_weight_grad(clouds, cg, out, t.value(global).data.data(), dg.data(), dw + cp * out);
            if (per_point.valid()) add_weight_grad(clouds * n, cp, out, t.value(per_point).data.data(), dy.data(), dw);
        }
        if (t.needs_grad(bias)) add_bias_grad(clouds, out, dg.data(), t.grad(bias).data());
        if (t.needs_grad(global)) add_input_grad(clouds, cg, out, dg.data(), w + cp * out, t.grad(global).data());
        if (per_point.valid() && t.needs_grad(per_point)) {
            add_input_grad(clouds * n, cp, out, dy.data(), w, t.grad(per_point).data());
        }
    });
}

template <typename T>
Var scale(Tape<T>& tape, Var x, T factor) {
    Tensor<T> y = tape.value(x);
    for (auto& v : y.data) v *= factor;
    return tape.record(std::move(y), {x}, [x, factor](Tape<T>& t, Var self) {
        const auto& dy = t.grad(self);
        auto& dx = t.grad(x);
        for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += factor * dy[i];
    });
}

template <typename T>
Var reshape(Tape<T>& tape, Var x, Shape shape) {
    const Tensor<T>& xv = tape.value(x);
    if (numel(shape) != xv.size()) {
        throw ShapeError("reshape: " + to_string(xv.shape) + " -> " + to_string(shape) + " changes element count");
    }
    Tensor<T> y(std::move(shape), xv.data);
    return tape.record(std::move(y), {x}, [x](Tape<T>& t, Var self) {
        const auto& dy = t.grad(self);
        auto& dx = t.grad(x);
        for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
    });
}

template <typename T>
Var sum(Tape<T>& tape, Var x) {
    T total = T(0);
    for (T v : tape.value(x).data) total += v;
    return tape.record(Tensor<T>(Shape{1}, {total}), {x}, [x](Tape<T>& t, Var self) {
        const T g = t.grad(self)[0];
        for (auto& d : t.grad(x)) d += g;
    });
}

#define RTCM_INSTANTIATE_OPS(T)                                                             \
    template Var affine<T>(Tape<T>&, Var, Var, Var);                                        \
    template Var pointwise_deconv<T>(Tape<T>&, Var, Var, Var);                              \
    template Var relu<T>(Tape<T>&, Var);                                                    \
    template Var global_max_pool<T>(Tape<T>&, Var);                                         \
    template Var concat_channels<T>(Tape<T>&, Var, Var);                                    \
    template Var tile_points<T>(Tape<T>&, Var, std::size_t);                                \
    template Var broadcast_deconv<T>(Tape<T>&, Var, Var, Var, Var, std::size_t);            \
    template Var scale<T>(Tape<T>&, Var, T);                                                \
    template Var reshape<T>(Tape<T>&, Var, Shape);                                          \
    template Var sum<T>(Tape<T>&, Var);

RTCM_INSTANTIATE_OPS(float)
RTCM_INSTANTIATE_OPS(double)

}  // namespace rtcm::nn
