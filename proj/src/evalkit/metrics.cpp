#include "rtcm/evalkit/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "rtcm/errors.hpp"

namespace rtcm::evalkit {

namespace {

template <typename T>
void check_field(std::span<const T> a, std::span<const T> b, const char* what) {
    if (a.size() != b.size() || a.size() % 3 != 0) {
        throw ShapeError(std::string(what) + ": fields of " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()) + " values are not matching N x 3 arrays");
    }
}

template <typename T>
double norm3(const T* v) {
    const double x = v[0], y = v[1], z = v[2];
    return std::sqrt(x * x + y * y + z * z);
}

}  // namespace

template <typename T>
std::vector<T> linear_interp(std::span<const T> v_s, std::span<const T> v_e, double s, double e, double c) {
    check_field(v_s, v_e, "linear_interp");
    if (!(e != s)) throw ConfigError("linear_interp needs distinct endpoint times");
    const double ws = (e - c) / (e - s);
    const double we = (c - s) / (e - s);
    std::vector<T> out(v_s.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<T>(ws * static_cast<double>(v_s[i]) + we * static_cast<double>(v_e[i]));
    }
    return out;
}

template <typename T>
double mme(std::span<const T> pred, std::span<const T> gt) {
    check_field(pred, gt, "mme");
    const std::size_t n = pred.size() / 3;
    if (n == 0) throw ShapeError("mme of an empty field");
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += std::abs(norm3(&pred[3 * i]) - norm3(&gt[3 * i]));
    return sum / static_cast<double>(n);
}

template <typename T>
void RelativeError::add(std::span<const T> pred, std::span<const T> gt) {
    check_field(pred, gt, "relative_error");
    for (std::size_t i = 0; i < pred.size() / 3; ++i) {
        const double g = norm3(&gt[3 * i]);
        if (!(g > threshold_)) {
            ++excluded_;
            continue;
        }
        sum_ += std::abs(norm3(&pred[3 * i]) - g) / g;
        ++count_;
    }
}

double RelativeError::percent() const {
    if (count_ == 0) throw NumericalError("relative error: no point passed the ground-truth norm filter");
    return 100.0 * sum_ / static_cast<double>(count_);
}

template <typename T>
double relative_error(const std::vector<std::span<const T>>& pred, const std::vector<std::span<const T>>& gt,
                      double threshold) {
    if (pred.size() != gt.size()) throw ShapeError("relative_error: frame counts differ");
    RelativeError acc(threshold);
    for (std::size_t f = 0; f < pred.size(); ++f) acc.add(pred[f], gt[f]);
    return acc.percent();
}

template <typename T>
void RangeTable::add(std::span<const T> field) {
    if (field.size() % 3 != 0) throw ShapeError("range_table: field is not N x 3");
    auto widen = [this](Range& r, double v) {
        if (empty) {
            r = {v, v};
        } else {
            r.min = std::min(r.min, v);
            r.max = std::max(r.max, v);
        }
    };
    for (std::size_t i = 0; i < field.size(); i += 3) {
        widen(norm, norm3(&field[i]));
        widen(x, field[i]);
        widen(y, field[i + 1]);
        widen(z, field[i + 2]);
        empty = false;
    }
}

nlohmann::json RangeTable::to_json() const {
    auto r = [](const Range& v) { return nlohmann::json::array({v.min, v.max}); };
    return {{"norm", r(norm)}, {"x", r(x)}, {"y", r(y)}, {"z", r(z)}};
}

template <typename T>
RangeTable range_table(const std::vector<std::span<const T>>& fields) {
    RangeTable t;
    for (const auto& f : fields) t.add(f);
    if (t.empty) throw ShapeError("range_table of no velocities");
    return t;
}

#define RTCM_INSTANTIATE(T)                                                                                   \
    template std::vector<T> linear_interp<T>(std::span<const T>, std::span<const T>, double, double, double); \
    template double mme<T>(std::span<const T>, std::span<const T>);                                           \
    template void RelativeError::add<T>(std::span<const T>, std::span<const T>);                              \
    template double relative_error<T>(const std::vector<std::span<const T>>&,                                 \
                                      const std::vector<std::span<const T>>&, double);                        \
    template void RangeTable::add<T>(std::span<const T>);                                                     \
    template RangeTable range_table<T>(const std::vector<std::span<const T>>&);

RTCM_INSTANTIATE(float)
RTCM_INSTANTIATE(double)

}  // namespace rtcm::evalkit
