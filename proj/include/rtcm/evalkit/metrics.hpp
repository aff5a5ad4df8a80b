#pragma once

#include <span>
#include <vector>

#include <json.hpp>

namespace rtcm::evalkit {

// Fields are N x 3 velocity arrays, flattened. Metric arguments are always
// (pred, gt); gt is the high-accuracy reference.

// ((e - c) v_s + (c - s) v_e) / (e - s), evaluated in binary64.
// Exact at c == s and c == e. Throws ConfigError when e == s.
template <typename T>
std::vector<T> linear_interp(std::span<const T> v_s, std::span<const T> v_e, double s, double e, double c);

// (1/N) sum_k | ||pred_k|| - ||gt_k|| |
template <typename T>
double mme(std::span<const T> pred, std::span<const T> gt);

// Relative modulus error over many frames, averaged jointly over every
// (point, frame) pair whose ground-truth norm exceeds the threshold.
class RelativeError {
public:
    explicit RelativeError(double threshold = 1e-4) : threshold_(threshold) {}

    template <typename T>
    void add(std::span<const T> pred, std::span<const T> gt);

    std::size_t pairs() const { return count_; }
    std::size_t excluded() const { return excluded_; }
    // Percent; throws NumericalError when no pair passed the filter.
    double percent() const;

private:
    double threshold_;
    double sum_ = 0.0;
    std::size_t count_ = 0;
    std::size_t excluded_ = 0;
};

// One call over aligned frame lists.
template <typename T>
double relative_error(const std::vector<std::span<const T>>& pred, const std::vector<std::span<const T>>& gt,
                      double threshold = 1e-4);

struct Range {
    double min = 0.0;
    double max = 0.0;
};

// Velocity interval statistics: ||v|| and each component.
struct RangeTable {
    Range norm, x, y, z;
    bool empty = true;

    template <typename T>
    void add(std::span<const T> field);
    nlohmann::json to_json() const;
};

// Throws ShapeError for an empty list.
template <typename T>
RangeTable range_table(const std::vector<std::span<const T>>& fields);

}  // namespace rtcm::evalkit
