#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rtcm/errors.hpp"

namespace rtcm::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

std::string to_string(const Shape& shape);

// Dense row-major tensor. The last dimension is the channel axis; every op
// treats the leading dimensions as independent rows.
template <typename T>
struct Tensor {
    Shape shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(Shape s) : shape(std::move(s)), data(numel(shape), T(0)) {}
    Tensor(Shape s, std::vector<T> values) : shape(std::move(s)), data(std::move(values)) {
        if (data.size() != numel(shape)) {
            throw ShapeError("tensor data length " + std::to_string(data.size()) + " does not match shape " +
                             to_string(shape));
        }
    }

    std::size_t size() const { return data.size(); }
    std::size_t channels() const { return shape.empty() ? 1 : shape.back(); }
    std::size_t rows() const { return shape.empty() ? 1 : size() / channels(); }

    std::span<T> span() { return data; }
    std::span<const T> span() const { return data; }

    T& operator[](std::size_t i) { return data[i]; }
    const T& operator[](std::size_t i) const { return data[i]; }
};

// Trainable tensor with a stable id and its gradient accumulator.
template <typename T>
struct Param {
    std::string id;
    Tensor<T> value;
    std::vector<T> grad;

    Param() = default;
    Param(std::string name, Tensor<T> v) : id(std::move(name)), value(std::move(v)), grad(value.size(), T(0)) {}

    void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

}  // namespace rtcm::nn
