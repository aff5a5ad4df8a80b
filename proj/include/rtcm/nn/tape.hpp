#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

#include "rtcm/nn/tensor.hpp"

namespace rtcm::nn {

struct Var {
    static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    std::size_t id = kNone;
    bool valid() const { return id != kNone; }
};

// Reverse-mode tape for the fixed set of ops in ops.hpp.
//
// Parameters are referenced, not copied, and their gradients stay on the tape
// until the owner collects them with param_grad(). Building a graph therefore
// never mutates a model, so several tapes may read the same parameters.
template <typename T>
class Tape {
public:
    using Backward = std::function<void(Tape&, Var self)>;

    Tape() { nodes_.reserve(128); }

    Var constant(Tensor<T> value);
    Var variable(Tensor<T> value);
    Var param(const Param<T>& p);

    // Registers an op result. The node needs a gradient when any input does;
    // otherwise the backward closure is dropped.
    Var record(Tensor<T> value, std::initializer_list<Var> inputs, Backward backward);

    const Tensor<T>& value(Var v) const;
    bool needs_grad(Var v) const { return v.valid() && nodes_[v.id].needs_grad; }

    // Gradient buffer of v, zero-filled on first access.
    std::vector<T>& grad(Var v);
    std::span<const T> grad_view(Var v) const;

    // Seeds d(out)/d(out) = 1 for a scalar node and runs every closure in reverse order.
    void backward(Var out);

    // Gradient collected for p during backward(); empty when p was not used.
    std::span<const T> param_grad(const Param<T>& p) const;

    // Fingerprint of the discrete choices made during the forward pass
    // (ReLU masks, max-pool winners, loss branches). Two evaluations with equal
    // patterns lie on the same smooth piece of the function.
    void note_pattern(std::uint64_t bits);
    std::uint64_t pattern() const { return pattern_; }
    void track_pattern(bool on) { track_pattern_ = on; }
    bool tracking_pattern() const { return track_pattern_; }

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor<T> owned;
        const Tensor<T>* external = nullptr;
        std::vector<T> grad;
        bool needs_grad = false;
        Backward backward;
    };

    Var push(Node node);

    std::vector<Node> nodes_;
    std::unordered_map<const Param<T>*, std::size_t> param_nodes_;
    std::uint64_t pattern_ = 0x84222325cbf29ce4ULL;
    bool track_pattern_ = false;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace rtcm::nn
