#include "rtcm/nn/tape.hpp"

#include <sstream>

namespace rtcm::nn {

std::string to_string(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "," : "") << shape[i];
    out << ']';
    return out.str();
}

template <typename T>
Var Tape<T>::push(Node node) {
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::constant(Tensor<T> value) {
    Node n;
    n.owned = std::move(value);
    return push(std::move(n));
}

template <typename T>
Var Tape<T>::variable(Tensor<T> value) {
    Node n;
    n.owned = std::move(value);
    n.needs_grad = true;
    return push(std::move(n));
}

template <typename T>
Var Tape<T>::param(const Param<T>& p) {
    if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var{it->second};
    Node n;
    n.external = &p.value;
    n.needs_grad = true;
    const Var v = push(std::move(n));
    param_nodes_.emplace(&p, v.id);
    return v;
}

template <typename T>
Var Tape<T>::record(Tensor<T> value, std::initializer_list<Var> inputs, Backward backward) {
    Node n;
    n.owned = std::move(value);
    for (Var in : inputs) n.needs_grad = n.needs_grad || needs_grad(in);
    if (n.needs_grad) n.backward = std::move(backward);
    return push(std::move(n));
}

template <typename T>
const Tensor<T>& Tape<T>::value(Var v) const {
    const Node& n = nodes_.at(v.id);
    return n.external ? *n.external : n.owned;
}

template <typename T>
std::vector<T>& Tape<T>::grad(Var v) {
    Node& n = nodes_.at(v.id);
    if (n.grad.empty()) n.grad.assign(value(v).size(), T(0));
    return n.grad;
}

template <typename T>
std::span<const T> Tape<T>::grad_view(Var v) const {
    return nodes_.at(v.id).grad;
}

template <typename T>
void Tape<T>::backward(Var out) {
    if (value(out).size() != 1) {
        throw ShapeError("backward() needs a scalar output, got shape " + to_string(value(out).shape));
    }
    if (!needs_grad(out)) return;
    grad(out)[0] += T(1);
    for (std::size_t i = out.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.backward && !n.grad.empty()) n.backward(*this, Var{i});
    }
}

template <typename T>
std::span<const T> Tape<T>::param_grad(const Param<T>& p) const {
    auto it = param_nodes_.find(&p);
    if (it == param_nodes_.end()) return {};
    return nodes_[it->second].grad;
}

template <typename T>
void Tape<T>::note_pattern(std::uint64_t bits) {
    pattern_ ^= bits + 0x9e3779b97f4a7c15ULL + (pattern_ << 6) + (pattern_ >> 2);
}

template class Tape<float>;
template class Tape<double>;

}  // namespace rtcm::nn
