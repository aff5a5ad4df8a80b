#pragma once

#include "rtcm/nn/tape.hpp"

namespace rtcm::nn {

// y = x W + b over the last axis. x: [..., in], W: [in, out], b: [out].
template <typename T>
Var affine(Tape<T>& tape, Var x, Var weight, Var bias);

// Transposed convolution with kernel 1 and stride 1 along the point axis.
// x: [N, Cin] or [B, N, Cin]. Numerically identical to affine() on every row.
template <typename T>
Var pointwise_deconv(Tape<T>& tape, Var x, Var weight, Var bias);

// max(0, x); the subgradient at 0 is 0.
template <typename T>
Var relu(Tape<T>& tape, Var x);

// Per-channel max over the point axis: [N, C] -> [C], [B, N, C] -> [B, C].
// Backward routes to the first maximal row.
template <typename T>
Var global_max_pool(Tape<T>& tape, Var x);

// Channel concatenation; leading dimensions must match.
template <typename T>
Var concat_channels(Tape<T>& tape, Var a, Var b);

// Repeats each row of g: [B, C] -> [B, n, C] (or [C] -> [n, C]).
template <typename T>
Var tile_points(Tape<T>& tape, Var g, std::size_t n);

// pointwise_deconv(concat_channels(per_point, tile_points(global, N)), W, b)
// without materializing the tiled input: the global rows of W are applied
// once per cloud and broadcast. per_point may be an invalid Var, in which
// case only the global part feeds the layer; n_points then sets N.
// per_point: [B, N, Cp], global: [B, Cg], W: [Cp + Cg, out].
template <typename T>
Var broadcast_deconv(Tape<T>& tape, Var per_point, Var global, Var weight, Var bias, std::size_t n_points = 0);

template <typename T>
Var scale(Tape<T>& tape, Var x, T factor);

template <typename T>
Var reshape(Tape<T>& tape, Var x, Shape shape);

// Sum of all entries, as a scalar of shape [1].
template <typename T>
Var sum(Tape<T>& tape, Var x);

}  // namespace rtcm::nn
