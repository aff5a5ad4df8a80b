#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "rtcm/nn/tape.hpp"

namespace rtcm::losses {

enum class LossKind { MagOri, MSE };

// PerFrame compares each 3-vector (one point, one frame). Flattened compares
// the whole (k+2)*3 block of a point as a single vector.
enum class Reduction { PerFrame, Flattened };

struct LossConfig {
    double alpha = 0.05;
    double beta = 1.0;
    double ori_epsilon = 1e-8;
    LossKind kind = LossKind::MagOri;
    Reduction reduction = Reduction::PerFrame;

    void validate() const;
};

const char* to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& s);
const char* to_string(Reduction r);
Reduction reduction_from_string(const std::string& s);

// Length of the vectors compared by the norm-based losses for predictions
// with `frames` frames per point.
std::size_t group_size(const LossConfig& cfg, std::size_t frames);

// The span functions below take pred and gt as [N, frames, 3] flattened and
// return the mean over compared vectors. When grad is non-empty it receives
// dL/dpred (overwritten). When pattern is non-null the discrete branch taken
// per vector is mixed into it.

// mean | ||gt|| - ||pred|| |; gradients use sqrt(v.v + eps^2) for the norm.
template <typename T>
double magnitude_loss(std::span<const T> pred, std::span<const T> gt, std::size_t group, double eps,
                      std::span<T> grad = {}, std::uint64_t* pattern = nullptr);

// mean 1 - gt.pred / (||gt|| ||pred|| + eps); vectors with ||gt|| < eps count as 0.
template <typename T>
double orientation_loss(std::span<const T> pred, std::span<const T> gt, std::size_t group, double eps,
                        std::span<T> grad = {}, std::uint64_t* pattern = nullptr);

// mean squared componentwise error.
template <typename T>
double mse_loss(std::span<const T> pred, std::span<const T> gt, std::span<T> grad = {});

// alpha * L_mag + beta * L_ori
template <typename T>
double combined_loss(std::span<const T> pred, std::span<const T> gt, std::size_t frames, const LossConfig& cfg);

// Tape ops: scalar [1] outputs with gradients flowing into pred only.
template <typename T>
nn::Var magnitude_loss(nn::Tape<T>& tape, nn::Var pred, const nn::Tensor<T>& gt, const LossConfig& cfg);
template <typename T>
nn::Var orientation_loss(nn::Tape<T>& tape, nn::Var pred, const nn::Tensor<T>& gt, const LossConfig& cfg);
template <typename T>
nn::Var mse_loss(nn::Tape<T>& tape, nn::Var pred, const nn::Tensor<T>& gt);

// The configured training objective: L_mo for MagOri, L_mse for MSE.
template <typename T>
nn::Var training_loss(nn::Tape<T>& tape, nn::Var pred, const nn::Tensor<T>& gt, const LossConfig& cfg);

}  // namespace rtcm::losses
