#pragma once

#include "tanet/core/tensor.hpp"

namespace tanet::train {

// Probabilities are clamped into [kProbEps, 1 - kProbEps] before any log.
inline constexpr double kProbEps = 1e-7;

// Mean binary cross-entropy between a probability map and a binary target
// of the same spatial size (rank 2 or single-channel rank 3). two_sided
// false drops the -(1-y)log(1-y') term, keeping only the literal miss
// penalty, for ablation. When grad is non-null it receives dLoss/dpred,
// zero where the clamp saturates.
double bce_loss(const Tensor& pred, const Tensor& target, bool two_sided = true,
                Tensor* grad = nullptr);

// Bilinear resample of a (C,H,W) tensor onto a square side x side grid.
// Identity when the sizes already match.
Tensor resample_chw(const Tensor& x, int side);

} // namespace tanet::train
