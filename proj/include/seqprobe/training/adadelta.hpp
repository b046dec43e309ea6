#pragma once

#include <span>
#include <vector>

#include "seqprobe/numerics/tensor.hpp"

namespace seqprobe::training {

using num::Tensor;

struct AdadeltaState {
  double rho = 0.95;
  double eps = 1e-6;
  std::vector<Tensor> mean_sq_grad;   // E[g^2]
  std::vector<Tensor> mean_sq_delta;  // E[dx^2]

  /// Zero accumulators shaped like `params`.
  static AdadeltaState for_params(std::span<const Tensor* const> params, double rho = 0.95, double eps = 1e-6);
};

/// One Adadelta update, in place. A null gradient counts as zero.
void adadelta_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, AdadeltaState& state);

/// Rescales `grads` so their joint L2 norm is at most max_norm; returns the norm before clipping.
double clip_global_norm(std::span<Tensor> grads, double max_norm);

}  // namespace seqprobe::training
