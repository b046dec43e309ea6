#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "seqprobe/numerics/tape.hpp"

namespace seqprobe::num {

struct GradCheckReport {
  /// max over checked coordinates of |analytic - central| / max(1, |analytic|)
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  /// Coordinates whose +h/-h evaluations saw a different relu sign pattern.
  std::size_t skipped = 0;
};

using TensorFunction = std::function<Var(Tape&, Var)>;

/// Compares reverse-mode gradients of a scalar function of `x` against
/// central differences with step `h`.
GradCheckReport grad_check(const TensorFunction& f, const Tensor& x, double h = 1e-5);

/// Same check over a set of externally owned parameters that `f` binds with
/// Tape::parameter. Parameters are perturbed in place and restored.
GradCheckReport grad_check_parameters(const std::function<Var(Tape&)>& f, std::span<Tensor* const> params,
                                      double h = 1e-5);

}  // namespace seqprobe::num
