#include "seqprobe/training/adadelta.hpp"

#include <cmath>
#include <stdexcept>

namespace seqprobe::training {

AdadeltaState AdadeltaState::for_params(std::span<const Tensor* const> params, double rho, double eps) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("adadelta: rho must lie in (0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("adadelta: eps must be positive");
  AdadeltaState s{rho, eps, {}, {}};
  for (const Tensor* p : params) {
    s.mean_sq_grad.emplace_back(p->shape());
    s.mean_sq_delta.emplace_back(p->shape());
  }
  return s;
}

void adadelta_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, AdadeltaState& state) {
  if (params.size() != grads.size() || params.size() != state.mean_sq_grad.size())
    throw num::DimensionError("adadelta: " + std::to_string(params.size()) + " params, " +
                              std::to_string(grads.size()) + " grads, " +
                              std::to_string(state.mean_sq_grad.size()) + " accumulators");
  const double rho = state.rho;
  const double eps = state.eps;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& x = *params[i];
    Tensor& eg = state.mean_sq_grad[i];
    Tensor& ed = state.mean_sq_delta[i];
    if (eg.shape() != x.shape() || (grads[i] && grads[i]->shape() != x.shape()))
      throw num::DimensionError("adadelta: shape mismatch for parameter " + std::to_string(i) + " " +
                                num::shape_string(x.shape()));
    auto xs = x.data();
    auto egs = eg.data();
    auto eds = ed.data();
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const double g = grads[i] ? (*grads[i])[k] : 0.0;
      egs[k] = rho * egs[k] + (1.0 - rho) * g * g;
      const double dx = -std::sqrt(eds[k] + eps) / std::sqrt(egs[k] + eps) * g;
      eds[k] = rho * eds[k] + (1.0 - rho) * dx * dx;
      xs[k] += dx;
    }
  }
}

double clip_global_norm(std::span<Tensor> grads, double max_norm) {
  double sq = 0.0;
  for (const Tensor& g : grads)
    for (double v : g.data()) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (Tensor& g : grads)
      for (double& v : g.data()) v *= scale;
  }
  return norm;
}

}  // namespace seqprobe::training
