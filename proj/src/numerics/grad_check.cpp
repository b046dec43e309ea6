#include "seqprobe/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace seqprobe::num {
namespace {

struct Probe {
  double value;
  std::vector<bool> relu_pattern;
};

double scalar_of(Var out) {
  const Tensor& v = out.value();
  if (v.size() != 1) throw DimensionError("grad_check: function must be scalar-valued, got " + shape_string(v.shape()));
  return v[0];
}

void accumulate(GradCheckReport& report, double analytic, const Probe& plus, const Probe& minus,
                const std::vector<bool>& center_pattern, double h) {
  if (plus.relu_pattern != center_pattern || minus.relu_pattern != center_pattern) {
    ++report.skipped;
    return;
  }
  const double numeric = (plus.value - minus.value) / (2.0 * h);
  const double err = std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
  report.max_rel_error = std::max(report.max_rel_error, err);
  ++report.checked;
}

}  // namespace

GradCheckReport grad_check(const TensorFunction& f, const Tensor& x, double h) {
  Tape tape;
  Var xv = tape.variable(x);
  Var out = f(tape, xv);
  scalar_of(out);
  tape.backward(out);
  const Tensor* g = tape.grad(xv);
  const Tensor analytic = g ? *g : Tensor(x.shape());
  const std::vector<bool> center = tape.relu_pattern();

  auto eval = [&](const Tensor& point) {
    Tape t(false);
    Var in = t.constant(point);
    const double v = scalar_of(f(t, in));
    return Probe{v, t.relu_pattern()};
  };

  GradCheckReport report;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Tensor xp = x;
    Tensor xm = x;
    xp[i] += h;
    xm[i] -= h;
    accumulate(report, analytic[i], eval(xp), eval(xm), center, h);
  }
  return report;
}

GradCheckReport grad_check_parameters(const std::function<Var(Tape&)>& f, std::span<Tensor* const> params,
                                      double h) {
  Tape tape;
  Var out = f(tape);
  scalar_of(out);
  tape.backward(out);
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (Tensor* p : params) {
    const Tensor* g = tape.gradient_of(*p);
    analytic.push_back(g ? *g : Tensor(p->shape()));
  }
  const std::vector<bool> center = tape.relu_pattern();

  auto eval = [&] {
    Tape t(false);
    const double v = scalar_of(f(t));
    return Probe{v, t.relu_pattern()};
  };

  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + h;
      const Probe plus = eval();
      p[i] = saved - h;
      const Probe minus = eval();
      p[i] = saved;
      accumulate(report, analytic[k][i], plus, minus, center, h);
    }
  }
  return report;
}

}  // namespace seqprobe::num
