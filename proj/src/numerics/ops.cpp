#include "seqprobe/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace seqprobe::num {
namespace {

Tape& same_tape(Var a, Var b) {
  if (!a.valid() || !b.valid()) throw std::invalid_argument("operation on an unbound Var");
  if (&a.tape() != &b.tape()) throw std::invalid_argument("operands recorded on different tapes");
  return a.tape();
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
}

void require_vector(const char* op, const Tensor& a) {
  if (a.rank() != 1) throw DimensionError(std::string(op) + ": expected a rank-1 tensor, got " + shape_string(a.shape()));
}

struct MatDims {
  std::size_t rows;
  std::size_t cols;
};

MatDims left_dims(const Tensor& a) {
  if (a.rank() == 1) return {1, a.dim(0)};
  if (a.rank() == 2) return {a.dim(0), a.dim(1)};
  throw DimensionError("matmul: left operand must be rank 1 or 2, got " + shape_string(a.shape()));
}

MatDims right_dims(const Tensor& b) {
  if (b.rank() == 1) return {b.dim(0), 1};
  if (b.rank() == 2) return {b.dim(0), b.dim(1)};
  throw DimensionError("matmul: right operand must be rank 1 or 2, got " + shape_string(b.shape()));
}

template <class F, class DF>
Var unary(Var a, F f, DF df) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return a.tape().record(std::move(y), {a.id()}, [ia = a.id(), df](Tape& t, std::size_t self) {
    const Tensor& g = *t.grad(Var(&t, self));
    const Tensor& xv = t.value(ia);
    const Tensor& yv = t.value(self);
    Tensor& gx = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(xv[i], yv[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const auto [m, k] = left_dims(av);
  const auto [k2, n] = right_dims(bv);
  if (k != k2)
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(av.shape()) + " x " +
                         shape_string(bv.shape()));

  Shape out_shape;
  if (av.rank() == 2) out_shape.push_back(m);
  if (bv.rank() == 2) out_shape.push_back(n);
  if (out_shape.empty()) out_shape.push_back(1);

  Tensor c(out_shape);
  const double* A = av.data().data();
  const double* B = bv.data().data();
  double* C = c.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = B + p * n;
      double* crow = C + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }

  return tape.record(std::move(c), {a.id(), b.id()}, [ia = a.id(), ib = b.id(), m, k, n](Tape& t, std::size_t self) {
    const double* G = t.grad(Var(&t, self))->data().data();
    if (t.requires_grad(ia)) {
      const double* Bv = t.value(ib).data().data();
      double* GA = t.grad_buffer(ia).data().data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += G[i * n + j] * Bv[p * n + j];
          GA[i * k + p] += s;
        }
    }
    if (t.requires_grad(ib)) {
      const double* Av = t.value(ia).data().data();
      double* GB = t.grad_buffer(ib).data().data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = Av[i * k + p];
          if (aip == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) GB[p * n + j] += aip * G[i * n + j];
        }
    }
  });
}

Var add(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_same_shape("add", a.value(), b.value());
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  return tape.record(std::move(y), {a.id(), b.id()}, [ia = a.id(), ib = b.id()](Tape& t, std::size_t self) {
    const Tensor& g = *t.grad(Var(&t, self));
    for (std::size_t in : {ia, ib}) {
      if (!t.requires_grad(in)) continue;
      Tensor& gx = t.grad_buffer(in);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_same_shape("mul", a.value(), b.value());
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  return tape.record(std::move(y), {a.id(), b.id()}, [ia = a.id(), ib = b.id()](Tape& t, std::size_t self) {
    const Tensor& g = *t.grad(Var(&t, self));
    if (t.requires_grad(ia)) {
      const Tensor& bv = t.value(ib);
      Tensor& ga = t.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(ib)) {
      const Tensor& av = t.value(ia);
      Tensor& gb = t.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double factor) {
  return unary(
      a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
  a.tape().note_relu_inputs(a.value());
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var elementwise(Pointwise op, Var a, Var b) {
  switch (op) {
    case Pointwise::Add: return add(a, b);
    case Pointwise::Mul: return mul(a, b);
    case Pointwise::Sigmoid: return sigmoid(a);
    case Pointwise::Tanh: return tanh(a);
    case Pointwise::Relu: return relu(a);
  }
  throw std::invalid_argument("elementwise: unknown op");
}

Tensor softmax_values(std::span<const double> logits) {
  if (logits.empty()) throw DimensionError("softmax: empty input");
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += (out[i] = std::exp(logits[i] - mx));
  for (double& v : out) v /= z;
  return Tensor::vector(std::move(out));
}

double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  const double mx = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(mx)) return mx;
  double z = 0.0;
  for (double x : xs) z += std::exp(x - mx);
  return mx + std::log(z);
}

Var softmax(Var logits) {
  require_vector("softmax", logits.value());
  Tensor y = softmax_values(logits.value().data());
  return logits.tape().record(std::move(y), {logits.id()}, [ia = logits.id()](Tape& t, std::size_t self) {
    const Tensor& g = *t.grad(Var(&t, self));
    const Tensor& y = t.value(self);
    double gy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) gy += g[i] * y[i];
    Tensor& gx = t.grad_buffer(ia);
    for (std::size_t i = 0; i < y.size(); ++i) gx[i] += y[i] * (g[i] - gy);
  });
}

Var cross_entropy(Var dist, std::size_t label) {
  const Tensor& p = dist.value();
  require_vector("cross_entropy", p);
  if (label >= p.size())
    throw std::out_of_range("cross_entropy: label " + std::to_string(label) + " outside distribution of size " +
                            std::to_string(p.size()));
  const double q = p[label];
  const bool floored = !(q > kProbFloor);
  const double loss = -std::log(floored ? kProbFloor : q);
  return dist.tape().record(Tensor::scalar(loss), {dist.id()},
                            [ia = dist.id(), label, q, floored](Tape& t, std::size_t self) {
                              if (floored) return;
                              const double g = (*t.grad(Var(&t, self)))[0];
                              t.grad_buffer(ia)[label] += -g / q;
                            });
}

Var dot(Var a, Var b) {
  require_vector("dot", a.value());
  require_same_shape("dot", a.value(), b.value());
  return matmul(a, b);
}

Var sum(Var a) {
  double s = 0.0;
  for (double x : a.value().data()) s += x;
  return a.tape().record(Tensor::scalar(s), {a.id()}, [ia = a.id()](Tape& t, std::size_t self) {
    const double g = (*t.grad(Var(&t, self)))[0];
    Tensor& gx = t.grad_buffer(ia);
    for (double& v : gx.data()) v += g;
  });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  Tape& tape = parts.front().tape();
  std::vector<double> out;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> offsets;
  for (const Var& p : parts) {
    same_tape(parts.front(), p);
    require_vector("concat", p.value());
    offsets.push_back(out.size());
    ids.push_back(p.id());
    const auto d = p.value().data();
    out.insert(out.end(), d.begin(), d.end());
  }
  return tape.record(Tensor::vector(std::move(out)), ids, [ids, offsets](Tape& t, std::size_t self) {
    const Tensor& g = *t.grad(Var(&t, self));
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!t.requires_grad(ids[k])) continue;
      Tensor& gx = t.grad_buffer(ids[k]);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[offsets[k] + i];
    }
  });
}

Var concat(Var a, Var b) {
  const Var parts[] = {a, b};
  return concat(std::span<const Var>(parts));
}

Var stack(std::span<const Var> rows) {
  if (rows.empty()) throw DimensionError("stack: no inputs");
  const auto width = rows.front().value().size();
  for (const Var& r : rows) {
    require_vector("stack", r.value());
    if (r.value().size() != width)
      throw DimensionError("stack: row shapes differ, " + shape_string(rows.front().value().shape()) + " vs " +
                           shape_string(r.value().shape()));
  }
  Var flat = concat(rows);
  return reshape(flat, {rows.size(), width});
}

Var reshape(Var a, Shape shape) {
  const Tensor& x = a.value();
  if (element_count(shape) != x.size())
    throw DimensionError("reshape: cannot view " + shape_string(x.shape()) + " as " + shape_string(shape));
  std::vector<double> d(x.data().begin(), x.data().end());
  return a.tape().record(Tensor(std::move(shape), std::move(d)), {a.id()}, [ia = a.id()](Tape& t, std::size_t self) {
    const Tensor& g = *t.grad(Var(&t, self));
    Tensor& gx = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var column(Var matrix, std::size_t index) {
  const Tensor& m = matrix.value();
  if (m.rank() != 2) throw DimensionError("column: expected a matrix, got " + shape_string(m.shape()));
  if (index >= m.dim(1))
    throw std::out_of_range("column: index " + std::to_string(index) + " outside " + shape_string(m.shape()));
  const std::size_t rows = m.dim(0);
  const std::size_t cols = m.dim(1);
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = m.at(r, index);
  return matrix.tape().record(Tensor::vector(std::move(out)), {matrix.id()},
                              [ia = matrix.id(), index, rows, cols](Tape& t, std::size_t self) {
                                const Tensor& g = *t.grad(Var(&t, self));
                                Tensor& gx = t.grad_buffer(ia);
                                for (std::size_t r = 0; r < rows; ++r) gx[r * cols + index] += g[r];
                              });
}

}  // namespace seqprobe::num
