#pragma once

#include <cstddef>
#include <span>

#include "seqprobe/numerics/tape.hpp"

namespace seqprobe::num {

/// Lower bound applied to probabilities before every logarithm.
inline constexpr double kProbFloor = 1e-12;

// Matrix product. A rank-1 left operand is a row vector and a rank-1 right
// operand is a column vector; the result drops the corresponding axis.
Var matmul(Var a, Var b);

Var add(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);

enum class Pointwise { Add, Mul, Sigmoid, Tanh, Relu };
/// Dispatch form used by generic callers; unary ops ignore `b`.
Var elementwise(Pointwise op, Var a, Var b = {});

Var softmax(Var logits);
/// -ln(max(dist[label], kProbFloor)), shape {1}.
Var cross_entropy(Var dist, std::size_t label);

Var dot(Var a, Var b);
Var sum(Var a);
Var concat(std::span<const Var> parts);
Var concat(Var a, Var b);
/// Rows of the result are the given rank-1 tensors.
Var stack(std::span<const Var> rows);
Var reshape(Var a, Shape shape);
/// Column `index` of a matrix as a rank-1 tensor (embedding lookup).
Var column(Var matrix, std::size_t index);

// Plain tensor helpers that do not touch a tape.
Tensor softmax_values(std::span<const double> logits);
double log_sum_exp(std::span<const double> xs);

}  // namespace seqprobe::num
