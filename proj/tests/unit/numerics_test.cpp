#include <cmath>
#include <random>

#include "doctest.h"
#include "seqprobe/numerics/grad_check.hpp"
#include "seqprobe/numerics/ops.hpp"

using namespace seqprobe::num;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : t.data()) v = u(rng);
  return t;
}

}  // namespace

TEST_CASE("tensor construction validates shape against data") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), DimensionError);
  CHECK_THROWS_AS(Tensor(Shape{0}), DimensionError);
  Tensor t({2, 3});
  CHECK(t.size() == 6);
  CHECK(t.all_finite());
}

TEST_CASE("matmul") {
  Tape tape;
  SUBCASE("identity") {
    Var i = tape.constant(Tensor::matrix(2, 2, {1, 0, 0, 1}));
    Var x = tape.constant(Tensor::matrix(2, 1, {3, 4}));
    CHECK(matmul(i, x).value() == Tensor::matrix(2, 1, {3, 4}));
  }
  SUBCASE("zeros") {
    Var z = tape.constant(Tensor::zeros({2, 3}));
    Var x = tape.constant(Tensor::matrix(3, 1, {7, -2, 5}));
    CHECK(matmul(z, x).value() == Tensor::zeros({2, 1}));
  }
  SUBCASE("hand-computed product") {
    Var a = tape.constant(Tensor::matrix(2, 2, {1, 2, 3, 4}));
    Var b = tape.constant(Tensor::matrix(2, 1, {5, 6}));
    CHECK(matmul(a, b).value() == Tensor::matrix(2, 1, {17, 39}));
  }
  SUBCASE("shape mismatch names both shapes") {
    Var a = tape.constant(Tensor::zeros({2, 3}));
    Var b = tape.constant(Tensor::zeros({2, 1}));
    try {
      matmul(a, b);
      FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("[2x3]") != std::string::npos);
      CHECK(msg.find("[2x1]") != std::string::npos);
    }
  }
}

TEST_CASE("matmul associativity on random cases") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Tape tape(false);
    std::uniform_int_distribution<std::size_t> dim(1, 5);
    const auto m = dim(rng), k = dim(rng), n = dim(rng), p = dim(rng);
    Var a = tape.constant(random_tensor({m, k}, rng));
    Var b = tape.constant(random_tensor({k, n}, rng));
    Var c = tape.constant(random_tensor({n, p}, rng));
    const Tensor left = matmul(matmul(a, b), c).value();
    const Tensor right = matmul(a, matmul(b, c)).value();
    REQUIRE(left.shape() == right.shape());
    for (std::size_t i = 0; i < left.size(); ++i) CHECK(std::abs(left[i] - right[i]) < 1e-10);
  }
}

TEST_CASE("pointwise ops") {
  Tape tape;
  CHECK(sigmoid(tape.constant(Tensor::scalar(0))).value().item() == doctest::Approx(0.5));
  CHECK(relu(tape.constant(Tensor::scalar(-3))).value().item() == 0.0);
  CHECK(relu(tape.constant(Tensor::scalar(3))).value().item() == 3.0);
  CHECK(tanh(tape.constant(Tensor::scalar(0))).value().item() == 0.0);
  CHECK(elementwise(Pointwise::Mul, tape.constant(Tensor::vector({2, 3})), tape.constant(Tensor::vector({4, 5})))
            .value() == Tensor::vector({8, 15}));
  CHECK_THROWS_AS(add(tape.constant(Tensor::vector({1, 2})), tape.constant(Tensor::vector({1, 2, 3}))),
                  DimensionError);
  // Saturated sigmoid stays finite.
  const Tensor s = sigmoid(tape.constant(Tensor::vector({-800, 800}))).value();
  CHECK(s.all_finite());
  CHECK(s[0] == doctest::Approx(0.0));
  CHECK(s[1] == doctest::Approx(1.0));
}

TEST_CASE("softmax") {
  Tape tape;
  SUBCASE("uniform on equal logits") {
    const Tensor y = softmax(tape.constant(Tensor::vector({0, 0, 0}))).value();
    for (double v : y.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("no overflow on large logits") {
    const Tensor y = softmax(tape.constant(Tensor::vector({1000, 0}))).value();
    CHECK(y.all_finite());
    CHECK(y[0] == doctest::Approx(1.0));
    CHECK(y[1] < 1e-300);
  }
  SUBCASE("log-weights exponentiate and normalize") {
    const Tensor y = softmax(tape.constant(Tensor::vector({std::log(1.0), std::log(2.0), std::log(3.0)}))).value();
    CHECK(std::abs(y[0] - 1.0 / 6.0) < 1e-15);
    CHECK(std::abs(y[1] - 2.0 / 6.0) < 1e-15);
    CHECK(std::abs(y[2] - 3.0 / 6.0) < 1e-15);
  }
  SUBCASE("sums to one with entries in (0,1)") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      const Tensor y = softmax(tape.constant(random_tensor({9}, rng, -20, 20))).value();
      double s = 0.0;
      for (double v : y.data()) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
        s += v;
      }
      CHECK(std::abs(s - 1.0) < 1e-9);
    }
  }
  SUBCASE("empty input rejected") { CHECK_THROWS_AS(softmax_values({}), DimensionError); }
}

TEST_CASE("cross entropy") {
  Tape tape;
  CHECK(cross_entropy(tape.constant(Tensor::vector({0.25, 0.25, 0.25, 0.25})), 2).value().item() ==
        doctest::Approx(std::log(4.0)));
  CHECK(cross_entropy(tape.constant(Tensor::vector({0, 1, 0})), 1).value().item() == 0.0);
  CHECK(cross_entropy(tape.constant(Tensor::vector({0.5, 0.25, 0.25})), 1).value().item() ==
        doctest::Approx(1.3862943611198906));
  // Zero probability is floored rather than producing infinity.
  CHECK(cross_entropy(tape.constant(Tensor::vector({1, 0})), 1).value().item() ==
        doctest::Approx(-std::log(kProbFloor)));
  CHECK_THROWS_AS(cross_entropy(tape.constant(Tensor::vector({0.5, 0.5})), 2), std::out_of_range);
}

TEST_CASE("backward") {
  SUBCASE("sum of squares") {
    Tape tape;
    Var x = tape.variable(Tensor::vector({1, 2}));
    tape.backward(sum(mul(x, x)));
    CHECK(*tape.grad(x) == Tensor::vector({2, 4}));
  }
  SUBCASE("constant function has zero gradient") {
    Tape tape;
    Var x = tape.variable(Tensor::vector({1, 2}));
    Var c = tape.constant(Tensor::scalar(3.0));
    tape.backward(add(c, scale(sum(x), 0.0)));
    CHECK(*tape.grad(x) == Tensor::vector({0, 0}));
  }
  SUBCASE("reuse accumulates exactly") {
    auto g = [](Var x) { return sum(sigmoid(tanh(x))); };
    Tape once;
    Var x1 = once.variable(Tensor::vector({0.3, -1.2, 2.0}));
    once.backward(g(x1));
    Tape twice;
    Var x2 = twice.variable(Tensor::vector({0.3, -1.2, 2.0}));
    twice.backward(add(g(x2), g(x2)));
    for (std::size_t i = 0; i < 3; ++i) CHECK((*twice.grad(x2))[i] == 2.0 * (*once.grad(x1))[i]);
  }
  SUBCASE("loss from another tape is rejected") {
    Tape a, b;
    Var x = a.variable(Tensor::scalar(1));
    CHECK_THROWS(b.backward(x));
  }
  SUBCASE("non-scalar loss is rejected") {
    Tape tape;
    Var x = tape.variable(Tensor::vector({1, 2}));
    CHECK_THROWS_AS(tape.backward(x), DimensionError);
  }
  SUBCASE("parameters bound by address collect gradients") {
    const Tensor w = Tensor::matrix(1, 2, {3, -1});
    Tape tape;
    Var x = tape.constant(Tensor::vector({2, 5}));
    Var y = matmul(tape.parameter(w), x);
    tape.backward(add(y, matmul(tape.parameter(w), x)));
    CHECK(*tape.gradient_of(w) == Tensor::matrix(1, 2, {4, 10}));
  }
}

TEST_CASE("grad_check") {
  std::mt19937_64 rng(11);
  SUBCASE("sum of squares is exact") {
    const auto report = grad_check([](Tape&, Var x) { return sum(mul(x, x)); }, random_tensor({6}, rng));
    CHECK(report.checked == 6);
    CHECK(report.max_rel_error < 1e-7);
  }
  SUBCASE("composite ops") {
    auto f = [](Tape& t, Var x) {
      Var w = t.constant(Tensor::matrix(3, 4, {0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 0.7, -0.8, 0.9, 1.0, -1.1, 1.2}));
      Var h = tanh(matmul(w, x));
      Var p = softmax(add(h, sigmoid(matmul(w, x))));
      return add(cross_entropy(p, 1), sum(mul(column(reshape(x, {2, 2}), 1), column(reshape(x, {2, 2}), 0))));
    };
    const auto report = grad_check(f, random_tensor({4}, rng));
    CHECK(report.max_rel_error < 1e-7);
  }
  SUBCASE("relu kink coordinate is skipped") {
    const Tensor x = Tensor::vector({0.5, 1e-7, -0.3});
    const auto report = grad_check([](Tape&, Var v) { return sum(relu(v)); }, x);
    CHECK(report.skipped == 1);
    CHECK(report.checked == 2);
    CHECK(report.max_rel_error < 1e-9);
  }
  SUBCASE("non-scalar function rejected") {
    CHECK_THROWS_AS(grad_check([](Tape&, Var x) { return x; }, Tensor::vector({1, 2})), DimensionError);
  }
}

TEST_CASE("node values stay addressable while the tape grows") {
  Tape tape(false);
  Var x = tape.constant(Tensor::vector({1.0, 2.0}));
  const Tensor& first = x.value();
  for (int i = 0; i < 5000; ++i) x = tanh(x);
  CHECK(first == Tensor::vector({1.0, 2.0}));
}
