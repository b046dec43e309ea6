#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <unordered_map>
#include <vector>

#include "seqprobe/numerics/tensor.hpp"

namespace seqprobe::num {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Dynamic reverse-mode tape. Nodes are appended in evaluation order, so every
/// node's inputs precede it and backward() is a single reverse sweep.
///
/// Parameters are bound by address: the tape reads them without copying and
/// keeps their gradients in its own buffers, so a const parameter set can be
/// shared by several tapes at once.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t node)>;

  /// With record_gradients == false no backward closures are kept (inference).
  explicit Tape(bool record_gradients = true) : record_gradients_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf that receives a gradient but is owned by the tape.
  Var variable(Tensor value);
  /// Leaf bound to an external tensor; repeated calls return the same node.
  Var parameter(const Tensor& value);

  Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

  void backward(Var loss);

  const Tensor& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Gradient buffer for node `id`, zero-filled on first access.
  Tensor& grad_buffer(std::size_t id);
  const Tensor* grad(Var v) const;
  const Tensor* gradient_of(const Tensor& parameter) const;

  bool recording() const noexcept { return record_gradients_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Sign pattern of every relu input seen so far (true = strictly positive).
  /// grad_check uses it to detect finite-difference steps that cross a kink.
  const std::vector<bool>& relu_pattern() const noexcept { return relu_pattern_; }
  void note_relu_inputs(const Tensor& input);

 private:
  struct Node {
    Tensor own;
    const Tensor* external = nullptr;
    std::optional<Tensor> grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };

  bool record_gradients_;
  std::deque<Node> nodes_;  // deque keeps value() references stable across appends
  std::unordered_map<const Tensor*, std::size_t> bound_;
  std::vector<bool> relu_pattern_;
};

}  // namespace seqprobe::num
