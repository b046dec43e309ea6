#include "seqprobe/numerics/tape.hpp"

#include <algorithm>

namespace seqprobe::num {

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::constant(Tensor value) {
  Node n;
  n.own = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::variable(Tensor value) {
  Node n;
  n.own = std::move(value);
  n.requires_grad = record_gradients_;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(const Tensor& value) {
  if (auto it = bound_.find(&value); it != bound_.end()) return {this, it->second};
  Node n;
  n.external = &value;
  n.requires_grad = record_gradients_;
  nodes_.push_back(std::move(n));
  bound_.emplace(&value, nodes_.size() - 1);
  return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
  Node n;
  n.own = std::move(value);
  if (record_gradients_) {
    n.requires_grad = std::any_of(inputs.begin(), inputs.end(), [this](std::size_t i) {
      return nodes_[i].requires_grad;
    });
    if (n.requires_grad) {
      n.inputs = std::move(inputs);
      n.backward = std::move(backward);
    }
  }
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.external ? *n.external : n.own;
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_.at(id);
  if (!n.grad) n.grad.emplace(value(id).shape());
  return *n.grad;
}

const Tensor* Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id());
  return n.grad ? &*n.grad : nullptr;
}

const Tensor* Tape::gradient_of(const Tensor& parameter) const {
  auto it = bound_.find(&parameter);
  if (it == bound_.end()) return nullptr;
  const Node& n = nodes_[it->second];
  return n.grad ? &*n.grad : nullptr;
}

void Tape::note_relu_inputs(const Tensor& input) {
  for (double x : input.data()) relu_pattern_.push_back(x > 0.0);
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this || loss.id() >= nodes_.size())
    throw std::invalid_argument("backward: loss was not recorded on this tape");
  if (value(loss.id()).size() != 1)
    throw DimensionError("backward: loss must be scalar, got " + shape_string(value(loss.id()).shape()));
  if (!record_gradients_) throw std::logic_error("backward: tape was created without gradient recording");
  grad_buffer(loss.id())[0] += 1.0;
  for (std::size_t k = loss.id() + 1; k-- > 0;) {
    Node& n = nodes_[k];
    if (!n.requires_grad || !n.grad || !n.backward) continue;
    n.backward(*this, k);
  }
}

}  // namespace seqprobe::num
