#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "tdg/numeric/parameters.hpp"
#include "tdg/numeric/tensor.hpp"

namespace tdg::numeric {

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Gradient tape for reverse-mode differentiation. Nodes are appended in
// evaluation order, so a reverse sweep over the node list is a valid
// topological order. A tape supports exactly one backward pass.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var parameter(const std::string& name, const Tensor& value);
  // Leaf that requires a gradient but is not a named parameter.
  Var variable(Tensor value);

  // Binds every entry of `params` as a named parameter leaf.
  std::vector<Var> bind(const ParameterSet& params);

  // Appends an interior node. `backward` is only kept when a parent needs a
  // gradient.
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward);
  Var record(Tensor value, const std::vector<Var>& parents, BackwardFn backward);

  void backward(Var loss);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Gradient of node `id`; zero tensor when nothing flowed into it.
  const Tensor& grad(std::size_t id);
  bool has_grad(std::size_t id) const { return nodes_[id].has_grad; }
  // Adds `g` into the gradient of `id` (no-op for constants).
  void accumulate(std::size_t id, const Tensor& g);
  Tensor& grad_buffer(std::size_t id);

  // Gradients of the named parameters, in binding order; unused parameters get
  // exact zeros.
  Gradients parameter_gradients();

  bool consumed() const noexcept { return consumed_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::vector<std::pair<std::string, std::size_t>> parameters_;
  bool consumed_ = false;
};

}  // namespace tdg::numeric
