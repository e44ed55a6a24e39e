#include "tdg/numeric/tape.hpp"

#include "tdg/error.hpp"

namespace tdg::numeric {

const Tensor& Var::value() const {
  if (!tape_) throw UsageError("use of an unbound Var");
  return tape_->value(id_);
}

bool Var::requires_grad() const { return tape_ && tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, false, nullptr});
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(const std::string& name, const Tensor& value) {
  nodes_.push_back(Node{value, {}, false, true, nullptr});
  parameters_.emplace_back(name, nodes_.size() - 1);
  return {this, nodes_.size() - 1};
}

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, true, nullptr});
  return {this, nodes_.size() - 1};
}

std::vector<Var> Tape::bind(const ParameterSet& params) {
  std::vector<Var> out;
  out.reserve(params.size());
  for (const auto& [name, t] : params.entries()) out.push_back(parameter(name, t));
  return out;
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward) {
  bool needs = false;
  for (const Var& p : parents) {
    if (p.tape() != this) throw UsageError("operands recorded on different tapes");
    needs = needs || nodes_[p.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, false, needs, needs ? std::move(backward) : nullptr});
  return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, const std::vector<Var>& parents, BackwardFn backward) {
  bool needs = false;
  for (const Var& p : parents) {
    if (p.tape() != this) throw UsageError("operands recorded on different tapes");
    needs = needs || nodes_[p.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, false, needs, needs ? std::move(backward) : nullptr});
  return {this, nodes_.size() - 1};
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape());
    n.has_grad = true;
  }
  return n.grad;
}

const Tensor& Tape::grad(std::size_t id) { return grad_buffer(id); }

void Tape::accumulate(std::size_t id, const Tensor& g) {
  if (!nodes_[id].requires_grad) return;
  Tensor& buf = grad_buffer(id);
  if (buf.size() != g.size()) {
    throw DimensionError("gradient of shape " + shape_string(g.shape()) +
                         " for node of shape " + shape_string(buf.shape()));
  }
  double* dst = buf.data();
  const double* src = g.data();
  for (std::size_t i = 0; i < buf.size(); ++i) dst[i] += src[i];
}

void Tape::backward(Var loss) {
  if (consumed_) throw UsageError("backward called on a consumed tape");
  if (loss.tape() != this) throw UsageError("loss recorded on a different tape");
  if (nodes_[loss.id()].value.size() != 1) {
    throw DimensionError("backward needs a scalar loss, got shape " +
                         shape_string(nodes_[loss.id()].value.shape()));
  }
  consumed_ = true;
  if (!nodes_[loss.id()].requires_grad) return;
  grad_buffer(loss.id())[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    // The closure may append nothing but can touch other nodes' buffers, so
    // hold it by value for the duration of the call.
    BackwardFn fn = std::move(n.backward);
    fn(*this, i);
  }
}

Gradients Tape::parameter_gradients() {
  Gradients out;
  for (const auto& [name, id] : parameters_) out.add(name, grad_buffer(id));
  return out;
}

}  // namespace tdg::numeric
