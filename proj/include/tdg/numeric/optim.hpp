#pragma once

#include <cstdint>

#include "tdg/numeric/parameters.hpp"

namespace tdg::numeric {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment accumulators, one per parameter, plus the update count.
struct OptimizerState {
  ParameterSet first_moment;
  ParameterSet second_moment;
  std::uint64_t step = 0;

  static OptimizerState for_parameters(const ParameterSet& params);
  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

// Bias-corrected Adam update, in place.
void adam_step(ParameterSet& params, const Gradients& grads, OptimizerState& state,
               double learning_rate, const AdamConfig& config = {});

// Plain gradient descent; advances `state.step` only.
void sgd_step(ParameterSet& params, const Gradients& grads, OptimizerState& state,
              double learning_rate);

// initial_lr * factor^floor(epoch / period)
double step_decay_lr(double initial_lr, int epoch, int period = 300, double factor = 0.1);

}  // namespace tdg::numeric
