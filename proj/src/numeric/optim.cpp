#include "tdg/numeric/optim.hpp"

#include <cmath>

#include "tdg/error.hpp"

namespace tdg::numeric {
namespace {

void check_aligned(const ParameterSet& params, const Gradients& grads) {
  if (params.size() != grads.size()) {
    throw DimensionError("optimizer: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [pn, pt] = params.entries()[i];
    const auto& [gn, gt] = grads.entries()[i];
    if (pn != gn || pt.shape() != gt.shape()) {
      throw DimensionError("optimizer: parameter '" + pn + "' " + shape_string(pt.shape()) +
                           " misaligned with gradient '" + gn + "' " + shape_string(gt.shape()));
    }
  }
}

}  // namespace

OptimizerState OptimizerState::for_parameters(const ParameterSet& params) {
  return {params.zeros_like(), params.zeros_like(), 0};
}

void adam_step(ParameterSet& params, const Gradients& grads, OptimizerState& state,
               double learning_rate, const AdamConfig& config) {
  check_aligned(params, grads);
  check_aligned(params, state.first_moment);
  check_aligned(params, state.second_moment);
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = params.entries()[k].second;
    const Tensor& g = grads.entries()[k].second;
    Tensor& m = state.first_moment.entries()[k].second;
    Tensor& v = state.second_moment.entries()[k].second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

void sgd_step(ParameterSet& params, const Gradients& grads, OptimizerState& state,
              double learning_rate) {
  check_aligned(params, grads);
  state.step += 1;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = params.entries()[k].second;
    const Tensor& g = grads.entries()[k].second;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= learning_rate * g[i];
  }
}

double step_decay_lr(double initial_lr, int epoch, int period, double factor) {
  if (epoch < 0) throw RangeError("step_decay_lr: negative epoch " + std::to_string(epoch));
  if (period <= 0) throw RangeError("step_decay_lr: decay period must be positive");
  const int drops = epoch / period;
  if (drops == 0) return initial_lr;
  // 0.1 is inexact in binary: 1e-3 * 0.1^2 != 1e-5, but 1e-3 / 10^2 == 1e-5.
  // Divide by the reciprocal whenever it is integral.
  const double divisor = 1.0 / factor;
  if (std::abs(divisor - std::round(divisor)) < 1e-12) {
    return initial_lr / std::pow(std::round(divisor), drops);
  }
  return initial_lr * std::pow(factor, drops);
}

}  // namespace tdg::numeric
