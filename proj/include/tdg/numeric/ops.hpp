#pragma once

#include <utility>
#include <vector>

#include "tdg/numeric/tape.hpp"

namespace tdg::numeric {

// Differentiable operations. Every op records its result on the operands'
// tape. Rank 1 operands are treated as a single row; results keep the rank of
// the leading operand.

Var matmul(Var a, Var b);
Var add_bias(Var x, Var bias);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double factor);

Var sigmoid(Var x);
Var tanh(Var x);
Var gelu(Var x);
Var exp(Var x);

Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(Var x, std::size_t begin, std::size_t count);

Var sum(Var x);
Var mean(Var x);

// Mean of squared elementwise differences.
Var mse_loss(Var pred, Var target);
// -1/2 * sum(1 + logvar - mu^2 - exp(logvar)) over the last axis, averaged
// over rows.
Var kl_divergence(Var mu, Var logvar);

// input . weight + bias, weight shaped [in, out].
Var linear(Var input, Var weight, Var bias);

struct LstmWeights {
  Var w_input;   // [in, 4H], gate blocks ordered input, forget, candidate, output
  Var w_hidden;  // [H, 4H]
  Var bias;      // [4H]
};

struct LstmState {
  Var hidden;
  Var cell;
};

// One LSTM cell update: sigmoid gates, tanh candidate and output squashing.
LstmState lstm_step(const LstmWeights& weights, Var x, const LstmState& state);

// Scalar reference values used by the ops and by tests.
double sigmoid_value(double x) noexcept;
double gelu_value(double x) noexcept;
double gelu_derivative(double x) noexcept;

}  // namespace tdg::numeric
