#include "tdg/numeric/ops.hpp"

#include <Eigen/Core>
#include <cmath>

#include "tdg/error.hpp"

namespace tdg::numeric {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

ConstMatrixMap as_matrix(const Tensor& t) {
  return ConstMatrixMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                        static_cast<Eigen::Index>(t.cols()));
}

MatrixMap as_matrix(Tensor& t) {
  return MatrixMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                   static_cast<Eigen::Index>(t.cols()));
}

Shape matrix_shape_like(const Tensor& lead, std::size_t cols) {
  if (lead.rank() <= 1) return {cols};
  Shape s = lead.shape();
  s.back() = cols;
  return s;
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape " + shape_string(a.shape()) +
                         " does not match " + shape_string(b.shape()));
  }
}

Tape* tape_of(Var a, Var b) {
  if (a.tape() != b.tape()) throw UsageError("operands recorded on different tapes");
  return a.tape();
}

// Elementwise unary op with derivative expressed through input and output.
template <typename Fwd, typename Deriv>
Var unary(Var x, Fwd fwd, Deriv deriv) {
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  const std::size_t xi = x.id();
  return x.tape()->record(std::move(out), {x}, [xi, deriv](Tape& tape, std::size_t self) {
    const Tensor& g = tape.grad(self);
    const Tensor& input = tape.value(xi);
    const Tensor& output = tape.value(self);
    if (!tape.requires_grad(xi)) return;
    Tensor& dx = tape.grad_buffer(xi);
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * deriv(input[i], output[i]);
  });
}

}  // namespace

double sigmoid_value(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double gelu_value(double x) noexcept {
  return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2));
}

double gelu_derivative(double x) noexcept {
  const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
  const double pdf = std::exp(-0.5 * x * x) * (0.5 * M_2_SQRTPI * M_SQRT1_2);
  return cdf + x * pdf;
}

Var matmul(Var a, Var b) {
  Tape* tape = tape_of(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (bv.rank() != 2 || av.cols() != bv.rows()) {
    throw DimensionError("matmul: shape " + shape_string(av.shape()) +
                         " incompatible with " + shape_string(bv.shape()));
  }
  Tensor out(matrix_shape_like(av, bv.cols()));
  as_matrix(out).noalias() = as_matrix(av) * as_matrix(bv);
  const std::size_t ai = a.id(), bi = b.id();
  return tape->record(std::move(out), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ai)) {
      as_matrix(t.grad_buffer(ai)).noalias() += as_matrix(g) * as_matrix(t.value(bi)).transpose();
    }
    if (t.requires_grad(bi)) {
      as_matrix(t.grad_buffer(bi)).noalias() += as_matrix(t.value(ai)).transpose() * as_matrix(g);
    }
  });
}

Var add_bias(Var x, Var bias) {
  Tape* tape = tape_of(x, bias);
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  if (bv.rank() != 1 || bv.size() != xv.cols()) {
    throw DimensionError("add_bias: bias shape " + shape_string(bv.shape()) +
                         " incompatible with input " + shape_string(xv.shape()));
  }
  Tensor out = xv;
  const std::size_t rows = xv.rows(), cols = xv.cols();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += bv[c];
  const std::size_t xi = x.id(), bi = bias.id();
  return tape->record(std::move(out), {x, bias}, [xi, bi, rows, cols](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    t.accumulate(xi, g);
    if (t.requires_grad(bi)) {
      Tensor& db = t.grad_buffer(bi);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) db[c] += g[r * cols + c];
    }
  });
}

Var add(Var a, Var b) {
  Tape* tape = tape_of(a, b);
  require_same_shape("add", a.value(), b.value());
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return tape->record(std::move(out), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    t.accumulate(ai, g);
    t.accumulate(bi, g);
  });
}

Var sub(Var a, Var b) {
  Tape* tape = tape_of(a, b);
  require_same_shape("sub", a.value(), b.value());
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return tape->record(std::move(out), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    t.accumulate(ai, g);
    if (t.requires_grad(bi)) {
      Tensor& db = t.grad_buffer(bi);
      for (std::size_t i = 0; i < g.size(); ++i) db[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape* tape = tape_of(a, b);
  require_same_shape("mul", a.value(), b.value());
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const std::size_t ai = a.id(), bi = b.id();
  return tape->record(std::move(out), {a, b}, [ai, bi](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ai)) {
      Tensor& da = t.grad_buffer(ai);
      const Tensor& bv = t.value(bi);
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * bv[i];
    }
    if (t.requires_grad(bi)) {
      Tensor& db = t.grad_buffer(bi);
      const Tensor& av = t.value(ai);
      for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * av[i];
    }
  });
}

Var scale(Var x, double factor) {
  return unary(
      x, [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Var sigmoid(Var x) {
  return unary(
      x, [](double v) { return sigmoid_value(v); },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var x) {
  return unary(
      x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Var gelu(Var x) {
  return unary(
      x, [](double v) { return gelu_value(v); },
      [](double v, double) { return gelu_derivative(v); });
}

Var exp(Var x) {
  return unary(
      x, [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw UsageError("concat_cols of nothing");
  Tape* tape = parts.front().tape();
  const std::size_t rows = parts.front().value().rows();
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  for (const Var& p : parts) {
    if (p.tape() != tape) throw UsageError("operands recorded on different tapes");
    if (p.value().rows() != rows) {
      throw DimensionError("concat_cols: shape " + shape_string(p.value().shape()) +
                           " does not match row count of " +
                           shape_string(parts.front().value().shape()));
    }
    widths.push_back(p.value().cols());
    total += widths.back();
  }
  Tensor out(matrix_shape_like(parts.front().value(), total));
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < widths[k]; ++c) out[r * total + offset + c] = v[r * widths[k] + c];
    offset += widths[k];
  }
  std::vector<std::size_t> ids;
  for (const Var& p : parts) ids.push_back(p.id());
  return tape->record(std::move(out), parts,
                      [ids, widths, rows, total](Tape& t, std::size_t self) {
                        const Tensor& g = t.grad(self);
                        std::size_t offset = 0;
                        for (std::size_t k = 0; k < ids.size(); ++k) {
                          if (t.requires_grad(ids[k])) {
                            Tensor& d = t.grad_buffer(ids[k]);
                            for (std::size_t r = 0; r < rows; ++r)
                              for (std::size_t c = 0; c < widths[k]; ++c)
                                d[r * widths[k] + c] += g[r * total + offset + c];
                          }
                          offset += widths[k];
                        }
                      });
}

Var slice_cols(Var x, std::size_t begin, std::size_t count) {
  const Tensor& xv = x.value();
  const std::size_t rows = xv.rows(), cols = xv.cols();
  if (begin + count > cols) {
    throw DimensionError("slice_cols: columns [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside shape " +
                         shape_string(xv.shape()));
  }
  Tensor out(matrix_shape_like(xv, count));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < count; ++c) out[r * count + c] = xv[r * cols + begin + c];
  const std::size_t xi = x.id();
  return x.tape()->record(std::move(out), {x},
                          [xi, rows, cols, begin, count](Tape& t, std::size_t self) {
                            const Tensor& g = t.grad(self);
                            if (!t.requires_grad(xi)) return;
                            Tensor& d = t.grad_buffer(xi);
                            for (std::size_t r = 0; r < rows; ++r)
                              for (std::size_t c = 0; c < count; ++c)
                                d[r * cols + begin + c] += g[r * count + c];
                          });
}

Var sum(Var x) {
  double total = 0.0;
  for (double v : x.value().values()) total += v;
  const std::size_t xi = x.id();
  return x.tape()->record(Tensor::scalar(total), {x}, [xi](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    if (!t.requires_grad(xi)) return;
    for (double& d : t.grad_buffer(xi).values()) d += g;
  });
}

Var mean(Var x) {
  const double n = static_cast<double>(x.value().size());
  return scale(sum(x), 1.0 / n);
}

Var mse_loss(Var pred, Var target) {
  Tape* tape = tape_of(pred, target);
  require_same_shape("mse_loss", pred.value(), target.value());
  const Tensor& p = pred.value();
  const Tensor& y = target.value();
  const double n = static_cast<double>(p.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - y[i];
    total += d * d;
  }
  const std::size_t pi = pred.id(), yi = target.id();
  return tape->record(Tensor::scalar(total / n), {pred, target},
                      [pi, yi, n](Tape& t, std::size_t self) {
                        const double g = t.grad(self)[0];
                        const Tensor& p = t.value(pi);
                        const Tensor& y = t.value(yi);
                        const double k = 2.0 * g / n;
                        if (t.requires_grad(pi)) {
                          Tensor& dp = t.grad_buffer(pi);
                          for (std::size_t i = 0; i < p.size(); ++i) dp[i] += k * (p[i] - y[i]);
                        }
                        if (t.requires_grad(yi)) {
                          Tensor& dy = t.grad_buffer(yi);
                          for (std::size_t i = 0; i < p.size(); ++i) dy[i] -= k * (p[i] - y[i]);
                        }
                      });
}

Var kl_divergence(Var mu, Var logvar) {
  Tape* tape = tape_of(mu, logvar);
  require_same_shape("kl_divergence", mu.value(), logvar.value());
  const Tensor& m = mu.value();
  const Tensor& lv = logvar.value();
  const double batch = static_cast<double>(m.rows());
  double total = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    total += 1.0 + lv[i] - m[i] * m[i] - std::exp(lv[i]);
  }
  const std::size_t mi = mu.id(), li = logvar.id();
  return tape->record(Tensor::scalar(-0.5 * total / batch), {mu, logvar},
                      [mi, li, batch](Tape& t, std::size_t self) {
                        const double g = t.grad(self)[0] / batch;
                        if (t.requires_grad(mi)) {
                          const Tensor& m = t.value(mi);
                          Tensor& dm = t.grad_buffer(mi);
                          for (std::size_t i = 0; i < m.size(); ++i) dm[i] += g * m[i];
                        }
                        if (t.requires_grad(li)) {
                          const Tensor& lv = t.value(li);
                          Tensor& dl = t.grad_buffer(li);
                          for (std::size_t i = 0; i < lv.size(); ++i)
                            dl[i] += g * 0.5 * (std::exp(lv[i]) - 1.0);
                        }
                      });
}

Var linear(Var input, Var weight, Var bias) {
  const Tensor& w = weight.value();
  if (w.rank() != 2 || input.value().cols() != w.rows()) {
    throw DimensionError("linear: input shape " + shape_string(input.value().shape()) +
                         " incompatible with weight shape " + shape_string(w.shape()));
  }
  return add_bias(matmul(input, weight), bias);
}

LstmState lstm_step(const LstmWeights& weights, Var x, const LstmState& state) {
  const Tensor& wh = weights.w_hidden.value();
  const std::size_t hidden = wh.rows();
  if (wh.rank() != 2 || wh.cols() != 4 * hidden) {
    throw DimensionError("lstm_step: hidden weight shape " + shape_string(wh.shape()) +
                         " is not [H, 4H]");
  }
  if (state.hidden.value().cols() != hidden || state.cell.value().cols() != hidden) {
    throw DimensionError("lstm_step: state shapes " + shape_string(state.hidden.value().shape()) +
                         " / " + shape_string(state.cell.value().shape()) +
                         " do not match hidden size " + std::to_string(hidden));
  }
  if (state.hidden.value().rows() != x.value().rows()) {
    throw DimensionError("lstm_step: input shape " + shape_string(x.value().shape()) +
                         " does not match state shape " + shape_string(state.hidden.value().shape()));
  }
  const Var gates = add_bias(
      add(matmul(x, weights.w_input), matmul(state.hidden, weights.w_hidden)), weights.bias);
  const Var input_gate = sigmoid(slice_cols(gates, 0, hidden));
  const Var forget_gate = sigmoid(slice_cols(gates, hidden, hidden));
  const Var candidate = tanh(slice_cols(gates, 2 * hidden, hidden));
  const Var output_gate = sigmoid(slice_cols(gates, 3 * hidden, hidden));
  const Var cell = add(mul(forget_gate, state.cell), mul(input_gate, candidate));
  const Var hidden_out = mul(output_gate, tanh(cell));
  return {hidden_out, cell};
}

}  // namespace tdg::numeric
