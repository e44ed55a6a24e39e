#include "tdg/cvae/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "tdg/error.hpp"
#include "tdg/numeric/ops.hpp"

namespace tdg::cvae {

using numeric::Tape;
using numeric::Var;
namespace ops = numeric;

std::string to_string(Role r) { return r == Role::forward ? "forward" : "inverse"; }
std::string to_string(Mode m) { return m == Mode::noise_encoder ? "noise_encoder" : "standard_cvae"; }

Role role_from_string(const std::string& s) {
  if (s == "forward") return Role::forward;
  if (s == "inverse") return Role::inverse;
  throw ConfigError("unknown model role '" + s + "' (expected forward or inverse)");
}

Mode mode_from_string(const std::string& s) {
  if (s == "noise_encoder") return Mode::noise_encoder;
  if (s == "standard_cvae") return Mode::standard_cvae;
  throw ConfigError("unknown model mode '" + s + "' (expected noise_encoder or standard_cvae)");
}

void CvaeConfig::validate() const {
  if (window < 1) throw ConfigError("model.window must be >= 1");
  if (generated_dim < 1 || generated_dim > step_dim) {
    throw ConfigError("model.generated_dim must be in [1, step_dim]");
  }
  if (linear_width < 1 || hidden < 1) throw ConfigError("model widths must be >= 1");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("model.beta must be finite and >= 0");
}

CvaeConfig CvaeConfig::for_role(Role role, std::size_t width, std::size_t hidden) {
  CvaeConfig c;
  c.role = role;
  c.generated_dim = role == Role::forward ? 184 : 2;
  c.linear_width = width;
  c.hidden = hidden;
  return c;
}

namespace {

enum P : std::size_t {
  kEncL1W, kEncL1B, kEncLstmWi, kEncLstmWh, kEncLstmB, kEncL2W, kEncL2B, kEncMuW, kEncMuB, kEncLvW, kEncLvB,
  kDecLstmWi, kDecLstmWh, kDecLstmB, kDecL1W, kDecL1B, kDecL2W, kDecL2B, kDecL3W, kDecL3B, kDecL4W, kDecL4B,
  kParamCount
};

struct Layer {
  std::string name;
  std::size_t rows;
  std::size_t cols;  // 0 for a bias vector
};

std::vector<Layer> layout(const CvaeConfig& c) {
  const std::size_t in = c.input_dim(), w = c.linear_width, h = c.hidden, n = c.generated_dim;
  return {
      {"enc.linear1.weight", in, w}, {"enc.linear1.bias", w, 0},
      {"enc.lstm.w_input", w, 4 * h}, {"enc.lstm.w_hidden", h, 4 * h}, {"enc.lstm.bias", 4 * h, 0},
      {"enc.linear2.weight", h, w}, {"enc.linear2.bias", w, 0},
      {"enc.linear3.weight", w, n}, {"enc.linear3.bias", n, 0},
      {"enc.linear4.weight", w, n}, {"enc.linear4.bias", n, 0},
      {"dec.lstm.w_input", in, 4 * h}, {"dec.lstm.w_hidden", h, 4 * h}, {"dec.lstm.bias", 4 * h, 0},
      {"dec.linear1.weight", h, w}, {"dec.linear1.bias", w, 0},
      {"dec.linear2.weight", w, w}, {"dec.linear2.bias", w, 0},
      {"dec.linear3.weight", w, w}, {"dec.linear3.bias", w, 0},
      {"dec.linear4.weight", w, n}, {"dec.linear4.bias", n, 0},
  };
}

numeric::Shape shape_of(const Layer& l) {
  return l.cols == 0 ? numeric::Shape{l.rows} : numeric::Shape{l.rows, l.cols};
}

// Constant [B, in] input rows for one step. The last step's unknown slice is
// zeroed; `slot` fills its injected columns when given.
Tensor step_input(const CvaeConfig& c, const std::vector<WindowView>& windows, std::size_t k, const Tensor* slot) {
  const std::size_t b = windows.size(), in = c.input_dim();
  Tensor out({b, in});
  const bool last = k + 1 == c.window;
  for (std::size_t r = 0; r < b; ++r) {
    const double* src = windows[r].data() + k * c.step_dim;
    double* dst = out.data() + r * in;
    std::copy(src, src + c.step_dim, dst);
    if (last) {
      std::fill(dst + c.target_offset(), dst + c.target_offset() + c.generated_dim, 0.0);
      if (slot) std::copy(slot->data() + r * c.generated_dim, slot->data() + (r + 1) * c.generated_dim, dst + c.step_dim);
    }
  }
  return out;
}

// Masked last step without the injected columns, [B, step_dim].
Tensor masked_last_condition(const CvaeConfig& c, const std::vector<WindowView>& windows) {
  Tensor out({windows.size(), c.step_dim});
  for (std::size_t r = 0; r < windows.size(); ++r) {
    const double* src = windows[r].data() + (c.window - 1) * c.step_dim;
    double* dst = out.data() + r * c.step_dim;
    std::copy(src, src + c.step_dim, dst);
    std::fill(dst + c.target_offset(), dst + c.target_offset() + c.generated_dim, 0.0);
  }
  return out;
}

std::vector<Var> run_lstm(Tape& tape, const std::vector<Var>& p, std::size_t wi, const std::vector<Var>& xs,
                          std::size_t hidden) {
  const std::size_t rows = xs.front().value().rows();
  ops::LstmWeights w{p[wi], p[wi + 1], p[wi + 2]};
  ops::LstmState s{tape.constant(Tensor({rows, hidden})), tape.constant(Tensor({rows, hidden}))};
  std::vector<Var> out;
  out.reserve(xs.size());
  for (const Var& x : xs) {
    s = ops::lstm_step(w, x, s);
    out.push_back(s.hidden);
  }
  return out;
}

struct EncoderOut {
  std::vector<Var> mu;
  std::vector<Var> logvar;
};

// Heads are evaluated at every step when `all_steps`, else at the last only.
EncoderOut run_encoder(Tape& tape, const std::vector<Var>& p, const CvaeConfig& c, const std::vector<Var>& xs,
                       bool all_steps) {
  std::vector<Var> h1;
  h1.reserve(xs.size());
  for (const Var& x : xs) h1.push_back(ops::gelu(ops::linear(x, p[kEncL1W], p[kEncL1B])));
  const std::vector<Var> r = run_lstm(tape, p, kEncLstmWi, h1, c.hidden);
  EncoderOut out;
  for (std::size_t k = all_steps ? 0 : r.size() - 1; k < r.size(); ++k) {
    const Var e = ops::gelu(ops::linear(r[k], p[kEncL2W], p[kEncL2B]));
    out.mu.push_back(ops::linear(e, p[kEncMuW], p[kEncMuB]));
    out.logvar.push_back(ops::linear(e, p[kEncLvW], p[kEncLvB]));
  }
  return out;
}

std::vector<Var> run_decoder(Tape& tape, const std::vector<Var>& p, const CvaeConfig& c, const std::vector<Var>& xs,
                             bool all_steps) {
  const std::vector<Var> r = run_lstm(tape, p, kDecLstmWi, xs, c.hidden);
  std::vector<Var> out;
  for (std::size_t k = all_steps ? 0 : r.size() - 1; k < r.size(); ++k) {
    Var g = ops::gelu(ops::linear(r[k], p[kDecL1W], p[kDecL1B]));
    g = ops::gelu(ops::linear(g, p[kDecL2W], p[kDecL2B]));
    g = ops::gelu(ops::linear(g, p[kDecL3W], p[kDecL3B]));
    out.push_back(ops::sigmoid(ops::linear(g, p[kDecL4W], p[kDecL4B])));
  }
  return out;
}

Var reparameterize_var(Var mu, Var logvar, Var eps, bool literal) {
  const Var spread = literal ? ops::exp(logvar) : ops::exp(ops::scale(logvar, 0.5));
  return ops::add(mu, ops::mul(spread, eps));
}

std::vector<Var> bind_constants(Tape& tape, const ParameterSet& params) {
  std::vector<Var> out;
  out.reserve(params.size());
  for (const auto& [name, t] : params.entries()) out.push_back(tape.constant(t));
  return out;
}

void check_batch(const CvaeConfig& c, const Batch& b) {
  const std::size_t rows = b.windows.size();
  if (rows == 0) throw UsageError("empty batch");
  for (const auto& w : b.windows) {
    if (w.size() != c.window * c.step_dim) {
      throw DimensionError("window of " + std::to_string(w.size()) + " values, expected " +
                           std::to_string(c.window * c.step_dim));
    }
  }
  for (const Tensor* t : {&b.noise, &b.eps, &b.targets}) {
    if (t->size() != rows * c.generated_dim) {
      throw DimensionError("batch tensor " + numeric::shape_string(t->shape()) + " does not match [" +
                           std::to_string(rows) + ", " + std::to_string(c.generated_dim) + "]");
    }
  }
}

Tensor as_rows(const Tensor& t, std::size_t rows, std::size_t cols) { return Tensor({rows, cols}, t.storage()); }

struct Forward {
  Var mu;
  Var logvar;
  Var generated;
};

// Training-path graph over a batch: encoder over the masked window with the
// injected slot, reparameterized z, decoder with z at the last step.
Forward training_graph(Tape& tape, const std::vector<Var>& p, const CvaeConfig& c, const Batch& b) {
  const std::size_t rows = b.windows.size(), n = c.generated_dim;
  const Tensor injected = as_rows(c.mode == Mode::noise_encoder ? b.noise : b.targets, rows, n);
  std::vector<Var> enc_in, dec_in;
  for (std::size_t k = 0; k + 1 < c.window; ++k) {
    const Var x = tape.constant(step_input(c, b.windows, k, nullptr));
    enc_in.push_back(x);
    dec_in.push_back(x);
  }
  enc_in.push_back(tape.constant(step_input(c, b.windows, c.window - 1, &injected)));
  const EncoderOut enc = run_encoder(tape, p, c, enc_in, false);
  const Var z = reparameterize_var(enc.mu.back(), enc.logvar.back(), tape.constant(as_rows(b.eps, rows, n)),
                                   c.literal_variance);
  dec_in.push_back(ops::concat_cols({tape.constant(masked_last_condition(c, b.windows)), z}));
  return {enc.mu.back(), enc.logvar.back(), run_decoder(tape, p, c, dec_in, false).back()};
}

Var loss_from(Tape& tape, const CvaeConfig& c, const Forward& f, const Tensor& targets, std::size_t rows) {
  const Var mse = ops::mse_loss(f.generated, tape.constant(as_rows(targets, rows, c.generated_dim)));
  if (c.beta == 0.0) return mse;
  return ops::add(mse, ops::scale(ops::kl_divergence(f.mu, f.logvar), c.beta));
}

Batch single(const CvaeConfig& c, WindowView window, std::span<const double> target, std::span<const double> noise,
             std::span<const double> eps) {
  auto row = [&](std::span<const double> v, const char* what) {
    if (v.size() != c.generated_dim) {
      throw DimensionError(std::string(what) + " has " + std::to_string(v.size()) + " values, expected " +
                           std::to_string(c.generated_dim));
    }
    return Tensor({1, c.generated_dim}, std::vector<double>(v.begin(), v.end()));
  };
  return Batch{{window}, row(noise, "noise"), row(eps, "eps"), row(target, "target")};
}

}  // namespace

ParameterSet parameter_layout(const CvaeConfig& config) {
  ParameterSet out;
  for (const Layer& l : layout(config)) out.add(l.name, Tensor(shape_of(l)));
  return out;
}

CvaeModel::CvaeModel(CvaeConfig config, ParameterSet parameters)
    : config_(config), parameters_(std::move(parameters)) {
  config_.validate();
  const auto expected = layout(config_);
  if (parameters_.size() != expected.size()) {
    throw DimensionError("model has " + std::to_string(parameters_.size()) + " tensors, config expects " +
                         std::to_string(expected.size()));
  }
  for (std::size_t k = 0; k < expected.size(); ++k) {
    const auto& [name, t] = parameters_.entries()[k];
    if (name != expected[k].name || t.shape() != shape_of(expected[k])) {
      throw DimensionError("parameter '" + name + "' " + numeric::shape_string(t.shape()) + " does not match '" +
                           expected[k].name + "' " + numeric::shape_string(shape_of(expected[k])));
    }
  }
}

CvaeModel CvaeModel::zeros(const CvaeConfig& config) { return CvaeModel(config, parameter_layout(config)); }

CvaeModel CvaeModel::initialize(const CvaeConfig& config, std::uint64_t seed) {
  config.validate();
  ParameterSet params = parameter_layout(config);
  std::size_t index = 0;
  for (auto& [name, t] : params.entries()) {
    NormalSampler rng(derive_seed(seed, "cvae-init", index++));
    if (t.rank() == 2) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(t.rows()));
      for (double& v : t.values()) v = bound * (2.0 * rng.uniform() - 1.0);
    } else if (name.ends_with("lstm.bias")) {
      const std::size_t h = t.size() / 4;
      std::fill(t.data() + h, t.data() + 2 * h, 1.0);
    }
  }
  return CvaeModel(config, std::move(params));
}

Tensor assemble_input(const CvaeConfig& config, WindowView window, std::span<const double> injected) {
  if (window.size() != config.window * config.step_dim) {
    throw DimensionError("window of " + std::to_string(window.size()) + " values, expected " +
                         std::to_string(config.window * config.step_dim));
  }
  if (injected.size() != config.generated_dim) {
    throw DimensionError("injected vector of length " + std::to_string(injected.size()) + ", expected " +
                         std::to_string(config.generated_dim));
  }
  const std::size_t in = config.input_dim();
  Tensor x({config.window, in});
  const std::vector<WindowView> one{window};
  const Tensor slot({1, config.generated_dim}, std::vector<double>(injected.begin(), injected.end()));
  for (std::size_t k = 0; k < config.window; ++k) {
    const Tensor row = step_input(config, one, k, &slot);
    std::copy(row.data(), row.data() + in, x.data() + k * in);
  }
  return x;
}

Encoding encode(const CvaeModel& model, const Tensor& x) {
  const CvaeConfig& c = model.config();
  if (x.rank() != 2 || x.rows() != c.window || x.cols() != c.input_dim()) {
    throw DimensionError("encoder input " + numeric::shape_string(x.shape()) + " does not match [" +
                         std::to_string(c.window) + ", " + std::to_string(c.input_dim()) + "]");
  }
  Tape tape;
  const auto p = bind_constants(tape, model.parameters());
  std::vector<Var> xs;
  for (std::size_t k = 0; k < c.window; ++k) {
    xs.push_back(tape.constant(
        Tensor({1, c.input_dim()}, std::vector<double>(x.data() + k * c.input_dim(), x.data() + (k + 1) * c.input_dim()))));
  }
  const EncoderOut e = run_encoder(tape, p, c, xs, true);
  Encoding out{Tensor({c.window, c.generated_dim}), Tensor({c.window, c.generated_dim})};
  for (std::size_t k = 0; k < c.window; ++k) {
    std::copy(e.mu[k].value().data(), e.mu[k].value().data() + c.generated_dim, out.mu.data() + k * c.generated_dim);
    std::copy(e.logvar[k].value().data(), e.logvar[k].value().data() + c.generated_dim,
              out.logvar.data() + k * c.generated_dim);
  }
  return out;
}

Tensor reparameterize(const Tensor& mu, const Tensor& logvar, const Tensor& eps, bool literal_variance) {
  if (mu.shape() != logvar.shape() || mu.shape() != eps.shape()) {
    throw DimensionError("reparameterize: shapes " + numeric::shape_string(mu.shape()) + ", " +
                         numeric::shape_string(logvar.shape()) + ", " + numeric::shape_string(eps.shape()) +
                         " differ");
  }
  Tensor z(mu.shape());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double spread = literal_variance ? std::exp(logvar[i]) : std::exp(0.5 * logvar[i]);
    z[i] = mu[i] + spread * eps[i];
  }
  return z;
}

Tensor decode_sequence(const CvaeModel& model, WindowView window, std::span<const double> z_t) {
  const CvaeConfig& c = model.config();
  const Tensor x = assemble_input(c, window, z_t);
  Tape tape;
  const auto p = bind_constants(tape, model.parameters());
  std::vector<Var> xs;
  for (std::size_t k = 0; k < c.window; ++k) {
    xs.push_back(tape.constant(
        Tensor({1, c.input_dim()}, std::vector<double>(x.data() + k * c.input_dim(), x.data() + (k + 1) * c.input_dim()))));
  }
  const auto outs = run_decoder(tape, p, c, xs, true);
  Tensor out({c.window, c.generated_dim});
  for (std::size_t k = 0; k < c.window; ++k) {
    std::copy(outs[k].value().data(), outs[k].value().data() + c.generated_dim, out.data() + k * c.generated_dim);
  }
  return out;
}

Tensor decode(const CvaeModel& model, WindowView window, std::span<const double> z_t) {
  const Tensor seq = decode_sequence(model, window, z_t);
  const std::size_t n = model.config().generated_dim;
  return Tensor({n}, std::vector<double>(seq.data() + seq.size() - n, seq.data() + seq.size()));
}

Tensor generate(const CvaeModel& model, WindowView window, NormalSampler& rng) {
  const CvaeConfig& c = model.config();
  const std::size_t n = c.generated_dim;
  std::vector<double> z(n);
  if (c.mode == Mode::noise_encoder) {
    std::vector<double> noise(n);
    for (double& v : noise) v = rng();
    Tensor eps({1, n});
    for (double& v : eps.values()) v = rng();
    const Encoding e = encode(model, assemble_input(c, window, noise));
    const std::size_t last = (c.window - 1) * n;
    const Tensor mu({1, n}, std::vector<double>(e.mu.data() + last, e.mu.data() + last + n));
    const Tensor lv({1, n}, std::vector<double>(e.logvar.data() + last, e.logvar.data() + last + n));
    const Tensor zt = reparameterize(mu, lv, eps, c.literal_variance);
    std::copy(zt.data(), zt.data() + n, z.begin());
  } else {
    for (double& v : z) v = rng();
  }
  return decode(model, window, z);
}

double loss(const CvaeModel& model, WindowView window, std::span<const double> target_t,
            std::span<const double> noise, std::span<const double> eps) {
  return batch_loss_value(model, single(model.config(), window, target_t, noise, eps));
}

double loss(const CvaeModel& model, WindowView window, const Tensor& target_sequence, std::span<const double> noise,
            std::span<const double> eps) {
  const CvaeConfig& c = model.config();
  if (target_sequence.rank() != 2 || target_sequence.rows() != c.window || target_sequence.cols() != c.generated_dim) {
    throw DimensionError("target sequence " + numeric::shape_string(target_sequence.shape()) + " does not match [" +
                         std::to_string(c.window) + ", " + std::to_string(c.generated_dim) + "]");
  }
  const auto last = target_sequence.values().subspan((c.window - 1) * c.generated_dim, c.generated_dim);
  return loss(model, window, last, noise, eps);
}

Var batch_loss(Tape& tape, const std::vector<Var>& params, const CvaeConfig& config, const Batch& batch) {
  if (params.size() != kParamCount) throw UsageError("batch_loss: wrong number of parameter leaves");
  check_batch(config, batch);
  const Forward f = training_graph(tape, params, config, batch);
  return loss_from(tape, config, f, batch.targets, batch.windows.size());
}

double batch_loss_value(const CvaeModel& model, const Batch& batch) {
  Tape tape;
  const auto p = bind_constants(tape, model.parameters());
  return batch_loss(tape, p, model.config(), batch).value()[0];
}

LossAndGrad loss_and_gradients(const CvaeModel& model, const Batch& batch, unsigned threads, std::size_t chunk_rows) {
  const CvaeConfig& c = model.config();
  check_batch(c, batch);
  const std::size_t rows = batch.windows.size(), n = c.generated_dim;
  chunk_rows = std::max<std::size_t>(chunk_rows, 1);
  const std::size_t chunks = (rows + chunk_rows - 1) / chunk_rows;

  std::vector<double> losses(chunks);
  std::vector<numeric::Gradients> grads(chunks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < chunks;) {
      const std::size_t begin = i * chunk_rows, count = std::min(chunk_rows, rows - begin);
      auto slice = [&](const Tensor& t) {
        return Tensor({count, n}, std::vector<double>(t.data() + begin * n, t.data() + (begin + count) * n));
      };
      Batch part{std::vector<WindowView>(batch.windows.begin() + begin, batch.windows.begin() + begin + count),
                 slice(batch.noise), slice(batch.eps), slice(batch.targets)};
      Tape tape;
      const auto p = tape.bind(model.parameters());
      const Var l = batch_loss(tape, p, c, part);
      losses[i] = l.value()[0];
      tape.backward(l);
      grads[i] = tape.parameter_gradients();
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(chunks)));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < workers; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  LossAndGrad out{0.0, model.parameters().zeros_like()};
  for (std::size_t i = 0; i < chunks; ++i) {
    const std::size_t count = std::min(chunk_rows, rows - i * chunk_rows);
    const double w = static_cast<double>(count) / static_cast<double>(rows);
    out.loss += w * losses[i];
    auto& dst = out.gradients.entries();
    const auto& src = grads[i].entries();
    for (std::size_t k = 0; k < dst.size(); ++k) {
      double* d = dst[k].second.data();
      const double* s = src[k].second.data();
      for (std::size_t j = 0; j < dst[k].second.size(); ++j) d[j] += w * s[j];
    }
  }
  if (!std::isfinite(out.loss)) throw NumericError("loss is not finite");
  return out;
}

double prediction_mse(const CvaeModel& model, const Batch& batch) {
  const CvaeConfig& c = model.config();
  check_batch(c, batch);
  const std::size_t rows = batch.windows.size(), n = c.generated_dim;
  Tape tape;
  const auto p = bind_constants(tape, model.parameters());
  Var z;
  if (c.mode == Mode::noise_encoder) {
    const Tensor noise = as_rows(batch.noise, rows, n);
    std::vector<Var> enc_in;
    for (std::size_t k = 0; k < c.window; ++k) {
      enc_in.push_back(tape.constant(step_input(c, batch.windows, k, k + 1 == c.window ? &noise : nullptr)));
    }
    const EncoderOut e = run_encoder(tape, p, c, enc_in, false);
    z = reparameterize_var(e.mu.back(), e.logvar.back(), tape.constant(as_rows(batch.eps, rows, n)), c.literal_variance);
  } else {
    z = tape.constant(as_rows(batch.eps, rows, n));
  }
  std::vector<Var> dec_in;
  for (std::size_t k = 0; k + 1 < c.window; ++k) dec_in.push_back(tape.constant(step_input(c, batch.windows, k, nullptr)));
  dec_in.push_back(ops::concat_cols({tape.constant(masked_last_condition(c, batch.windows)), z}));
  const Var g = run_decoder(tape, p, c, dec_in, false).back();
  return ops::mse_loss(g, tape.constant(as_rows(batch.targets, rows, n))).value()[0];
}

}  // namespace tdg::cvae
