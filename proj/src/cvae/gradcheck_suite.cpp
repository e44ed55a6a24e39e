#include "tdg/cvae/gradcheck_suite.hpp"

#include <functional>

#include "tdg/numeric/ops.hpp"
#include "tdg/numeric/tape.hpp"
#include "tdg/random.hpp"

namespace tdg::cvae {

using numeric::Tape;
using numeric::Tensor;
using numeric::Var;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, NormalSampler& s, double scale = 0.5) {
  Tensor t(shape);
  for (double& v : t.values()) v = scale * s();
  return t;
}

std::vector<double> uniform_values(std::size_t n, std::uint64_t seed) {
  NormalSampler rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform();
  return v;
}

using GraphFn = std::function<Var(Tape&, const std::vector<Var>&)>;

numeric::GradCheckResult check_graph(const ParameterSet& params, const GraphFn& build) {
  Tape tape;
  auto vars = tape.bind(params);
  tape.backward(build(tape, vars));
  const auto grads = tape.parameter_gradients();
  return numeric::finite_difference_check(params, grads, [&](const ParameterSet& p) {
    Tape probe;
    return build(probe, probe.bind(p)).value()[0];
  });
}

numeric::GradCheckResult check_full_loss(const CvaeConfig& c, std::uint64_t seed) {
  const CvaeModel m = CvaeModel::initialize(c, seed);
  constexpr std::size_t rows = 3;
  std::vector<std::vector<double>> storage;
  Batch b;
  for (std::size_t r = 0; r < rows; ++r) storage.push_back(uniform_values(c.window * c.step_dim, seed + 10 + r));
  for (const auto& w : storage) b.windows.emplace_back(w);
  NormalSampler s(derive_seed(seed, "gradcheck-noise", 0));
  b.noise = random_tensor({rows, c.generated_dim}, s, 1.0);
  b.eps = random_tensor({rows, c.generated_dim}, s, 1.0);
  b.targets = Tensor({rows, c.generated_dim}, uniform_values(rows * c.generated_dim, seed + 99));
  const LossAndGrad lg = loss_and_gradients(m, b);
  return numeric::finite_difference_check(m.parameters(), lg.gradients, [&](const ParameterSet& p) {
    return batch_loss_value(CvaeModel(c, p), b);
  });
}

}  // namespace

CvaeConfig toy_config(Role role, Mode mode) {
  CvaeConfig c;
  c.role = role;
  c.step_dim = 8;
  c.generated_dim = 2;
  c.linear_width = 4;
  c.hidden = 4;
  c.window = 10;
  c.beta = 0.5;
  c.mode = mode;
  return c;
}

std::vector<GradCheckCase> run_gradient_suite(std::uint64_t seed) {
  std::vector<GradCheckCase> out;
  NormalSampler s(derive_seed(seed, "gradcheck-params", 0));

  ParameterSet lin;
  lin.add("x", random_tensor({3, 4}, s));
  lin.add("w", random_tensor({4, 5}, s));
  lin.add("b", random_tensor({5}, s));
  lin.add("target", Tensor({3, 5}, uniform_values(15, seed)));
  out.push_back({"linear+gelu+sigmoid+mse", check_graph(lin, [](Tape&, const std::vector<Var>& v) {
                   return numeric::mse_loss(numeric::sigmoid(numeric::gelu(numeric::linear(v[0], v[1], v[2]))), v[3]);
                 })});

  ParameterSet lstm;
  lstm.add("x", random_tensor({2, 3}, s));
  lstm.add("wi", random_tensor({3, 12}, s));
  lstm.add("wh", random_tensor({3, 12}, s));
  lstm.add("bias", random_tensor({12}, s));
  lstm.add("h0", random_tensor({2, 3}, s));
  lstm.add("c0", random_tensor({2, 3}, s));
  out.push_back({"lstm x4", check_graph(lstm, [](Tape&, const std::vector<Var>& v) {
                   numeric::LstmState st{v[4], v[5]};
                   for (int k = 0; k < 4; ++k) st = numeric::lstm_step({v[1], v[2], v[3]}, v[0], st);
                   return numeric::sum(numeric::mul(st.hidden, numeric::tanh(st.cell)));
                 })});

  ParameterSet kl;
  kl.add("mu", random_tensor({2, 3}, s));
  kl.add("logvar", random_tensor({2, 3}, s));
  out.push_back({"kl+exp", check_graph(kl, [](Tape&, const std::vector<Var>& v) {
                   return numeric::add(numeric::kl_divergence(v[0], v[1]),
                                       numeric::mean(numeric::exp(numeric::scale(v[1], 0.5))));
                 })});

  std::uint64_t k = 0;
  for (Role role : {Role::forward, Role::inverse}) {
    for (Mode mode : {Mode::noise_encoder, Mode::standard_cvae}) {
      out.push_back({"cvae loss " + to_string(role) + "/" + to_string(mode),
                     check_full_loss(toy_config(role, mode), derive_seed(seed, "gradcheck-model", k++))});
    }
  }
  CvaeConfig literal = toy_config(Role::inverse, Mode::noise_encoder);
  literal.literal_variance = true;
  out.push_back({"cvae loss inverse/noise_encoder literal-variance", check_full_loss(literal, derive_seed(seed, "gradcheck-model", k))});
  return out;
}

}  // namespace tdg::cvae
