#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tdg/numeric/parameters.hpp"
#include "tdg/numeric/tape.hpp"
#include "tdg/random.hpp"

namespace tdg::cvae {

using numeric::ParameterSet;
using numeric::Tensor;

enum class Role { forward, inverse };
enum class Mode { noise_encoder, standard_cvae };

std::string to_string(Role r);
std::string to_string(Mode m);
Role role_from_string(const std::string& s);
Mode mode_from_string(const std::string& s);

struct CvaeConfig {
  Role role = Role::forward;
  std::size_t step_dim = 186;       // per-step condition width
  std::size_t generated_dim = 184;  // N; also the latent width
  std::size_t window = 10;
  std::size_t linear_width = 256;
  std::size_t hidden = 256;
  double beta = 0.01;
  Mode mode = Mode::noise_encoder;
  // z = mu + var * eps instead of z = mu + sd * eps.
  bool literal_variance = false;

  // Forward models generate the leading slice of a step, inverse models the
  // trailing one.
  std::size_t target_offset() const noexcept { return role == Role::forward ? 0 : step_dim - generated_dim; }
  std::size_t input_dim() const noexcept { return step_dim + generated_dim; }
  void validate() const;

  static CvaeConfig for_role(Role role, std::size_t width = 256, std::size_t hidden = 256);
  friend bool operator==(const CvaeConfig&, const CvaeConfig&) = default;
};

// Row-major [window, step_dim] condition window.
using WindowView = std::span<const double>;

class CvaeModel {
 public:
  // Weights uniform in +-1/sqrt(fan_in); biases zero except the LSTM forget
  // gates, which start at 1.
  static CvaeModel initialize(const CvaeConfig& config, std::uint64_t seed);
  static CvaeModel zeros(const CvaeConfig& config);
  // Validates every expected parameter name and shape.
  CvaeModel(CvaeConfig config, ParameterSet parameters);

  const CvaeConfig& config() const noexcept { return config_; }
  const ParameterSet& parameters() const noexcept { return parameters_; }
  ParameterSet& parameters() noexcept { return parameters_; }

 private:
  CvaeConfig config_;
  ParameterSet parameters_;
};

// Expected names and shapes for a config, in a fixed order.
ParameterSet parameter_layout(const CvaeConfig& config);

// [window, step_dim + N]: the unknown slice of the last step is zeroed and
// `injected` fills the extra columns of the last step; earlier steps carry
// zeros there.
Tensor assemble_input(const CvaeConfig& config, WindowView window, std::span<const double> injected);

struct Encoding {
  Tensor mu;      // [window, N]
  Tensor logvar;  // [window, N]
};

Encoding encode(const CvaeModel& model, const Tensor& x);
Tensor reparameterize(const Tensor& mu, const Tensor& logvar, const Tensor& eps, bool literal_variance = false);
// Full generated sequence [window, N].
Tensor decode_sequence(const CvaeModel& model, WindowView window, std::span<const double> z_t);
// Last row of decode_sequence.
Tensor decode(const CvaeModel& model, WindowView window, std::span<const double> z_t);

// One stochastic draw of the current-step vector. Noise-encoder mode feeds standard
// normal noise through the encoder; standard_cvae samples z from the prior.
Tensor generate(const CvaeModel& model, WindowView window, NormalSampler& rng);

// MSE(generated_t, target_t) + beta * KL(mu_t, logvar_t). In noise-encoder mode the
// encoder sees `noise`; in standard_cvae it sees the target slice.
double loss(const CvaeModel& model, WindowView window, std::span<const double> target_t,
            std::span<const double> noise, std::span<const double> eps);
// Same contract given targets for every step [window, N]; only the last row
// is read.
double loss(const CvaeModel& model, WindowView window, const Tensor& target_sequence,
            std::span<const double> noise, std::span<const double> eps);

// Mini-batch inputs. All tensors are [B, N]; windows are [window, step_dim].
struct Batch {
  std::vector<WindowView> windows;
  Tensor noise;
  Tensor eps;
  Tensor targets;
};

// Records the batch-mean loss on `tape` using the bound parameter leaves.
numeric::Var batch_loss(numeric::Tape& tape, const std::vector<numeric::Var>& params, const CvaeConfig& config,
                        const Batch& batch);

struct LossAndGrad {
  double loss = 0.0;
  numeric::Gradients gradients;
};

// Batch-mean loss and gradients. Rows are processed in fixed chunks of
// `chunk_rows` and combined in chunk order, so the result does not depend on
// `threads`.
LossAndGrad loss_and_gradients(const CvaeModel& model, const Batch& batch, unsigned threads = 1,
                               std::size_t chunk_rows = 16);
// Batch-mean loss without gradients.
double batch_loss_value(const CvaeModel& model, const Batch& batch);

// MSE of the inference path against the targets: noise-encoder mode encodes
// `noise` and reparameterizes with `eps`; standard_cvae decodes z = eps drawn
// from the prior. The target never reaches the model.
double prediction_mse(const CvaeModel& model, const Batch& batch);

}  // namespace tdg::cvae
