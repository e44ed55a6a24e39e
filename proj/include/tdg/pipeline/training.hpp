#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tdg/cvae/model.hpp"
#include "tdg/numeric/optim.hpp"
#include "tdg/preprocess/dataset.hpp"

namespace tdg::pipeline {

enum class Optimizer { adam, sgd };
std::string to_string(Optimizer o);
Optimizer optimizer_from_string(const std::string& s);

struct TrainConfig {
  int epochs = 200;
  std::size_t batch_size = 64;
  double initial_lr = 1e-3;
  int decay_period = 300;
  double decay_factor = 0.1;
  double validation_fraction = 0.1;
  Optimizer optimizer = Optimizer::adam;
  std::size_t max_windows = 0;  // 0 keeps every window
  std::uint64_t seed = 1;
  unsigned threads = 1;
  // Inverse training: keep the logged current perception instead of the
  // forward model's.
  bool ground_truth_perception = false;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  double validation_mse = 0.0;  // inference-path MSE on held-out windows
};

struct TrainResult {
  cvae::CvaeModel best;
  numeric::OptimizerState optimizer;  // state after the final epoch
  int best_epoch = 0;
  std::vector<EpochLog> log;
  std::size_t train_windows = 0;
  std::size_t validation_windows = 0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Adam with step-decayed learning rate on the current-step loss. The
// dataset's target slice must match the model role. For an inverse model
// without ground_truth_perception, `forward` supplies the current-step
// perception of every window. Returns the checkpoint with the lowest
// validation loss.
TrainResult train(const preprocess::Dataset& dataset, const cvae::CvaeConfig& model_config,
                  const TrainConfig& config, const cvae::CvaeModel* forward = nullptr,
                  const EpochCallback& on_epoch = {});

// Windows as doubles, optionally with the current-step perception replaced
// by forward-model draws (seeded per window index).
std::vector<std::vector<double>> materialize_windows(const preprocess::Dataset& dataset,
                                                     const std::vector<std::size_t>& indices,
                                                     const cvae::CvaeModel* forward, std::uint64_t seed,
                                                     unsigned threads);

// Deterministic Fisher-Yates shuffle driven by a seeded engine.
void seeded_shuffle(std::vector<std::size_t>& items, std::uint64_t seed);

}  // namespace tdg::pipeline
