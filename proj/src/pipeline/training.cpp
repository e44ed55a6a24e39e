#include "tdg/pipeline/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "tdg/error.hpp"
#include "tdg/random.hpp"

namespace tdg::pipeline {

using cvae::CvaeConfig;
using cvae::CvaeModel;
using numeric::Tensor;
using preprocess::Dataset;

std::string to_string(Optimizer o) { return o == Optimizer::adam ? "adam" : "sgd"; }

Optimizer optimizer_from_string(const std::string& s) {
  if (s == "adam") return Optimizer::adam;
  if (s == "sgd") return Optimizer::sgd;
  throw ConfigError("unknown optimizer '" + s + "' (expected adam or sgd)");
}

void TrainConfig::validate() const {
  if (epochs <= 0) throw ConfigError("training.epochs must be > 0");
  if (batch_size == 0) throw ConfigError("training.batch_size must be > 0");
  if (!(initial_lr > 0.0)) throw ConfigError("training.initial_lr must be > 0");
  if (decay_period <= 0) throw ConfigError("training.decay_period must be > 0");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) throw ConfigError("training.decay_factor must be in (0, 1]");
  if (!(validation_fraction > 0.0 && validation_fraction < 0.5)) {
    throw ConfigError("training.validation_fraction must be in (0, 0.5)");
  }
}

void seeded_shuffle(std::vector<std::size_t>& items, std::uint64_t seed) {
  Engine gen(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(gen() % i);
    std::swap(items[i - 1], items[j]);
  }
}

namespace {

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn fn) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) fn(i);
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

Split split_indices(std::size_t total, const TrainConfig& config) {
  std::vector<std::size_t> all(total);
  for (std::size_t i = 0; i < total; ++i) all[i] = i;
  if (config.max_windows > 0 && config.max_windows < total) {
    seeded_shuffle(all, derive_seed(config.seed, "subsample"));
    all.resize(config.max_windows);
    std::sort(all.begin(), all.end());
  }
  if (all.size() < 2) throw UsageError("training needs at least 2 windows, dataset has " + std::to_string(all.size()));
  seeded_shuffle(all, derive_seed(config.seed, "split"));
  std::size_t n_val = static_cast<std::size_t>(std::llround(config.validation_fraction * static_cast<double>(all.size())));
  n_val = std::clamp<std::size_t>(n_val, 1, all.size() - 1);
  Split s;
  s.validation.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.train.assign(all.begin() + static_cast<std::ptrdiff_t>(n_val), all.end());
  std::sort(s.validation.begin(), s.validation.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

Tensor gather_targets(const std::vector<std::vector<double>>& windows, const std::vector<std::size_t>& rows,
                      const std::vector<std::vector<double>>& originals, const CvaeConfig& c) {
  Tensor out({rows.size(), c.generated_dim});
  const std::size_t base = (c.window - 1) * c.step_dim + c.target_offset();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& src = originals.empty() ? windows[rows[r]] : originals[rows[r]];
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(base),
              src.begin() + static_cast<std::ptrdiff_t>(base + c.generated_dim), out.data() + r * c.generated_dim);
  }
  return out;
}

Tensor normals(std::size_t rows, std::size_t cols, NormalSampler& rng) {
  Tensor t({rows, cols});
  for (double& v : t.values()) v = rng();
  return t;
}

cvae::Batch make_batch(const std::vector<std::vector<double>>& windows, const std::vector<std::size_t>& rows,
                       const Tensor& targets, NormalSampler& rng, const CvaeConfig& c) {
  cvae::Batch b;
  for (std::size_t r : rows) b.windows.emplace_back(windows[r]);
  b.noise = normals(rows.size(), c.generated_dim, rng);
  b.eps = normals(rows.size(), c.generated_dim, rng);
  b.targets = targets;
  return b;
}

}  // namespace

std::vector<std::vector<double>> materialize_windows(const Dataset& dataset, const std::vector<std::size_t>& indices,
                                                     const CvaeModel* forward, std::uint64_t seed, unsigned threads) {
  std::vector<std::vector<double>> out(indices.size());
  const std::size_t stride = dataset.window_stride();
  parallel_for(indices.size(), threads, [&](std::size_t i) {
    const auto w = dataset.window(indices[i]);
    out[i].assign(w.begin(), w.end());
    if (forward) {
      const CvaeConfig& fc = forward->config();
      NormalSampler rng(derive_seed(seed, "forward-perception", indices[i]));
      const Tensor p = cvae::generate(*forward, out[i], rng);
      // Stored the way a dataset would hold it.
      for (std::size_t k = 0; k < fc.generated_dim; ++k) {
        out[i][stride - dataset.step_dim + fc.target_offset() + k] = static_cast<float>(p[k]);
      }
    }
  });
  return out;
}

TrainResult train(const Dataset& dataset, const CvaeConfig& model_config, const TrainConfig& config,
                  const CvaeModel* forward, const EpochCallback& on_epoch) {
  config.validate();
  model_config.validate();
  if (dataset.size() == 0) throw UsageError("training dataset is empty");
  if (dataset.window_length != model_config.window || dataset.step_dim != model_config.step_dim) {
    throw DimensionError("dataset layout " + std::to_string(dataset.window_length) + "x" +
                         std::to_string(dataset.step_dim) + " does not match the model");
  }
  const auto expected_slice =
      model_config.role == cvae::Role::forward ? preprocess::TargetSlice::perception : preprocess::TargetSlice::control;
  if (dataset.target != expected_slice) {
    throw UsageError("dataset targets the " + preprocess::to_string(dataset.target) + " slice but a " +
                     cvae::to_string(model_config.role) + " model generates " + preprocess::to_string(expected_slice));
  }
  const bool replace_perception = model_config.role == cvae::Role::inverse && !config.ground_truth_perception;
  if (replace_perception) {
    if (!forward) throw UsageError("inverse training needs a forward model unless ground_truth_perception is set");
    if (forward->config().role != cvae::Role::forward) throw UsageError("model supplied as forward has role inverse");
    if (forward->config().step_dim != model_config.step_dim || forward->config().window != model_config.window) {
      throw DimensionError("forward model window layout does not match the inverse model");
    }
  }

  const Split split = split_indices(dataset.size(), config);
  std::vector<std::size_t> all(split.train);
  all.insert(all.end(), split.validation.begin(), split.validation.end());
  const auto windows = materialize_windows(dataset, all, replace_perception ? forward : nullptr, config.seed, config.threads);
  std::vector<std::vector<double>> originals;
  if (replace_perception) originals = materialize_windows(dataset, all, nullptr, config.seed, config.threads);
  const std::size_t n_train = split.train.size();

  std::vector<std::size_t> val_rows;
  for (std::size_t i = n_train; i < all.size(); ++i) val_rows.push_back(i);
  NormalSampler val_rng(derive_seed(config.seed, "validation-noise"));
  const cvae::Batch val_batch =
      make_batch(windows, val_rows, gather_targets(windows, val_rows, originals, model_config), val_rng, model_config);

  CvaeModel model = CvaeModel::initialize(model_config, derive_seed(config.seed, "init"));
  numeric::OptimizerState opt = numeric::OptimizerState::for_parameters(model.parameters());
  TrainResult result{model, opt, 0, {}, n_train, val_rows.size()};
  double best_val = 0.0;

  std::vector<std::size_t> order(n_train);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = numeric::step_decay_lr(config.initial_lr, epoch, config.decay_period, config.decay_factor);
    for (std::size_t i = 0; i < n_train; ++i) order[i] = i;
    seeded_shuffle(order, derive_seed(config.seed, "epoch-order", static_cast<std::uint64_t>(epoch)));
    NormalSampler rng(derive_seed(config.seed, "epoch-noise", static_cast<std::uint64_t>(epoch)));
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < n_train; begin += config.batch_size) {
      const std::size_t end = std::min(n_train, begin + config.batch_size);
      const std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                          order.begin() + static_cast<std::ptrdiff_t>(end));
      const cvae::Batch batch =
          make_batch(windows, rows, gather_targets(windows, rows, originals, model_config), rng, model_config);
      cvae::LossAndGrad lg;
      try {
        lg = cvae::loss_and_gradients(model, batch, config.threads);
      } catch (const NumericError&) {
        throw NumericError("training diverged: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(begin / config.batch_size) + " (lr " + std::to_string(lr) + ")");
      }
      loss_sum += lg.loss * static_cast<double>(rows.size());
      if (config.optimizer == Optimizer::adam) {
        numeric::adam_step(model.parameters(), lg.gradients, opt, lr);
      } else {
        numeric::sgd_step(model.parameters(), lg.gradients, opt, lr);
      }
    }
    EpochLog entry{epoch, lr, loss_sum / static_cast<double>(n_train), cvae::batch_loss_value(model, val_batch),
                   cvae::prediction_mse(model, val_batch)};
    if (!std::isfinite(entry.validation_loss)) {
      throw NumericError("validation loss is not finite at epoch " + std::to_string(epoch));
    }
    if (epoch == 0 || entry.validation_loss < best_val) {
      best_val = entry.validation_loss;
      result.best = model;
      result.best_epoch = epoch;
    }
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  result.optimizer = opt;
  return result;
}

}  // namespace tdg::pipeline
