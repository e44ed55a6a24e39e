#include "tdg/pipeline/rollout.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "tdg/error.hpp"
#include "tdg/random.hpp"

namespace tdg::pipeline {

using preprocess::kControlDim;
using preprocess::kPerceptionDim;
using preprocess::kStepDim;
using preprocess::kWindowLength;
using preprocess::StepVector;

void RolloutConfig::validate() const {
  if (tick_limit <= 100) throw ConfigError("rollout.tick_limit must be > 100");
  if (runs <= 0) throw ConfigError("rollout.runs must be > 0");
  if (warmup_ticks < static_cast<int>(kWindowLength)) throw ConfigError("rollout.warmup_ticks must be >= 10");
}

sim::RawControl denormalize_control(double steer_n, double pedal_n) {
  const double steer = 2.0 * steer_n - 1.0;
  const double pedal = 2.0 * pedal_n - 1.0;
  return sim::RawControl{steer, std::max(pedal, 0.0), std::max(-pedal, 0.0)}.clamped();
}

namespace {

// Float32 rounding, matching what training windows went through on disk.
void quantize(StepVector& s) {
  for (double& v : s) v = static_cast<float>(v);
}

std::vector<double> flatten(const std::deque<StepVector>& history, const StepVector& current) {
  std::vector<double> w;
  w.reserve(kWindowLength * kStepDim);
  for (std::size_t k = history.size() + 1 - kWindowLength; k < history.size(); ++k) {
    w.insert(w.end(), history[k].begin(), history[k].end());
  }
  w.insert(w.end(), current.begin(), current.end());
  return w;
}

void check_model(const cvae::CvaeModel& m, cvae::Role role) {
  const auto& c = m.config();
  if (c.role != role) throw UsageError("rollout: expected a " + cvae::to_string(role) + " model");
  if (c.step_dim != kStepDim || c.window != kWindowLength) {
    throw DimensionError("rollout: model window layout does not match preprocessed steps");
  }
}

}  // namespace

ModelDriver::ModelDriver(const cvae::CvaeModel& inverse, RolloutConfig config, const cvae::CvaeModel* forward,
                         drivers::DriverProfile warmup)
    : inverse_(inverse), forward_(forward), config_(config), warmup_(std::move(warmup), config.sim.vehicle) {
  config_.validate();
  check_model(inverse_, cvae::Role::inverse);
  if (config_.hallucinated_perception) {
    if (!forward_) throw UsageError("hallucinated_perception needs a forward model");
    check_model(*forward_, cvae::Role::forward);
  }
}

void ModelDriver::begin_episode(const sim::Terrain& terrain, std::uint64_t seed) {
  seed_ = seed;
  history_.clear();
  warmup_.begin_episode(terrain, seed);
}

sim::RawControl ModelDriver::act(const sim::Observation& obs, const sim::Terrain& terrain) {
  sim::TimestepRecord rec;
  rec.vehicle_state = obs.state;
  rec.lidar_points = obs.lidar_points;
  StepVector current = preprocess::preprocess_tick(rec);

  sim::RawControl control;
  if (obs.tick < config_.warmup_ticks || history_.size() + 1 < kWindowLength) {
    control = warmup_.act(obs, terrain);
  } else {
    current[kPerceptionDim] = 0.0;
    current[kPerceptionDim + 1] = 0.0;
    if (config_.hallucinated_perception) {
      // The current control is unknown here; the previous one stands in.
      StepVector proxy = current;
      proxy[kPerceptionDim] = history_.back()[kPerceptionDim];
      proxy[kPerceptionDim + 1] = history_.back()[kPerceptionDim + 1];
      NormalSampler frng(derive_seed(seed_, "rollout-forward", static_cast<std::uint64_t>(obs.tick)));
      const auto p = cvae::generate(*forward_, flatten(history_, proxy), frng);
      std::copy(p.data(), p.data() + kPerceptionDim, current.begin());
    }
    quantize(current);
    NormalSampler rng(derive_seed(seed_, "rollout-inverse", static_cast<std::uint64_t>(obs.tick)));
    const auto g = cvae::generate(inverse_, flatten(history_, current), rng);
    if (!g.all_finite()) {
      throw NumericError("inverse model produced a non-finite control at tick " + std::to_string(obs.tick));
    }
    control = denormalize_control(g[0], g[1]);
  }
  const preprocess::ControlVector cn = preprocess::normalize_control(control);
  current[kPerceptionDim] = cn.steer_n;
  current[kPerceptionDim + 1] = cn.pedal_n;
  quantize(current);
  history_.push_back(current);
  if (history_.size() > kWindowLength) history_.pop_front();
  return control;
}

sim::Episode rollout(const cvae::CvaeModel& inverse, const sim::Terrain& terrain, std::uint64_t seed,
                     const RolloutConfig& config, const cvae::CvaeModel* forward) {
  ModelDriver driver(inverse, config, forward);
  return sim::run_episode(terrain, driver, seed, config.tick_limit, config.sim);
}

std::vector<sim::Episode> rollout_batch(const cvae::CvaeModel& inverse, const sim::Terrain& terrain,
                                        std::uint64_t seed, const RolloutConfig& config,
                                        const cvae::CvaeModel* forward) {
  config.validate();
  const std::size_t runs = static_cast<std::size_t>(config.runs);
  std::vector<sim::Episode> out(runs);
  std::vector<std::exception_ptr> errors(runs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < runs;) {
      try {
        out[i] = rollout(inverse, terrain, derive_seed(seed, "rollout-run", i), config, forward);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(runs)));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace tdg::pipeline
