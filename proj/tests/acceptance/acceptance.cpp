// Acceptance run: one PASS/FAIL line per criterion; exit 0 only if all pass.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stats_reference.hpp"
#include "tdg/binary_io.hpp"
#include "tdg/cli/app.hpp"
#include "tdg/cvae/gradcheck_suite.hpp"
#include "tdg/cvae/model.hpp"
#include "tdg/eval/metrics.hpp"
#include "tdg/eval/stats.hpp"
#include "tdg/numeric/optim.hpp"
#include "tdg/pipeline/collect.hpp"
#include "tdg/pipeline/model_io.hpp"
#include "tdg/pipeline/rollout.hpp"
#include "tdg/pipeline/training.hpp"
#include "tdg/preprocess/dataset.hpp"
#include "tdg/preprocess/vectors.hpp"
#include "tdg/random.hpp"
#include "tdg/sim/episode_log.hpp"
#include "tdg/sim/lidar.hpp"
#include "tdg/sim/terrain.hpp"

namespace fs = std::filesystem;
using namespace tdg;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int invoke(std::vector<std::string> args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

// Root seed of the default configuration; the default terrain is the one
// `gen-terrain` produces with it.
constexpr std::uint64_t kRoot = 1;

sim::Terrain default_terrain() { return sim::Terrain::generate(derive_seed(kRoot, "terrain", 0), {}); }

Verdict gradient_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cases = cvae::run_gradient_suite(kRoot);
  const double elapsed = seconds_since(t0);
  double worst = 0.0;
  int full = 0;
  bool ok = true;
  for (const auto& c : cases) {
    ok = ok && c.result.checked > 0 && c.result.max_relative_error < 1e-4;
    worst = std::max(worst, c.result.max_relative_error);
    if (c.name.starts_with("cvae loss")) ++full;
  }
  ok = ok && full >= 4 && elapsed < 60.0;
  return {ok, fmt("%zu cases (%d full-loss), max rel err %.3g, %.2f s", cases.size(), full, worst, elapsed)};
}

Verdict preprocessing_conformance() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(derive_seed(kRoot, "acceptance-preprocess", 0));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<sim::Terrain> terrains;
  for (int i = 0; i < 4; ++i) terrains.push_back(sim::Terrain::generate(derive_seed(kRoot, "acceptance-terrain", i), {}));
  std::size_t out_of_range = 0, free_violations = 0, half_violations = 0, boundary_violations = 0, ticks = 0;
  std::size_t free_checked = 0;
  for (int k = 0; k < 10000; ++k, ++ticks) {
    const sim::Terrain& t = terrains[static_cast<std::size_t>(k) % terrains.size()];
    sim::TimestepRecord rec;
    const double arc = u(gen) * t.length();
    const sim::Vec2 tan = t.tangent_at(arc);
    rec.vehicle_state.position =
        t.point_at(arc) + ((2.0 * u(gen) - 1.0) * (t.half_width_at(arc) - 1.0)) * sim::left_normal(tan);
    rec.vehicle_state.yaw = sim::wrap_degrees(sim::yaw_of(tan) + 90.0 * (u(gen) - 0.5));
    rec.vehicle_state.roll = 8.0 * (u(gen) - 0.5);
    rec.vehicle_state.pitch = 8.0 * (u(gen) - 0.5);
    rec.vehicle_state.speed = 40.0 * u(gen);
    rec.raw_control = {4.0 * u(gen) - 2.0, 2.0 * u(gen) - 0.5, 2.0 * u(gen) - 0.5};
    rec.lidar_points = sim::lidar_scan(t, rec.vehicle_state);

    const preprocess::StepVector v = preprocess::preprocess_tick(rec);
    for (double x : v) out_of_range += (x >= 0.0 && x <= 1.0) ? 0 : 1;

    // Azimuth buckets with no obstacle inside 50 m read exactly 1.0.
    const auto obstacles = preprocess::detect_obstacles(preprocess::to_cylindrical(rec.lidar_points));
    std::set<std::size_t> occupied;
    for (const auto& p : obstacles) {
      if (p.azimuth_deg < 180.0 && p.range < preprocess::kMaxObstacleRange) {
        occupied.insert(static_cast<std::size_t>(p.azimuth_deg));
      }
    }
    for (std::size_t a = 0; a < preprocess::kEnvironmentDim; ++a) {
      const bool free = !occupied.count(a);
      free_checked += free ? 1 : 0;
      if (free != (v[a] == 1.0)) ++free_violations;
    }

    // A lone obstacle at 25 m reads exactly 0.5 in its bucket.
    const double az = std::floor(u(gen) * 180.0) + u(gen) * 0.999;
    const auto env = preprocess::build_environment_vector({{az, 25.0, 4.0 * u(gen) - 2.0}});
    for (std::size_t a = 0; a < env.size(); ++a) {
      if (env[a] != (a == static_cast<std::size_t>(az) ? 0.5 : 1.0)) ++half_violations;
    }

    // Exactly 45 degrees is not steeper than the threshold; a hair more is.
    const double r0 = 1.0 + std::floor(u(gen) * 320.0) / 8.0;
    const double rise = 0.125 + std::floor(u(gen) * 40.0) / 8.0;
    const double h0 = std::floor(u(gen) * 32.0) / 8.0 - 2.0;
    const double bucket = std::floor(az) + 0.5;
    if (!preprocess::detect_obstacles({{bucket, r0, h0}, {bucket, r0 + rise, h0 + rise}}).empty()) ++boundary_violations;
    if (preprocess::detect_obstacles({{bucket, r0, h0}, {bucket, r0 + rise, h0 + rise * 1.001}}).size() != 1) {
      ++boundary_violations;
    }
  }
  const double elapsed = seconds_since(t0);
  const bool ok = out_of_range == 0 && free_violations == 0 && half_violations == 0 && boundary_violations == 0 &&
                  elapsed < 30.0;
  return {ok, fmt("%zu ticks, %zu out of [0,1], %zu free-azimuth mismatches (of %zu free), %zu 25 m mismatches, "
                  "%zu 45-degree boundary mismatches, %.1f s",
                  ticks, out_of_range, free_violations, free_checked, half_violations, boundary_violations, elapsed)};
}

Verdict statistics_oracles() {
  const auto cases = reference::fixed_cases();
  double worst = 0.0;
  for (const auto& c : cases) {
    const auto ref = reference::ref_pair(c.a, c.b);
    const auto fit = eval::linear_regression(c.a, c.b);
    const auto w = eval::welch_t_test(c.a, c.b);
    const auto rw = reference::ref_welch(c.a, c.b);
    for (double d : {eval::pearson_r(c.a, c.b) - ref.r, fit.slope - ref.slope, fit.intercept - ref.intercept,
                     w.t - rw.t, w.df - rw.df, w.p - rw.p}) {
      worst = std::max(worst, std::abs(d));
    }
  }
  double cdf_worst = 0.0;
  for (int df = 1; df <= 30; ++df) cdf_worst = std::max(cdf_worst, std::abs(eval::student_t_cdf(0.0, df) - 0.5));
  const bool ok = cases.size() >= 20 && worst <= 1e-6 && cdf_worst <= 1e-12;
  return {ok, fmt("%zu cases, max abs deviation %.3g; t CDF(0) max |dev| %.3g over df 1..30", cases.size(), worst,
                  cdf_worst)};
}

struct ImitationModel {
  std::string checkpoint;
};

Verdict imitation_floor(const fs::path& work, std::optional<ImitationModel>& model_out) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<sim::Episode> eps;
  pipeline::CollectConfig cc;
  cc.runs_per_profile = 1;
  for (int i = 0; i < 8; ++i) {
    const auto t = sim::Terrain::generate(derive_seed(kRoot, "imitation-terrain", i), {});
    const auto e = pipeline::collect(t, {drivers::oracle_profile()}, derive_seed(kRoot, "imitation-collect", i), cc);
    eps.insert(eps.end(), e.begin(), e.end());
  }
  const auto ds = preprocess::build_dataset(eps, preprocess::TargetSlice::control);
  const auto mc = cvae::CvaeConfig::for_role(cvae::Role::inverse, 64, 64);
  pipeline::TrainConfig tc;
  tc.epochs = 40;
  tc.max_windows = 10000;
  tc.ground_truth_perception = true;
  tc.seed = derive_seed(kRoot, "imitation-train", 0);
  const auto res = pipeline::train(ds, mc, tc);
  const double mse = res.log.at(static_cast<std::size_t>(res.best_epoch)).validation_mse;
  const std::string ckpt = (work / "imitation" / "inverse.ckpt").string();
  fs::create_directories(work / "imitation");
  pipeline::save_model(ckpt, res.best, {"acceptance", res.best_epoch, tc.seed});
  model_out = ImitationModel{ckpt};

  const sim::Terrain terrain = default_terrain();
  drivers::ScriptedDriver oracle(drivers::oracle_profile());
  const auto oracle_ep = sim::run_episode(terrain, oracle, derive_seed(kRoot, "imitation-oracle", 0), 3000);
  const double oracle_dct = eval::compute_metrics(oracle_ep, terrain).dct;
  pipeline::RolloutConfig rc;
  rc.runs = 10;
  const auto runs = pipeline::rollout_batch(res.best, terrain, derive_seed(kRoot, "imitation-rollout", 0), rc);
  int good = 0;
  double worst_dct = 0.0;
  for (const auto& e : runs) {
    const double dct = eval::compute_metrics(e, terrain).dct;
    worst_dct = std::max(worst_dct, dct);
    if (e.completed && e.collision_count == 0 && dct <= 2.0 * oracle_dct) ++good;
  }
  const double elapsed = seconds_since(t0);
  const bool ok = oracle_ep.completed && mse < 1e-3 && good >= 8 && elapsed < 1800.0;
  return {ok, fmt("%zu training windows (%zu used), held-out control MSE %.3g; %d/10 clean completions on the "
                  "unseen %.0f m terrain, slowest DCT %.1f s vs oracle %.1f s; %.0f s",
                  ds.size(), res.train_windows + res.validation_windows, mse, good, terrain.length(), worst_dct,
                  oracle_dct, elapsed)};
}

std::size_t data_rows(const std::string& csv, std::size_t* missing = nullptr) {
  std::istringstream in(csv);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.starts_with("metric,")) continue;
    ++n;
    if (missing && line.find("missing") != std::string::npos) ++*missing;
  }
  return n;
}

Verdict pipeline_fidelity(const fs::path& work, const std::optional<ImitationModel>& model) {
  if (!model) return {false, "no inverse model (imitation criterion did not produce one)"};
  const fs::path d = work / "fidelity";
  const std::string terrain = (d / "t" / "terrain.json").string();
  std::string err;
  if (invoke({"--out", (d / "t").string(), "gen-terrain"}, &err) != 0) return {false, "gen-terrain: " + err};
  if (invoke({"--out", (d / "c").string(), "collect", "--terrain", terrain, "--group", "inexperienced"}, &err) != 0) {
    return {false, "collect: " + err};
  }
  if (invoke({"--out", (d / "r").string(), "rollout", "--model", model->checkpoint, "--terrain", terrain}, &err) != 0) {
    return {false, "rollout: " + err};
  }
  if (invoke({"--out", (d / "e").string(), "evaluate", "--drivers", (d / "c" / "episodes").string(),
              "--model-episodes", (d / "r" / "episodes").string(), "--terrain", terrain},
             &err) != 0) {
    return {false, "evaluate: " + err};
  }

  const sim::Terrain t = sim::deserialize_terrain(read_file(terrain));
  auto load_states = [](const fs::path& dir) {
    std::vector<sim::Episode> eps;
    for (const auto& e : fs::directory_iterator(dir)) {
      eps.push_back(sim::load_episode(e.path().string()));
      for (auto& r : eps.back().records) std::vector<sim::Vec3>().swap(r.lidar_points);
    }
    return eps;
  };
  std::vector<sim::Episode> drivers = load_states(d / "c" / "episodes");
  const std::vector<sim::Episode> model_eps = load_states(d / "r" / "episodes");
  std::sort(drivers.begin(), drivers.end(), [](const auto& a, const auto& b) {
    return std::tie(a.driver_id, a.seed) < std::tie(b.driver_id, b.seed);
  });

  // Disjoint halves: the first and the second run of every profile.
  std::map<std::string, std::vector<sim::Episode>> by_profile;
  for (const auto& e : drivers) by_profile[e.driver_id].push_back(e);
  std::vector<sim::Episode> half_a, half_b;
  bool two_each = true;
  for (auto& [name, runs] : by_profile) {
    if (runs.size() != 2) {
      two_each = false;
      continue;
    }
    half_a.push_back(runs[0]);
    half_b.push_back(runs[1]);
  }
  const auto sa = eval::section_metrics(half_a, t);
  const auto sb = eval::section_metrics(half_b, t);
  std::vector<double> xa, xb;
  for (std::size_t s = 0; s < sa.size(); ++s) {
    if (sa[s] && sb[s]) {
      xa.push_back(sa[s]->dct);
      xb.push_back(sb[s]->dct);
    }
  }
  double half_r = std::nan("");
  try {
    half_r = eval::pearson_r(xa, xb);
  } catch (const Error&) {
  }

  std::size_t missing = 0;
  const std::size_t section_rows = data_rows(read_file((d / "e" / "sections.csv").string()), &missing);
  const std::size_t corr_rows = data_rows(read_file((d / "e" / "correlation.csv").string()));
  const std::size_t test_rows = data_rows(read_file((d / "e" / "ttest.csv").string()));
  const auto report = eval::compare_populations(drivers, model_eps, t);
  const auto& dct = report.correlations.at(3);
  int completed = 0;
  for (const auto& e : model_eps) completed += e.completed ? 1 : 0;

  const bool ok = drivers.size() == 28 && by_profile.size() == 14 && two_each && model_eps.size() == 28 &&
                  t.section_count() == 9 && section_rows == 36 && corr_rows == 4 && test_rows == 4 &&
                  xa.size() == 9 && half_r >= 0.7;
  return {ok, fmt("%zu driver runs / %zu profiles, %zu rollouts (%d completed); report %zu section rows "
                  "(%zu with missing cells), %zu correlations, %zu t-tests; half-vs-half DCT r = %.4f over %zu sections; "
                  "drivers-vs-model DCT r = %s",
                  drivers.size(), by_profile.size(), model_eps.size(), completed, section_rows, missing, corr_rows,
                  test_rows, half_r, xa.size(), dct.r ? fmt("%.3f", *dct.r).c_str() : "undefined")};
}

Verdict learning_rate_schedule() {
  const auto t = sim::Terrain::generate(derive_seed(kRoot, "lr-terrain", 0), {});
  pipeline::CollectConfig cc;
  cc.runs_per_profile = 1;
  cc.tick_limit = 60;
  const auto eps = pipeline::collect(t, {drivers::oracle_profile()}, 1, cc);
  const auto ds = preprocess::build_dataset(eps, preprocess::TargetSlice::control);
  pipeline::TrainConfig tc;
  tc.epochs = 900;
  tc.max_windows = 6;
  tc.batch_size = 8;
  tc.ground_truth_perception = true;
  const auto res = pipeline::train(ds, cvae::CvaeConfig::for_role(cvae::Role::inverse, 2, 2), tc);
  if (res.log.size() != 900) return {false, fmt("%zu epochs logged", res.log.size())};
  const double a = res.log[0].lr, b = res.log[300].lr, c = res.log[899].lr;
  const bool ok = a == 1e-3 && b == 1e-4 && c == 1e-5 && res.log[299].lr == 1e-3 && res.log[599].lr == 1e-4 &&
                  res.log[600].lr == 1e-5;
  return {ok, fmt("lr(0)=%g lr(300)=%g lr(899)=%g, compared with ==", a, b, c)};
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().filename() != "manifest.json") {
      out[fs::relative(e.path(), root).string()] = fingerprint(read_file(e.path().string()));
    }
  }
  return out;
}

std::string smoke_chain(const fs::path& cfg, const fs::path& root) {
  const std::string o = root.string();
  const std::vector<std::vector<std::string>> steps = {
      {"gen-terrain", "--out", o + "/t"},
      {"collect", "--terrain", o + "/t/terrain.json", "--group", "inexperienced", "--out", o + "/c"},
      {"build-dataset", "--episodes", o + "/c/episodes", "--role", "forward", "--out", o + "/df"},
      {"build-dataset", "--episodes", o + "/c/episodes", "--role", "inverse", "--out", o + "/di"},
      {"train", "--role", "forward", "--dataset", o + "/df/dataset.tdg", "--out", o + "/mf"},
      {"train", "--role", "inverse", "--dataset", o + "/di/dataset.tdg", "--forward", o + "/mf/forward.ckpt", "--out",
       o + "/mi"},
      {"rollout", "--model", o + "/mi/inverse.ckpt", "--terrain", o + "/t/terrain.json", "--out", o + "/r"},
      {"evaluate", "--drivers", o + "/c/episodes", "--model-episodes", o + "/r/episodes", "--terrain",
       o + "/t/terrain.json", "--out", o + "/e"},
  };
  for (auto args : steps) {
    args.insert(args.begin(), {"--config", cfg.string()});
    std::string err;
    if (invoke(args, &err) != 0) return args[2] + ": " + err;
  }
  return "";
}

Verdict determinism(const fs::path& work) {
  const fs::path d = work / "determinism";
  fs::create_directories(d);
  write_file((d / "tiny.json").string(), R"({
  "seed": 7,
  "terrain": {"length": 200},
  "collect": {"runs_per_profile": 1, "tick_limit": 250},
  "model": {"linear_width": 8, "hidden": 8},
  "training": {"epochs": 3, "batch_size": 16, "max_windows": 120},
  "rollout": {"runs": 3, "tick_limit": 200}
})");
  for (const char* run : {"a", "b"}) {
    const std::string e = smoke_chain(d / "tiny.json", d / run);
    if (!e.empty()) return {false, std::string("smoke chain ") + run + " failed at " + e};
  }
  const auto a = tree(d / "a"), b = tree(d / "b");
  std::map<std::string, int> kinds;
  for (const auto& [f, fp] : a) {
    const auto ext = fs::path(f).extension().string();
    ++kinds[ext];
  }
  std::size_t differing = 0;
  for (const auto& [f, fp] : a) differing += (b.count(f) && b.at(f) == fp) ? 0 : 1;
  const bool ok = a.size() == b.size() && differing == 0 && kinds[".tdg"] == 2 && kinds[".ckpt"] == 2 &&
                  kinds[".log"] > 0 && kinds[".csv"] >= 4;
  return {ok, fmt("%zu files compared (%d datasets, %d checkpoints, %d episode logs, %d CSVs), %zu differ", a.size(),
                  kinds[".tdg"], kinds[".ckpt"], kinds[".log"], kinds[".csv"], differing)};
}

Verdict loss_restriction() {
  std::size_t checks = 0, changed_history = 0, unchanged_current = 0;
  std::mt19937_64 gen(derive_seed(kRoot, "acceptance-loss", 0));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto role : {cvae::Role::forward, cvae::Role::inverse}) {
    for (auto mode : {cvae::Mode::noise_encoder, cvae::Mode::standard_cvae}) {
      const auto c = cvae::toy_config(role, mode);
      for (int rep = 0; rep < 25; ++rep) {
        const auto m = cvae::CvaeModel::initialize(c, gen());
        std::vector<double> w(c.window * c.step_dim);
        for (double& x : w) x = u(gen);
        NormalSampler ns(gen());
        std::vector<double> noise(c.generated_dim), eps(c.generated_dim);
        for (double& x : noise) x = ns();
        for (double& x : eps) x = ns();
        cvae::Tensor targets({c.window, c.generated_dim}, 0.0);
        for (std::size_t k = 0; k < targets.size(); ++k) targets[k] = u(gen);
        const double base = cvae::loss(m, w, targets, noise, eps);
        for (std::size_t k = 0; k + c.generated_dim < targets.size(); ++k) targets[k] = u(gen);
        if (cvae::loss(m, w, targets, noise, eps) != base) ++changed_history;
        targets[targets.size() - 1] = 1.0 - targets[targets.size() - 1];
        if (cvae::loss(m, w, targets, noise, eps) == base) ++unchanged_current;
        ++checks;
      }
    }
  }
  return {changed_history == 0 && unchanged_current == 0,
          fmt("%zu models over both roles and modes: %zu losses moved when only steps t-9..t-1 changed; "
              "%zu ignored a change at step t",
              checks, changed_history, unchanged_current)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> only;
  std::string work_dir = (fs::temp_directory_path() / "tdg_acceptance").string();
  app.add_option("--only", only, "Criteria to run (default: all)")->delimiter(',')->check(CLI::Range(1, 8));
  app.add_option("--work", work_dir, "Scratch directory");
  CLI11_PARSE(app, argc, argv);
  const fs::path work(work_dir);
  fs::remove_all(work);
  fs::create_directories(work);

  std::optional<ImitationModel> model;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"gradient fidelity", gradient_fidelity},
      {"preprocessing conformance", preprocessing_conformance},
      {"statistics oracles", statistics_oracles},
      {"imitation floor", [&] { return imitation_floor(work, model); }},
      {"pipeline fidelity", [&] { return pipeline_fidelity(work, model); }},
      {"learning-rate schedule", learning_rate_schedule},
      {"determinism", [&] { return determinism(work); }},
      {"loss restriction", loss_restriction},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), n) == only.end()) continue;
    if (n == 5 && !model && (only.empty() || std::find(only.begin(), only.end(), 4) == only.end())) {
      std::optional<ImitationModel> m;
      imitation_floor(work, m);
      model = m;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::printf("CRITERION %d %s [%s, %.1f s]: %s\n", n, v.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                seconds_since(t0), v.detail.c_str());
    std::fflush(stdout);
    failures += v.pass ? 0 : 1;
  }
  fs::remove_all(work);
  return failures == 0 ? 0 : 1;
}
