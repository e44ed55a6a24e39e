#include "tdg/cli/app.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <ostream>

#include "tdg/binary_io.hpp"
#include "tdg/cli/config.hpp"
#include "tdg/cli/manifest.hpp"
#include "tdg/cvae/gradcheck_suite.hpp"
#include "tdg/error.hpp"
#include "tdg/eval/metrics.hpp"
#include "tdg/pipeline/collect.hpp"
#include "tdg/pipeline/model_io.hpp"
#include "tdg/pipeline/rollout.hpp"
#include "tdg/pipeline/training.hpp"
#include "tdg/preprocess/dataset.hpp"
#include "tdg/random.hpp"
#include "tdg/sim/episode_log.hpp"
#include "tdg/sim/terrain.hpp"

namespace tdg::cli {

namespace fs = std::filesystem;

std::string error_line(const std::string& kind, const std::string& message) {
  nlohmann::ordered_json j;
  j["status"] = "error";
  j["kind"] = kind;
  j["message"] = message;
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

unsigned resolve_threads(int flag_value, const char* env_value) {
  if (flag_value != 0) {
    if (flag_value < 0) throw UsageError("--threads must be >= 1");
    return static_cast<unsigned>(flag_value);
  }
  if (env_value == nullptr || *env_value == '\0') return 1;
  const std::string s(env_value);
  unsigned long v = 0;
  std::size_t used = 0;
  try {
    v = std::stoul(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || v == 0 || v > 1024 || s.front() == '-') {
    throw UsageError("TDG_THREADS must be an integer in [1, 1024], got '" + s + "'");
  }
  return static_cast<unsigned>(v);
}

namespace {

constexpr double kGradcheckTolerance = 1e-4;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 0;
};

struct Options {
  std::string terrain;
  std::string group = "all";
  std::string episodes;
  std::string role;
  std::string dataset;
  std::string forward;
  std::string model;
  std::string drivers;
  std::string model_episodes;
};

// Per-invocation context: resolved config, output directory and the manifest
// under construction.
class Run {
 public:
  Run(std::string command, std::vector<std::string> args, const Globals& g, unsigned thread_cap, std::ostream& out)
      : threads(thread_cap), out_(out), start_(std::chrono::steady_clock::now()) {
    manifest_.command = std::move(command);
    manifest_.arguments = std::move(args);
    manifest_.versions = format_versions();
    if (!g.config_path.empty()) {
      config = load_config(g.config_path);
      add_input(g.config_path);
    }
    if (g.seed) config.seed = *g.seed;
    config.collect.threads = config.rollout.threads = config.training.threads = threads;
    manifest_.config_hash = fingerprint(serialize_config(config));
    manifest_.seeds["root"] = config.seed;
    out_dir_ = g.out;
    if (!out_dir_.empty()) fs::create_directories(out_dir_);
  }

  unsigned threads = 1;
  Config config;

  bool has_out() const { return !out_dir_.empty(); }

  std::uint64_t seed(const std::string& tag) {
    const std::uint64_t s = derive_seed(config.seed, tag, 0);
    manifest_.seeds[tag] = s;
    return s;
  }

  void add_input(const std::string& path) {
    if (fs::is_directory(path)) {
      for (const auto& f : list_files(path, "")) manifest_.inputs[f] = fingerprint(read_file(f));
    } else {
      manifest_.inputs[path] = fingerprint(read_file(path));
    }
  }

  std::string read_input(const std::string& path) {
    std::string bytes = read_file(path);
    manifest_.inputs[path] = fingerprint(bytes);
    return bytes;
  }

  void write(const std::string& relative, std::string_view bytes) {
    const fs::path p = fs::path(out_dir_) / relative;
    fs::create_directories(p.parent_path());
    write_file(p.string(), bytes);
    manifest_.outputs[relative] = fingerprint(bytes);
  }

  // Records a file some library call already wrote under the output dir.
  void record(const std::string& relative) {
    manifest_.outputs[relative] = fingerprint(read_file((fs::path(out_dir_) / relative).string()));
  }

  std::string out_path(const std::string& relative) const { return (fs::path(out_dir_) / relative).string(); }

  void finish() {
    if (!has_out()) return;
    manifest_.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_file(out_path("manifest.json"), serialize_manifest(manifest_));
  }

  std::ostream& log() { return out_; }

  static std::vector<std::string> list_files(const std::string& dir, const std::string& extension) {
    if (!fs::is_directory(dir)) throw UsageError("not a directory: " + dir);
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (!e.is_regular_file()) continue;
      if (!extension.empty() && e.path().extension() != extension) continue;
      files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    return files;
  }

 private:
  std::ostream& out_;
  std::chrono::steady_clock::time_point start_;
  RunManifest manifest_;
  std::string out_dir_;
};

std::string episode_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "episodes/%04zu.log", i);
  return buf;
}

sim::Terrain load_terrain_input(Run& run, const std::string& path) {
  return sim::deserialize_terrain(run.read_input(path));
}

// Metrics only need vehicle states; point clouds are dropped as each log is
// read so a full population fits in memory.
std::vector<sim::Episode> load_episode_dir(Run& run, const std::string& dir, bool keep_lidar) {
  std::vector<sim::Episode> eps;
  for (const auto& f : Run::list_files(dir, ".log")) {
    eps.push_back(sim::deserialize_episode(run.read_input(f)));
    if (!keep_lidar) {
      for (auto& r : eps.back().records) std::vector<sim::Vec3>().swap(r.lidar_points);
    }
  }
  if (eps.empty()) throw UsageError("no episode logs (*.log) in " + dir);
  return eps;
}

void write_episodes(Run& run, const std::vector<sim::Episode>& eps) {
  for (std::size_t i = 0; i < eps.size(); ++i) run.write(episode_name(i), sim::serialize_episode(eps[i]));
}

std::string summary(const std::vector<sim::Episode>& eps) {
  int completed = 0, collisions = 0;
  for (const auto& e : eps) {
    completed += e.completed ? 1 : 0;
    collisions += e.collision_count;
  }
  return std::to_string(eps.size()) + " episodes, " + std::to_string(completed) + " completed, " +
         std::to_string(collisions) + " collisions";
}

int cmd_gen_terrain(Run& run) {
  const sim::Terrain t = sim::Terrain::generate(run.seed("terrain"), run.config.terrain);
  run.write("terrain.json", sim::serialize_terrain(t));
  run.log() << "terrain " << t.id() << " written\n";
  return kExitOk;
}

int cmd_collect(Run& run, const Options& o) {
  const sim::Terrain terrain = load_terrain_input(run, o.terrain);
  std::vector<drivers::DriverProfile> profiles;
  if (o.group == "all") {
    profiles = run.config.drivers;
  } else if (o.group == "oracle") {
    profiles = {drivers::oracle_profile()};
  } else {
    profiles = drivers::select_group(run.config.drivers, drivers::group_from_string(o.group));
  }
  if (profiles.empty()) throw UsageError("no driver profiles in group " + o.group);
  const auto eps = pipeline::collect(terrain, profiles, run.seed("collect"), run.config.collect);
  write_episodes(run, eps);
  run.log() << "collect: " << summary(eps) << "\n";
  return kExitOk;
}

preprocess::TargetSlice slice_for(cvae::Role r) {
  return r == cvae::Role::forward ? preprocess::TargetSlice::perception : preprocess::TargetSlice::control;
}

int cmd_build_dataset(Run& run, const Options& o) {
  const cvae::Role role = cvae::role_from_string(o.role);
  const auto eps = load_episode_dir(run, o.episodes, true);
  preprocess::BuildStats stats;
  const auto d = preprocess::build_dataset(eps, slice_for(role), run.threads, &stats);
  run.write("dataset.tdg", preprocess::serialize_dataset(d));
  run.log() << "build-dataset: " << d.size() << " windows from " << stats.episodes_used << " episodes ("
            << stats.episodes_skipped << " too short)\n";
  return kExitOk;
}

int cmd_train(Run& run, const Options& o) {
  const cvae::Role role = cvae::role_from_string(o.role);
  const std::string bytes = run.read_input(o.dataset);
  const preprocess::Dataset d = preprocess::deserialize_dataset(bytes);
  if (d.target != slice_for(role)) {
    throw UsageError("dataset targets " + preprocess::to_string(d.target) + " but --role is " + o.role);
  }
  std::optional<pipeline::SavedModel> forward;
  if (!o.forward.empty()) {
    if (role != cvae::Role::inverse) throw UsageError("--forward only applies to --role inverse");
    run.add_input(o.forward);
    run.add_input(pipeline::sidecar_path(o.forward));
    forward = pipeline::load_model(o.forward, cvae::Role::forward);
  }
  pipeline::TrainConfig tc = run.config.training;
  if (role == cvae::Role::inverse && !forward && !tc.ground_truth_perception) {
    throw UsageError("inverse training needs --forward or training.ground_truth_perception = true");
  }
  tc.seed = run.seed("train-" + o.role);
  std::string log_csv = "epoch,lr,train_loss,validation_loss,validation_mse\n";
  const auto result = pipeline::train(d, run.config.model.for_role(role), tc, forward ? &forward->model : nullptr);
  for (const auto& e : result.log) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", e.epoch, e.lr, e.train_loss, e.validation_loss,
                  e.validation_mse);
    log_csv += buf;
  }
  const std::string ckpt = o.role + ".ckpt";
  pipeline::save_model(run.out_path(ckpt), result.best, {fingerprint(bytes), result.best_epoch, tc.seed},
                       &result.optimizer);
  run.record(ckpt);
  run.record(fs::path(pipeline::sidecar_path(ckpt)).string());
  run.write("training_log.csv", log_csv);
  const auto& best = result.log.at(static_cast<std::size_t>(result.best_epoch));
  run.log() << "train: " << result.train_windows << " train / " << result.validation_windows
            << " validation windows, best epoch " << result.best_epoch << " validation mse " << best.validation_mse
            << "\n";
  return kExitOk;
}

int cmd_rollout(Run& run, const Options& o) {
  const sim::Terrain terrain = load_terrain_input(run, o.terrain);
  run.add_input(o.model);
  run.add_input(pipeline::sidecar_path(o.model));
  const auto inverse = pipeline::load_model(o.model, cvae::Role::inverse);
  std::optional<pipeline::SavedModel> forward;
  if (!o.forward.empty()) {
    run.add_input(o.forward);
    run.add_input(pipeline::sidecar_path(o.forward));
    forward = pipeline::load_model(o.forward, cvae::Role::forward);
  }
  if (run.config.rollout.hallucinated_perception && !forward) {
    throw UsageError("rollout.hallucinated_perception needs --forward");
  }
  const auto eps = pipeline::rollout_batch(inverse.model, terrain, run.seed("rollout"), run.config.rollout,
                                           forward ? &forward->model : nullptr);
  write_episodes(run, eps);
  run.log() << "rollout: " << summary(eps) << "\n";
  return kExitOk;
}

void check_terrain(const std::vector<sim::Episode>& eps, const sim::Terrain& terrain, const std::string& dir) {
  for (const auto& e : eps) {
    if (e.terrain_id != terrain.id()) {
      throw UsageError("episode in " + dir + " was driven on " + e.terrain_id + ", not " + terrain.id());
    }
  }
}

int cmd_evaluate(Run& run, const Options& o) {
  const sim::Terrain terrain = load_terrain_input(run, o.terrain);
  const auto a = load_episode_dir(run, o.drivers, false);
  const auto b = load_episode_dir(run, o.model_episodes, false);
  check_terrain(a, terrain, o.drivers);
  check_terrain(b, terrain, o.model_episodes);
  const auto report = eval::compare_populations(a, b, terrain);
  run.write("sections.csv", eval::sections_csv(report));
  run.write("correlation.csv", eval::correlation_csv(report));
  run.write("ttest.csv", eval::ttest_csv(report));
  for (const auto& c : report.correlations) {
    run.log() << c.metric << ": r=" << (c.r ? std::to_string(*c.r) : std::string("undefined")) << "\n";
  }
  return kExitOk;
}

int cmd_gradcheck(Run& run, std::ostream& err) {
  const auto cases = cvae::run_gradient_suite(run.seed("gradcheck"));
  std::string csv = "case,max_relative_error,checked,worst_parameter\n";
  bool ok = true;
  for (const auto& c : cases) {
    const bool pass = c.result.checked > 0 && c.result.max_relative_error < kGradcheckTolerance;
    ok = ok && pass;
    run.log() << (pass ? "ok   " : "FAIL ") << c.name << " max_rel_err=" << c.result.max_relative_error << " ("
              << c.result.checked << " entries)\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", c.result.max_relative_error);
    csv += c.name + "," + buf + "," + std::to_string(c.result.checked) + "," + c.result.worst_parameter + "\n";
  }
  if (run.has_out()) run.write("gradcheck.csv", csv);
  if (!ok) {
    err << error_line("gradcheck", "finite-difference check exceeded tolerance") << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Teleoperated driving data generator: simulate, train and evaluate CVAE driver models", "tdg"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  Globals g;
  Options o;
  app.add_option("--config", g.config_path, "JSON config file; absent keys keep defaults")->check(CLI::ExistingFile);
  app.add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) { g.seed = s; },
                                         "Root seed (overrides config seed)");
  app.add_option("--out", g.out, "Output directory; every file is written below it");
  app.add_option("--threads", g.threads, "Worker thread cap (default: TDG_THREADS, else 1)")
      ->check(CLI::PositiveNumber);

  const auto role_check = CLI::IsMember({"forward", "inverse"});
  auto* gen = app.add_subcommand("gen-terrain", "Generate a terrain -> terrain.json");
  auto* col = app.add_subcommand("collect", "Drive scripted profiles on a terrain -> episodes/");
  col->add_option("--terrain", o.terrain, "Terrain file")->required()->check(CLI::ExistingFile);
  col->add_option("--group", o.group, "Profiles to drive")
      ->check(CLI::IsMember({"experienced", "inexperienced", "oracle", "all"}));
  auto* bld = app.add_subcommand("build-dataset", "Window episode logs into a dataset -> dataset.tdg");
  bld->add_option("--episodes", o.episodes, "Directory of episode logs")->required()->check(CLI::ExistingDirectory);
  bld->add_option("--role", o.role, "Target slice: forward (perception) or inverse (control)")
      ->required()
      ->check(role_check);
  auto* trn = app.add_subcommand("train", "Train a CVAE -> <role>.ckpt, training_log.csv");
  trn->add_option("--role", o.role, "Model role")->required()->check(role_check);
  trn->add_option("--dataset", o.dataset, "Dataset file")->required()->check(CLI::ExistingFile);
  trn->add_option("--forward", o.forward, "Forward checkpoint supplying perception (inverse role)")
      ->check(CLI::ExistingFile);
  auto* rol = app.add_subcommand("rollout", "Drive the terrain with an inverse model -> episodes/");
  rol->add_option("--model", o.model, "Inverse checkpoint")->required()->check(CLI::ExistingFile);
  rol->add_option("--terrain", o.terrain, "Terrain file")->required()->check(CLI::ExistingFile);
  rol->add_option("--forward", o.forward, "Forward checkpoint for hallucinated perception")->check(CLI::ExistingFile);
  auto* evl = app.add_subcommand("evaluate", "Compare two episode populations -> sections/correlation/ttest CSVs");
  evl->add_option("--drivers", o.drivers, "Driver episode directory")->required()->check(CLI::ExistingDirectory);
  evl->add_option("--model-episodes", o.model_episodes, "Model episode directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  evl->add_option("--terrain", o.terrain, "Terrain file")->required()->check(CLI::ExistingFile);
  auto* grd = app.add_subcommand("gradcheck", "Finite-difference gradient suite; exit 0 on pass");
  for (auto* sub : {gen, col, bld, trn, rol, evl, grd}) sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help("", CLI::AppFormatMode::All) : subs.front()->help());
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (!args.empty() && !args.front().starts_with("-") && app.get_subcommand_no_throw(args.front()) == nullptr) {
      err << "error: unknown subcommand '" << args.front() << "'\n\n";
    } else {
      err << "error: " << e.what() << "\n\n";
    }
    err << app.help("", CLI::AppFormatMode::All);
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  unsigned threads = 1;
  try {
    if (g.out.empty() && name != "gradcheck") throw UsageError("--out is required for " + name);
    threads = resolve_threads(g.threads, std::getenv("TDG_THREADS"));
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << sub->help();
    return kExitUsage;
  }

  try {
    Run r(name, args, g, threads, out);
    int code = kExitFailure;
    if (name == "gen-terrain") code = cmd_gen_terrain(r);
    else if (name == "collect") code = cmd_collect(r, o);
    else if (name == "build-dataset") code = cmd_build_dataset(r, o);
    else if (name == "train") code = cmd_train(r, o);
    else if (name == "rollout") code = cmd_rollout(r, o);
    else if (name == "evaluate") code = cmd_evaluate(r, o);
    else if (name == "gradcheck") code = cmd_gradcheck(r, err);
    r.finish();
    return code;
  } catch (const Error& e) {
    err << error_line(e.kind(), e.what()) << "\n";
  } catch (const fs::filesystem_error& e) {
    err << error_line("io", e.what()) << "\n";
  } catch (const std::exception& e) {
    err << error_line("internal", e.what()) << "\n";
  }
  return kExitFailure;
}

}  // namespace tdg::cli
