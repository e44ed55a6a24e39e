#include "tdg/pipeline/model_io.hpp"

#include <json.hpp>

#include "tdg/binary_io.hpp"
#include "tdg/error.hpp"
#include "tdg/numeric/checkpoint.hpp"

namespace tdg::pipeline {

using nlohmann::json;

namespace {
constexpr const char* kFormat = "TDGMODEL";
constexpr int kVersion = 1;
}  // namespace

std::string sidecar_path(const std::string& checkpoint_path) { return checkpoint_path + ".json"; }

void save_model(const std::string& checkpoint_path, const cvae::CvaeModel& model, const ModelInfo& info,
                const numeric::OptimizerState* optimizer) {
  numeric::Checkpoint ck{model.parameters(), std::nullopt};
  if (optimizer) ck.optimizer = *optimizer;
  const std::string bytes = numeric::serialize_checkpoint(ck);
  write_file(checkpoint_path, bytes);

  const auto& c = model.config();
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["role"] = cvae::to_string(c.role);
  j["mode"] = cvae::to_string(c.mode);
  j["literal_variance"] = c.literal_variance;
  j["step_dim"] = c.step_dim;
  j["generated_dim"] = c.generated_dim;
  j["window"] = c.window;
  j["linear_width"] = c.linear_width;
  j["hidden"] = c.hidden;
  j["beta"] = c.beta;
  j["dataset_fingerprint"] = info.dataset_fingerprint;
  j["checkpoint_fingerprint"] = fingerprint(bytes);
  j["best_epoch"] = info.best_epoch;
  j["seed"] = info.seed;
  write_file(sidecar_path(checkpoint_path), j.dump(2) + "\n");
}

SavedModel load_model(const std::string& checkpoint_path) {
  const std::string bytes = read_file(checkpoint_path);
  json j;
  try {
    j = json::parse(read_file(sidecar_path(checkpoint_path)));
  } catch (const json::exception& e) {
    throw FormatError(sidecar_path(checkpoint_path) + ": " + e.what());
  }
  try {
    if (j.at("format") != kFormat) throw FormatError(sidecar_path(checkpoint_path) + ": not a model sidecar");
    if (j.at("version") != kVersion) {
      throw FormatError(sidecar_path(checkpoint_path) + ": unsupported version " + j.at("version").dump());
    }
    if (j.at("checkpoint_fingerprint") != fingerprint(bytes)) {
      throw FormatError(checkpoint_path + ": checkpoint does not match its sidecar fingerprint");
    }
    cvae::CvaeConfig c;
    c.role = cvae::role_from_string(j.at("role"));
    c.mode = cvae::mode_from_string(j.at("mode"));
    c.literal_variance = j.at("literal_variance");
    c.step_dim = j.at("step_dim");
    c.generated_dim = j.at("generated_dim");
    c.window = j.at("window");
    c.linear_width = j.at("linear_width");
    c.hidden = j.at("hidden");
    c.beta = j.at("beta");
    numeric::Checkpoint ck = numeric::deserialize_checkpoint(bytes);
    ModelInfo info{j.at("dataset_fingerprint"), j.at("best_epoch"), j.at("seed")};
    return SavedModel{cvae::CvaeModel(c, std::move(ck.parameters)), info, std::move(ck.optimizer)};
  } catch (const json::exception& e) {
    throw FormatError(sidecar_path(checkpoint_path) + ": " + e.what());
  }
}

SavedModel load_model(const std::string& checkpoint_path, cvae::Role role) {
  SavedModel m = load_model(checkpoint_path);
  if (m.model.config().role != role) {
    throw UsageError(checkpoint_path + " holds a " + cvae::to_string(m.model.config().role) + " model, expected " +
                     cvae::to_string(role));
  }
  return m;
}

}  // namespace tdg::pipeline
