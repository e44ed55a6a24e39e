#pragma once

#include <optional>
#include <string>

#include "tdg/cvae/model.hpp"
#include "tdg/numeric/optim.hpp"

namespace tdg::pipeline {

// Sidecar metadata stored next to a checkpoint as "<checkpoint>.json".
struct ModelInfo {
  std::string dataset_fingerprint;
  int best_epoch = 0;
  std::uint64_t seed = 0;
};

struct SavedModel {
  cvae::CvaeModel model;
  ModelInfo info;
  std::optional<numeric::OptimizerState> optimizer;
};

std::string sidecar_path(const std::string& checkpoint_path);

void save_model(const std::string& checkpoint_path, const cvae::CvaeModel& model, const ModelInfo& info,
                const numeric::OptimizerState* optimizer = nullptr);
// Rebuilds the model from the checkpoint and its sidecar; throws FormatError
// when either is missing or inconsistent.
SavedModel load_model(const std::string& checkpoint_path);
// Same, and requires the stored role.
SavedModel load_model(const std::string& checkpoint_path, cvae::Role role);

}  // namespace tdg::pipeline
