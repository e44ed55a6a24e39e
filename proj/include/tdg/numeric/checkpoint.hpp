#pragma once

#include <optional>
#include <string>

#include "tdg/numeric/optim.hpp"
#include "tdg/numeric/parameters.hpp"

namespace tdg::numeric {

// Binary checkpoint layout (all integers little-endian):
//   "TDGCKPT1"
//   "PARM" u32 count, then per tensor:
//       u32 name length, name bytes, u32 rank, u64 dims[rank], f64 values[]
//   optional "ADAM" u64 step, u32 count, tensors as above named
//       "m/<param>" and "v/<param>"
struct Checkpoint {
  ParameterSet parameters;
  std::optional<OptimizerState> optimizer;
};

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tdg::numeric
