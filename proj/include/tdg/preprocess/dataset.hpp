#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tdg/preprocess/vectors.hpp"

namespace tdg::preprocess {

// Which part of the current step a model generates.
enum class TargetSlice : std::uint8_t { perception = 0, control = 1 };

std::string to_string(TargetSlice s);
std::size_t slice_offset(TargetSlice s);
std::size_t slice_size(TargetSlice s);

// Flat store of condition windows, float32 as on disk.
struct Dataset {
  TargetSlice target = TargetSlice::perception;
  std::uint32_t window_length = static_cast<std::uint32_t>(kWindowLength);
  std::uint32_t step_dim = static_cast<std::uint32_t>(kStepDim);
  std::vector<float> values;

  std::size_t size() const noexcept { return values.size() / (window_length * step_dim); }
  std::size_t window_stride() const noexcept { return window_length * step_dim; }
  std::span<const float> window(std::size_t i) const;
  void append(const ConditionWindow& w);

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct BuildStats {
  std::size_t episodes_used = 0;
  std::size_t episodes_skipped = 0;  // fewer than 10 ticks
};

// Slides the window over every episode (t >= 9). Episodes are preprocessed
// on up to `threads` workers; window order follows the input order.
Dataset build_dataset(const std::vector<sim::Episode>& episodes, TargetSlice target,
                      unsigned threads = 1, BuildStats* stats = nullptr);

// "TDGDATA1" | u32 window length | u32 step dim | u64 count | u8 target | f32...
std::string serialize_dataset(const Dataset& d);
Dataset deserialize_dataset(std::string_view bytes);
// Rejects files whose window length or step dimension differ from the
// expected layout.
Dataset load_dataset(const std::string& path, std::uint32_t window_length = kWindowLength,
                     std::uint32_t step_dim = kStepDim);
void save_dataset(const std::string& path, const Dataset& d);

}  // namespace tdg::preprocess
