#include "tdg/preprocess/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "tdg/binary_io.hpp"
#include "tdg/error.hpp"

namespace tdg::preprocess {

namespace {
constexpr std::string_view kMagic = "TDGDATA1";
}

std::string to_string(TargetSlice s) { return s == TargetSlice::perception ? "perception" : "control"; }

std::size_t slice_offset(TargetSlice s) { return s == TargetSlice::perception ? 0 : kPerceptionDim; }

std::size_t slice_size(TargetSlice s) { return s == TargetSlice::perception ? kPerceptionDim : kControlDim; }

std::span<const float> Dataset::window(std::size_t i) const {
  if (i >= size()) throw RangeError("dataset window index out of range");
  return {values.data() + i * window_stride(), window_stride()};
}

void Dataset::append(const ConditionWindow& w) {
  if (window_length != kWindowLength || step_dim != kStepDim) {
    throw DimensionError("dataset layout does not match condition windows");
  }
  for (const auto& step : w) {
    for (double v : step) values.push_back(static_cast<float>(v));
  }
}

Dataset build_dataset(const std::vector<sim::Episode>& episodes, TargetSlice target, unsigned threads,
                      BuildStats* stats) {
  if (episodes.empty()) throw UsageError("build_dataset: no episodes");
  std::vector<std::vector<StepVector>> steps(episodes.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < episodes.size();) steps[i] = preprocess_episode(episodes[i]);
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(episodes.size())));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  Dataset d;
  d.target = target;
  BuildStats local;
  for (const auto& ep : steps) {
    if (ep.size() < kWindowLength) {
      ++local.episodes_skipped;
      continue;
    }
    ++local.episodes_used;
    for (std::size_t t = kWindowLength - 1; t < ep.size(); ++t) d.append(window_from_steps(ep, t));
  }
  if (stats) *stats = local;
  return d;
}

std::string serialize_dataset(const Dataset& d) {
  ByteWriter out;
  out.bytes(kMagic);
  out.put<std::uint32_t>(d.window_length);
  out.put<std::uint32_t>(d.step_dim);
  out.put<std::uint64_t>(d.size());
  out.put<std::uint8_t>(static_cast<std::uint8_t>(d.target));
  for (float v : d.values) out.put<float>(v);
  return out.take();
}

Dataset deserialize_dataset(std::string_view bytes) {
  ByteReader in(bytes);
  if (bytes.size() < kMagic.size() || in.bytes(kMagic.size()) != kMagic) {
    throw FormatError("not a dataset: magic 'TDGDATA1' missing");
  }
  Dataset d;
  d.window_length = in.get<std::uint32_t>();
  d.step_dim = in.get<std::uint32_t>();
  const auto count = in.get<std::uint64_t>();
  const auto target = in.get<std::uint8_t>();
  if (target > 1) throw FormatError("dataset: unknown target slice id " + std::to_string(target));
  d.target = static_cast<TargetSlice>(target);
  if (d.window_length == 0 || d.step_dim == 0) throw FormatError("dataset: empty window layout");
  const std::uint64_t n = count * d.window_length * d.step_dim;
  if (in.remaining() != n * sizeof(float)) {
    throw FormatError("dataset: header declares " + std::to_string(count) + " windows but payload size differs");
  }
  d.values.resize(n);
  for (auto& v : d.values) v = in.get<float>();
  return d;
}

Dataset load_dataset(const std::string& path, std::uint32_t window_length, std::uint32_t step_dim) {
  Dataset d = deserialize_dataset(read_file(path));
  if (d.window_length != window_length || d.step_dim != step_dim) {
    throw FormatError(path + ": dataset layout " + std::to_string(d.window_length) + "x" +
                      std::to_string(d.step_dim) + " does not match expected " + std::to_string(window_length) +
                      "x" + std::to_string(step_dim));
  }
  return d;
}

void save_dataset(const std::string& path, const Dataset& d) { write_file(path, serialize_dataset(d)); }

}  // namespace tdg::preprocess
