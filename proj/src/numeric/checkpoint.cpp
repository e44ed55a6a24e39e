#include "tdg/numeric/checkpoint.hpp"

#include "tdg/binary_io.hpp"

namespace tdg::numeric {
namespace {

constexpr std::string_view kMagic = "TDGCKPT1";
constexpr std::string_view kParamTag = "PARM";
constexpr std::string_view kAdamTag = "ADAM";

void write_tensor(ByteWriter& out, const std::string& name, const Tensor& t) {
  out.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
  out.bytes(name);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) out.put<std::uint64_t>(d);
  for (double v : t.values()) out.put<double>(v);
}

std::pair<std::string, Tensor> read_tensor(ByteReader& in) {
  const auto name_len = in.get<std::uint32_t>();
  std::string name(in.bytes(name_len));
  const auto rank = in.get<std::uint32_t>();
  if (rank > 8) throw FormatError("checkpoint tensor '" + name + "' has implausible rank");
  Shape shape(rank);
  for (auto& d : shape) d = static_cast<std::size_t>(in.get<std::uint64_t>());
  const std::size_t count = shape_size(shape);
  if (count * sizeof(double) > in.remaining()) {
    throw FormatError("checkpoint tensor '" + name + "' truncated");
  }
  std::vector<double> values(count);
  for (auto& v : values) v = in.get<double>();
  return {std::move(name), Tensor(std::move(shape), std::move(values))};
}

void write_set(ByteWriter& out, const ParameterSet& set, const std::string& prefix) {
  for (const auto& [name, t] : set.entries()) write_tensor(out, prefix + name, t);
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
  ByteWriter out;
  out.bytes(kMagic);
  out.bytes(kParamTag);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(checkpoint.parameters.size()));
  write_set(out, checkpoint.parameters, "");
  if (checkpoint.optimizer) {
    const OptimizerState& opt = *checkpoint.optimizer;
    out.bytes(kAdamTag);
    out.put<std::uint64_t>(opt.step);
    out.put<std::uint32_t>(
        static_cast<std::uint32_t>(opt.first_moment.size() + opt.second_moment.size()));
    write_set(out, opt.first_moment, "m/");
    write_set(out, opt.second_moment, "v/");
  }
  return out.take();
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  ByteReader in(bytes);
  if (bytes.size() < kMagic.size() || in.bytes(kMagic.size()) != kMagic) {
    throw FormatError("not a checkpoint: magic 'TDGCKPT1' missing");
  }
  if (in.bytes(4) != kParamTag) throw FormatError("checkpoint: expected PARM section");
  Checkpoint ckpt;
  const auto count = in.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    auto [name, t] = read_tensor(in);
    ckpt.parameters.add(std::move(name), std::move(t));
  }
  if (in.at_end()) return ckpt;
  if (in.bytes(4) != kAdamTag) throw FormatError("checkpoint: unknown section after PARM");
  OptimizerState opt;
  opt.step = in.get<std::uint64_t>();
  const auto moments = in.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < moments; ++i) {
    auto [name, t] = read_tensor(in);
    if (name.starts_with("m/")) {
      opt.first_moment.add(name.substr(2), std::move(t));
    } else if (name.starts_with("v/")) {
      opt.second_moment.add(name.substr(2), std::move(t));
    } else {
      throw FormatError("checkpoint: optimizer tensor '" + name + "' lacks m/ or v/ prefix");
    }
  }
  if (!in.at_end()) throw FormatError("checkpoint: trailing bytes");
  ckpt.optimizer = std::move(opt);
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  write_file(path, serialize_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::string& path) {
  return deserialize_checkpoint(read_file(path));
}

}  // namespace tdg::numeric
