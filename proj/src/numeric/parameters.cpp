#include "tdg/numeric/parameters.hpp"

#include "tdg/error.hpp"

namespace tdg::numeric {

void ParameterSet::add(std::string name, Tensor value) {
  if (index_.contains(name)) throw UsageError("duplicate parameter name '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.emplace_back(std::move(name), std::move(value));
}

bool ParameterSet::contains(const std::string& name) const { return index_.contains(name); }

const Tensor& ParameterSet::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter '" + name + "'");
  return entries_[it->second].second;
}

Tensor& ParameterSet::get_mutable(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("unknown parameter '" + name + "'");
  return entries_[it->second].second;
}

void ParameterSet::set(const std::string& name, Tensor value) {
  Tensor& slot = get_mutable(name);
  if (slot.shape() != value.shape()) {
    throw DimensionError("parameter '" + name + "' has shape " + shape_string(slot.shape()) +
                         ", cannot assign " + shape_string(value.shape()));
  }
  slot = std::move(value);
}

std::size_t ParameterSet::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.size();
  return n;
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out;
  for (const auto& [name, t] : entries_) out.add(name, Tensor(t.shape()));
  return out;
}

}  // namespace tdg::numeric
