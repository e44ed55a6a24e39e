#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tdg/numeric/tensor.hpp"

namespace tdg::numeric {

// Insertion-ordered name -> Tensor map. Shapes are fixed once an entry exists;
// `set` only accepts a tensor of the registered shape.
class ParameterSet {
 public:
  void add(std::string name, Tensor value);
  bool contains(const std::string& name) const;
  const Tensor& get(const std::string& name) const;
  Tensor& get_mutable(const std::string& name);
  void set(const std::string& name, Tensor value);

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const noexcept;
  const std::vector<std::pair<std::string, Tensor>>& entries() const noexcept {
    return entries_;
  }
  std::vector<std::pair<std::string, Tensor>>& entries() noexcept { return entries_; }

  // Zero tensors with the same names and shapes.
  ParameterSet zeros_like() const;

  friend bool operator==(const ParameterSet& a, const ParameterSet& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

using Gradients = ParameterSet;

}  // namespace tdg::numeric
