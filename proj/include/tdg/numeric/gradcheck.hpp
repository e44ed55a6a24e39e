#pragma once

#include <functional>
#include <string>

#include "tdg/numeric/parameters.hpp"

namespace tdg::numeric {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

// Compares `analytic` against central differences of `loss` with step `h`.
// Relative error is |a - n| / max(|a| + |n|, floor); the floor keeps exact
// zeros from dividing by nothing.
GradCheckResult finite_difference_check(
    const ParameterSet& params, const Gradients& analytic,
    const std::function<double(const ParameterSet&)>& loss, double h = 1e-5,
    double floor = 1e-7);

}  // namespace tdg::numeric
