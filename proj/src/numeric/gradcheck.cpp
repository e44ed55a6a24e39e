#include "tdg/numeric/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "tdg/error.hpp"

namespace tdg::numeric {

GradCheckResult finite_difference_check(
    const ParameterSet& params, const Gradients& analytic,
    const std::function<double(const ParameterSet&)>& loss, double h, double floor) {
  GradCheckResult result;
  ParameterSet probe = params;
  for (std::size_t k = 0; k < probe.size(); ++k) {
    auto& [name, tensor] = probe.entries()[k];
    const Tensor& grad = analytic.get(name);
    if (grad.shape() != tensor.shape()) {
      throw DimensionError("gradcheck: gradient of '" + name + "' has shape " +
                           shape_string(grad.shape()));
    }
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double original = tensor[i];
      tensor[i] = original + h;
      const double up = loss(probe);
      tensor[i] = original - h;
      const double down = loss(probe);
      tensor[i] = original;
      const double numeric = (up - down) / (2.0 * h);
      const double a = grad[i];
      const double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), floor);
      if (result.checked++ == 0 || rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = name;
        result.worst_index = i;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace tdg::numeric
