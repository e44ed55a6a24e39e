#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tdg/cvae/model.hpp"
#include "tdg/numeric/gradcheck.hpp"

namespace tdg::cvae {

struct GradCheckCase {
  std::string name;
  numeric::GradCheckResult result;
};

// Toy layout used by the gradient checks: per-step dim 8, N = 2, widths 4,
// window 10.
CvaeConfig toy_config(Role role, Mode mode);

// Central-difference checks of every layer kind and of the full CVAE loss
// for both roles and modes.
std::vector<GradCheckCase> run_gradient_suite(std::uint64_t seed);

}  // namespace tdg::cvae
