#pragma once

#include <span>

namespace tdg::eval {

double mean(std::span<const double> xs);
// Population (divide by n) standard deviation.
double population_sd(std::span<const double> xs);
// Sample (divide by n - 1) variance.
double sample_variance(std::span<const double> xs);

// Sample Pearson correlation. Throws UndefinedCorrelationError when either
// side has zero variance, DimensionError on unequal or too-short inputs.
double pearson_r(std::span<const double> xs, std::span<const double> ys);

struct Regression {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares y = slope * x + intercept; same errors as pearson_r.
Regression linear_regression(std::span<const double> xs, std::span<const double> ys);

// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);
double student_t_cdf(double t, double df);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // two-sided
};

// Unequal-variance t-test. With zero variance on both sides p is 1 for equal
// means and 0 otherwise.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace tdg::eval
