#include "tdg/eval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tdg/error.hpp"

namespace tdg::eval {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw DimensionError("mean of an empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double population_sd(std::span<const double> xs) {
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw DimensionError("sample variance needs at least 2 values");
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

namespace {

struct Moments {
  double mx, my, sxx, syy, sxy;
};

Moments moments(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw DimensionError("paired samples differ in length: " + std::to_string(xs.size()) + " vs " +
                         std::to_string(ys.size()));
  }
  if (xs.size() < 2) throw DimensionError("paired statistics need at least 2 points");
  Moments m{mean(xs), mean(ys), 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - m.mx, dy = ys[i] - m.my;
    m.sxx += dx * dx;
    m.syy += dy * dy;
    m.sxy += dx * dy;
  }
  if (m.sxx == 0.0 || m.syy == 0.0) {
    throw UndefinedCorrelationError(std::string("zero variance in ") + (m.sxx == 0.0 ? "x" : "y"));
  }
  return m;
}

// Continued fraction for the incomplete beta (modified Lentz).
double beta_fraction(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw NumericError("incomplete beta continued fraction did not converge");
}

}  // namespace

double pearson_r(std::span<const double> xs, std::span<const double> ys) {
  const Moments m = moments(xs, ys);
  const double r = m.sxy / std::sqrt(m.sxx * m.syy);
  return std::clamp(r, -1.0, 1.0);
}

Regression linear_regression(std::span<const double> xs, std::span<const double> ys) {
  const Moments m = moments(xs, ys);
  const double slope = m.sxy / m.sxx;
  return {slope, m.my - slope * m.mx};
}

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw RangeError("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw RangeError("incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_fraction(a, b, x) / a;
  return 1.0 - front * beta_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw RangeError("Student t needs df > 0");
  if (std::isnan(t)) throw RangeError("Student t CDF of NaN");
  if (t == 0.0) return 0.5;
  if (std::isinf(t)) return t > 0.0 ? 1.0 : 0.0;
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
  return t > 0.0 ? 1.0 - tail : tail;
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw DimensionError("Welch's t-test needs at least 2 samples per group");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = mean(a), mb = mean(b);
  const double va = sample_variance(a) / na, vb = sample_variance(b) / nb;
  const double se2 = va + vb;
  if (se2 == 0.0) {
    const double inf = std::numeric_limits<double>::infinity();
    if (ma == mb) return {0.0, na + nb - 2.0, 1.0};
    return {ma > mb ? inf : -inf, na + nb - 2.0, 0.0};
  }
  WelchResult r;
  r.t = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  r.p = r.t == 0.0 ? 1.0 : incomplete_beta(0.5 * r.df, 0.5, r.df / (r.df + r.t * r.t));
  r.p = std::clamp(r.p, 0.0, 1.0);
  return r;
}

}  // namespace tdg::eval
