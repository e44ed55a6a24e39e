#pragma once

#include <boost/math/distributions/students_t.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <random>
#include <vector>

#include "tdg/eval/stats.hpp"

namespace tdg::reference {

using Big = boost::multiprecision::cpp_bin_float_50;
using eval::WelchResult;

// High-precision references, computed without touching the code under test.
struct RefPair {
  double r, slope, intercept;
};

inline RefPair ref_pair(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  Big mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  Big sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const Big slope = sxy / sxx;
  return {static_cast<double>(sxy / sqrt(sxx * syy)), static_cast<double>(slope),
          static_cast<double>(my - slope * mx)};
}

inline WelchResult ref_welch(const std::vector<double>& a, const std::vector<double>& b) {
  auto moments = [](const std::vector<double>& v, Big& m, Big& var) {
    m = 0;
    for (double x : v) m += x;
    m /= v.size();
    var = 0;
    for (double x : v) var += (x - m) * (x - m);
    var /= (v.size() - 1);
  };
  Big ma, va, mb, vb;
  moments(a, ma, va);
  moments(b, mb, vb);
  const Big sa = va / a.size(), sb = vb / b.size();
  const Big t = (ma - mb) / sqrt(sa + sb);
  const Big df = (sa + sb) * (sa + sb) / (sa * sa / (a.size() - 1) + sb * sb / (b.size() - 1));
  boost::math::students_t_distribution<Big> dist(df);
  const Big p = 2 * boost::math::cdf(boost::math::complement(dist, abs(t)));
  return {static_cast<double>(t), static_cast<double>(df), static_cast<double>(p)};
}

struct Case {
  std::vector<double> a, b;
};

// 4 hand-picked cases followed by seeded random ones of assorted sizes/scales.
inline std::vector<Case> fixed_cases() {
  std::vector<Case> cases = {
      {{1, 2, 3, 4}, {2, 1, 4, 3}},
      {{1, 2, 3, 4, 5}, {2, 3, 4, 5, 6}},
      {{10.5, 11.2, 9.8, 10.1, 12.0, 10.9}, {12.1, 13.5, 11.9, 12.8, 14.2, 12.0}},
      {{0.1, 0.4, 0.35, 0.8}, {0.3, 0.2, 0.5, 0.9}},
  };
  std::mt19937_64 rng(20261015);
  for (int k = 0; k < 22; ++k) {
    const std::size_t n = 3 + static_cast<std::size_t>(k % 9);
    const double scale = std::pow(10.0, (k % 5) - 2);
    std::normal_distribution<double> noise(0.0, scale);
    Case c;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = noise(rng) + k;
      c.a.push_back(x);
      c.b.push_back(0.7 * x + noise(rng) + 0.3 * scale * (k % 3));
    }
    cases.push_back(std::move(c));
  }
  return cases;
}

}  // namespace tdg::reference
