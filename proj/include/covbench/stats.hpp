// Copyright 2026 The covbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Descriptive statistics and Welch's two-sample t-test. The Student-t tail is
// evaluated through the regularized incomplete beta function.

#ifndef COVBENCH_STATS_HPP
#define COVBENCH_STATS_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <span>

#include "covbench/error.hpp"

namespace covbench {

struct Summary {
  std::size_t support = 0;
  std::optional<double> mean;  // absent when support == 0
  std::optional<double> std;   // sample (n - 1) deviation; absent when support < 2
};

inline Summary summarize(std::span<const double> xs) {
  Summary s;
  s.support = xs.size();
  if (xs.empty()) return s;
  double sum = 0;
  for (double x : xs) sum += x;
  double mean = sum / static_cast<double>(xs.size());
  s.mean = mean;
  if (xs.size() >= 2) {
    double ss = 0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

namespace detail {

// Continued fraction for I_x(a, b) (modified Lentz).
inline double incbeta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 1000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  double qab = a + b;
  double qap = a + 1.0;
  double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
inline double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0) || !(b > 0) || !(x >= 0) || !(x <= 1)) {
    throw Error(ErrorKind::kData, "incomplete beta: argument out of domain");
  }
  if (x == 0) return 0;
  if (x == 1) return 1;
  double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                     b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_front) * detail::incbeta_cf(a, b, x) / a;
  }
  return 1.0 - std::exp(log_front) * detail::incbeta_cf(b, a, 1.0 - x) / b;
}

/// Two-sided tail probability P(|T| >= |t|) of Student's t with `df` degrees
/// of freedom.
inline double student_t_two_sided_p(double t, double df) {
  if (!(df > 0)) throw Error(ErrorKind::kData, "student t: degrees of freedom must be positive");
  if (t == 0) return 1.0;
  if (std::isinf(t)) return 0.0;
  return regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

struct TTestResult {
  double t = 0;
  double df = 0;
  double p = 1;
};

/// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of freedom.
inline TTestResult welch_t_test(std::span<const double> x, std::span<const double> y) {
  if (x.size() < 2 || y.size() < 2) {
    throw Error(ErrorKind::kData, "welch_t_test: both samples need at least 2 values");
  }
  Summary sx = summarize(x);
  Summary sy = summarize(y);
  double vx = *sx.std * *sx.std / static_cast<double>(x.size());
  double vy = *sy.std * *sy.std / static_cast<double>(y.size());
  double se2 = vx + vy;
  if (!(se2 > 0)) throw Error(ErrorKind::kData, "welch_t_test: degenerate (zero) variance");
  TTestResult r;
  r.t = (*sx.mean - *sy.mean) / std::sqrt(se2);
  r.df = se2 * se2 /
         (vx * vx / static_cast<double>(x.size() - 1) + vy * vy / static_cast<double>(y.size() - 1));
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

}  // namespace covbench

#endif  // COVBENCH_STATS_HPP
