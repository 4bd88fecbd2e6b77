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

// Agreement statistics on the ordinal relevance scale: Kendall's tau-b and
// Krippendorff's alpha.

#ifndef COVBENCH_AGREEMENT_HPP
#define COVBENCH_AGREEMENT_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "covbench/core.hpp"
#include "covbench/error.hpp"

namespace covbench {

/// Tie-corrected Kendall rank correlation (tau-b).
template <typename T>
double kendall_tau_b(std::span<const T> x, std::span<const T> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::kData, "kendall_tau: length mismatch");
  if (x.size() < 2) throw Error(ErrorKind::kData, "kendall_tau: need at least 2 items");
  long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      bool tx = x[i] == x[j];
      bool ty = y[i] == y[j];
      if (tx) ++ties_x;
      if (ty) ++ties_y;
      if (tx || ty) continue;
      if ((x[i] < x[j]) == (y[i] < y[j])) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  long long n0 = static_cast<long long>(n) * static_cast<long long>(n - 1) / 2;
  if (ties_x == n0 || ties_y == n0) {
    throw Error(ErrorKind::kData, "kendall_tau: constant input, correlation undefined");
  }
  double denom = std::sqrt(static_cast<double>(n0 - ties_x)) * std::sqrt(static_cast<double>(n0 - ties_y));
  return std::clamp(static_cast<double>(concordant - discordant) / denom, -1.0, 1.0);
}

inline double kendall_tau(std::span<const RelevanceLabel> x, std::span<const RelevanceLabel> y) {
  std::vector<int> rx, ry;
  for (auto l : x) rx.push_back(rank(l));
  for (auto l : y) ry.push_back(rank(l));
  return kendall_tau_b(std::span<const int>(rx), std::span<const int>(ry));
}

enum class AlphaLevel {
  kNominal,             // 0/1 disagreement
  kOrdinal,             // squared rank distance
  kOrdinalCumulative,   // Krippendorff's rank-frequency ordinal metric
};

/// Items x raters; std::nullopt marks a missing rating.
using RatingMatrix = std::vector<std::vector<std::optional<int>>>;

/// Krippendorff's alpha from the coincidence matrix of pairable values.
inline double krippendorff_alpha(const RatingMatrix& ratings, AlphaLevel level = AlphaLevel::kOrdinal) {
  std::map<int, std::size_t> value_index;
  for (const auto& item : ratings) {
    std::size_t m = 0;
    for (const auto& v : item) m += v.has_value();
    if (m < 2) continue;
    for (const auto& v : item) {
      if (v) value_index.emplace(*v, 0);
    }
  }
  if (value_index.empty()) throw Error(ErrorKind::kData, "krippendorff_alpha: no pairable values");
  std::vector<int> values;
  for (auto& [v, idx] : value_index) {
    idx = values.size();
    values.push_back(v);
  }
  const std::size_t nv = values.size();
  std::vector<double> coincidence(nv * nv, 0.0);
  for (const auto& item : ratings) {
    std::vector<std::size_t> present;
    for (const auto& v : item) {
      if (v) present.push_back(value_index.at(*v));
    }
    if (present.size() < 2) continue;
    double w = 1.0 / static_cast<double>(present.size() - 1);
    for (std::size_t a = 0; a < present.size(); ++a) {
      for (std::size_t b = 0; b < present.size(); ++b) {
        if (a != b) coincidence[present[a] * nv + present[b]] += w;
      }
    }
  }
  std::vector<double> marginal(nv, 0.0);
  double n = 0;
  for (std::size_t c = 0; c < nv; ++c) {
    for (std::size_t k = 0; k < nv; ++k) marginal[c] += coincidence[c * nv + k];
    n += marginal[c];
  }
  if (n < 2) throw Error(ErrorKind::kData, "krippendorff_alpha: fewer than 2 pairable values");

  auto delta2 = [&](std::size_t c, std::size_t k) -> double {
    if (c == k) return 0.0;
    switch (level) {
      case AlphaLevel::kNominal: return 1.0;
      case AlphaLevel::kOrdinal: {
        double d = static_cast<double>(values[c]) - static_cast<double>(values[k]);
        return d * d;
      }
      case AlphaLevel::kOrdinalCumulative: {
        std::size_t lo = std::min(c, k), hi = std::max(c, k);
        double s = 0;
        for (std::size_t g = lo; g <= hi; ++g) s += marginal[g];
        s -= 0.5 * (marginal[c] + marginal[k]);
        return s * s;
      }
    }
    return 0.0;
  };

  double observed = 0, expected = 0;
  for (std::size_t c = 0; c < nv; ++c) {
    for (std::size_t k = 0; k < nv; ++k) {
      double d = delta2(c, k);
      observed += coincidence[c * nv + k] * d;
      expected += marginal[c] * marginal[k] * d;
    }
  }
  observed /= n;
  expected /= n * (n - 1);
  if (expected == 0) {
    throw Error(ErrorKind::kData, "krippendorff_alpha: only one distinct value, alpha undefined");
  }
  return 1.0 - observed / expected;
}

struct AgreementReport {
  std::optional<double> kendall_tau;
  std::optional<double> krippendorff_alpha;
  std::size_t n_tau_items = 0;
  std::size_t n_alpha_items = 0;
  std::size_t n_raters = 0;
};

}  // namespace covbench

#endif  // COVBENCH_AGREEMENT_HPP
