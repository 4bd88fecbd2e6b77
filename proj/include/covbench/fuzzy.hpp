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

// Token-set-ratio fuzzy matching over Unicode code points, compatible with
// rapidfuzz's fuzz.token_set_ratio (scaled to [0, 1]) after case folding.

#ifndef COVBENCH_FUZZY_HPP
#define COVBENCH_FUZZY_HPP

#include <algorithm>
#include <cstddef>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

namespace covbench {
namespace fuzzy {

using CodePoints = std::u32string;

/// Decodes UTF-8; invalid bytes decode to U+FFFD.
inline CodePoints decode_utf8(std::string_view s) {
  CodePoints out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    char32_t cp = 0xFFFD;
    std::size_t len = 1;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6) {
      len = 2;
    } else if ((c >> 4) == 0xE) {
      len = 3;
    } else if ((c >> 3) == 0x1E) {
      len = 4;
    }
    if (len > 1) {
      if (i + len > s.size()) {
        len = 1;
      } else {
        cp = c & (0xFF >> (len + 1));
        for (std::size_t k = 1; k < len; ++k) {
          auto cc = static_cast<unsigned char>(s[i + k]);
          if ((cc >> 6) != 0x2) {
            cp = 0xFFFD;
            len = 1;
            break;
          }
          cp = (cp << 6) | (cc & 0x3F);
        }
      }
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

/// Simple case folding for ASCII, Latin-1, Greek and basic Cyrillic.
inline char32_t fold_case(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 32;
  if (c >= 0x410 && c <= 0x42F) return c + 32;
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  return c;
}

inline bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\v' || c == U'\f' ||
         c == 0xA0 || c == 0x1680 || (c >= 0x2000 && c <= 0x200A) || c == 0x2028 ||
         c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000 || c == 0x1C ||
         c == 0x1D || c == 0x1E || c == 0x1F || c == 0x85;
}

/// Case-folded, whitespace-split, sorted and deduplicated tokens.
inline std::vector<CodePoints> token_set(std::string_view s) {
  std::vector<CodePoints> tokens;
  CodePoints current;
  for (char32_t c : decode_utf8(s)) {
    if (is_space(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(fold_case(c));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  return tokens;
}

inline CodePoints join(const std::vector<CodePoints>& tokens) {
  CodePoints out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(U' ');
    out += tokens[i];
  }
  return out;
}

/// Insertion/deletion distance: |a| + |b| - 2 * LCS(a, b).
inline std::size_t indel_distance(const CodePoints& a, const CodePoints& b) {
  if (a.empty() || b.empty()) return a.size() + b.size();
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return a.size() + b.size() - 2 * prev[b.size()];
}

inline double normalized_similarity(std::size_t dist, std::size_t lensum) {
  if (lensum == 0) return 1.0;
  return 1.0 - static_cast<double>(dist) / static_cast<double>(lensum);
}

}  // namespace fuzzy

/// Token set ratio in [0, 1]. Equal token sets (including two empty strings)
/// score 1; a single empty side scores 0.
inline double fuzzy_match(std::string_view a, std::string_view b) {
  using namespace fuzzy;
  auto ta = token_set(a);
  auto tb = token_set(b);
  if (ta.empty() && tb.empty()) return 1.0;
  if (ta.empty() || tb.empty()) return 0.0;

  std::vector<CodePoints> sect, diff_ab, diff_ba;
  std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(sect));
  std::set_difference(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(diff_ab));
  std::set_difference(tb.begin(), tb.end(), ta.begin(), ta.end(), std::back_inserter(diff_ba));

  if (!sect.empty() && (diff_ab.empty() || diff_ba.empty())) return 1.0;

  CodePoints ab = join(diff_ab);
  CodePoints ba = join(diff_ba);
  std::size_t sect_len = join(sect).size();
  std::size_t sep = sect_len ? 1 : 0;
  std::size_t sect_ab_len = sect_len + sep + ab.size();
  std::size_t sect_ba_len = sect_len + sep + ba.size();

  // "<sect> <ab>" vs "<sect> <ba>" share the prefix, so only the remainders differ.
  double best = normalized_similarity(indel_distance(ab, ba), sect_ab_len + sect_ba_len);
  if (sect_len == 0) return best;

  // "<sect>" vs "<sect> <rest>" differs only by the appended remainder.
  best = std::max(best, normalized_similarity(sep + ab.size(), sect_len + sect_ab_len));
  best = std::max(best, normalized_similarity(sep + ba.size(), sect_len + sect_ba_len));
  return best;
}

}  // namespace covbench

#endif  // COVBENCH_FUZZY_HPP
