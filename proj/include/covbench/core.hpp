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

// Domain types shared by every stage: version records, the ordinal relevance
// scale, sampling groups, pair classes and the uncertainty vocabulary.

#ifndef COVBENCH_CORE_HPP
#define COVBENCH_CORE_HPP

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "covbench/error.hpp"
#include "json.hpp"

namespace covbench {

// ---------------------------------------------------------------------------
// Relevance

enum class RelevanceLabel : std::uint8_t {
  kNoMusic = 0,
  kNonVersion = 1,
  kVersion = 2,
  kMatch = 3,
};

inline constexpr std::array<RelevanceLabel, 4> kAllRelevanceLabels = {
    RelevanceLabel::kNoMusic, RelevanceLabel::kNonVersion,
    RelevanceLabel::kVersion, RelevanceLabel::kMatch};

constexpr int rank(RelevanceLabel label) { return static_cast<int>(label); }

constexpr std::strong_ordering compare_relevance(RelevanceLabel a,
                                                 RelevanceLabel b) {
  return rank(a) <=> rank(b);
}

/// Binary relevance: Version and Match are relevant.
constexpr bool is_relevant(RelevanceLabel label) {
  return compare_relevance(label, RelevanceLabel::kVersion) >= 0;
}

inline std::string_view to_string(RelevanceLabel label) {
  switch (label) {
    case RelevanceLabel::kNoMusic: return "no_music";
    case RelevanceLabel::kNonVersion: return "non_version";
    case RelevanceLabel::kVersion: return "version";
    case RelevanceLabel::kMatch: return "match";
  }
  return "";
}

inline std::optional<RelevanceLabel> try_parse_relevance(std::string_view s) {
  for (RelevanceLabel label : kAllRelevanceLabels) {
    if (to_string(label) == s) return label;
  }
  return std::nullopt;
}

inline RelevanceLabel parse_relevance(std::string_view s) {
  if (auto label = try_parse_relevance(s)) return *label;
  throw Error(ErrorKind::kSchema,
              "unknown relevance label '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Sources, sampling groups, pair classes

enum class Source : std::uint8_t { kSeed, kWebCandidate };

inline std::string_view to_string(Source source) {
  return source == Source::kSeed ? "seed" : "web_candidate";
}

inline Source parse_source(std::string_view s) {
  if (s == "seed") return Source::kSeed;
  if (s == "web_candidate") return Source::kWebCandidate;
  throw Error(ErrorKind::kSchema, "unknown source '" + std::string(s) + "'");
}

enum class SamplingGroup : std::uint8_t { kDisagrAudio, kDisagrText, kMutualUnc };

inline constexpr std::array<SamplingGroup, 3> kAllSamplingGroups = {
    SamplingGroup::kDisagrAudio, SamplingGroup::kDisagrText,
    SamplingGroup::kMutualUnc};

inline std::string_view to_string(SamplingGroup group) {
  switch (group) {
    case SamplingGroup::kDisagrAudio: return "disagr_audio";
    case SamplingGroup::kDisagrText: return "disagr_text";
    case SamplingGroup::kMutualUnc: return "mutual_unc";
  }
  return "";
}

inline SamplingGroup parse_sampling_group(std::string_view s) {
  for (SamplingGroup group : kAllSamplingGroups) {
    if (to_string(group) == s) return group;
  }
  throw Error(ErrorKind::kSchema,
              "unknown sampling group '" + std::string(s) + "'");
}

enum class PairClass : std::uint8_t {
  kShsPositive,
  kYtMatch,
  kYtPositive,
  kShsNegative,
  kYtNegative,
  kYtNoMusic,
};

inline constexpr std::array<PairClass, 6> kAllPairClasses = {
    PairClass::kShsPositive, PairClass::kYtMatch,    PairClass::kYtPositive,
    PairClass::kShsNegative, PairClass::kYtNegative, PairClass::kYtNoMusic};

inline std::string_view to_string(PairClass c) {
  switch (c) {
    case PairClass::kShsPositive: return "shs_positive";
    case PairClass::kYtMatch: return "yt_match";
    case PairClass::kYtPositive: return "yt_positive";
    case PairClass::kShsNegative: return "shs_negative";
    case PairClass::kYtNegative: return "yt_negative";
    case PairClass::kYtNoMusic: return "yt_no_music";
  }
  return "";
}

inline PairClass parse_pair_class(std::string_view s) {
  for (PairClass c : kAllPairClasses) {
    if (to_string(c) == s) return c;
  }
  throw Error(ErrorKind::kSchema, "unknown pair class '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Uncertainty taxonomy

enum class UncertaintyScope : std::uint8_t { kSong, kVideo, kNone };

inline std::string_view to_string(UncertaintyScope scope) {
  switch (scope) {
    case UncertaintyScope::kSong: return "song";
    case UncertaintyScope::kVideo: return "video";
    case UncertaintyScope::kNone: return "none";
  }
  return "";
}

inline UncertaintyScope parse_uncertainty_scope(std::string_view s) {
  if (s == "song") return UncertaintyScope::kSong;
  if (s == "video") return UncertaintyScope::kVideo;
  if (s == "none") return UncertaintyScope::kNone;
  throw Error(ErrorKind::kSchema, "unknown uncertainty scope '" + std::string(s) + "'");
}

/// Leaf alterations of the cover-version taxonomy, keyed by two-letter code.
inline constexpr std::array<std::pair<std::string_view, std::string_view>, 12>
    kTaxonomyCodes = {{
        {"So", "Multiple Songs"},
        {"No", "Non-Music Noise"},
        {"Ch", "Chunked"},
        {"Fi", "Fidelity"},
        {"St", "Stem-Isolation"},
        {"Ba", "In-Background"},
        {"Tm", "Timing"},
        {"Tp", "Tempo"},
        {"Tb", "Timbre"},
        {"Ke", "Key"},
        {"Me", "Melody"},
        {"Ha", "Harmony"},
    }};

inline bool is_taxonomy_code(std::string_view code) {
  return std::any_of(kTaxonomyCodes.begin(), kTaxonomyCodes.end(),
                     [&](const auto& entry) { return entry.first == code; });
}

struct UncertaintyClass {
  UncertaintyScope scope = UncertaintyScope::kNone;
  std::string name;     // canonical, e.g. "song_drum_only"
  std::string display;  // e.g. "Drum-Only"
  std::optional<std::string> taxonomy_code;

  bool operator==(const UncertaintyClass& other) const = default;
};

/// The controlled vocabulary of uncertainty classes. Starts from the built-in
/// table and can be extended from a vocab.json file.
class Vocabulary {
 public:
  static const Vocabulary& builtin() {
    static const Vocabulary vocab = [] {
      Vocabulary v;
      using S = UncertaintyScope;
      v.add({S::kNone, "none", "None", std::nullopt});
      v.add({S::kSong, "song_difficult_cover", "Difficult Cover", std::nullopt});
      v.add({S::kSong, "song_drum_only", "Drum-Only", "St"});
      v.add({S::kSong, "song_instrumental", "Instrumental", "St"});
      v.add({S::kSong, "song_mashup_remix", "Mashup/Remix", "So"});
      v.add({S::kSong, "song_medley", "Medley", "So"});
      v.add({S::kSong, "song_single_instrument", "Single Instrument", "Tb"});
      v.add({S::kSong, "song_slowed_spedup", "Slowed/Spedup", "Tp"});
      v.add({S::kSong, "song_vocal_only", "Vocal-Only", "St"});
      v.add({S::kSong, "song_same_artist", "Same Artist", std::nullopt});
      v.add({S::kSong, "song_same_genre", "Same Genre", std::nullopt});
      v.add({S::kSong, "song_similar_version", "Similar Version", "Ha"});
      v.add({S::kVideo, "video_low_fidelity", "Low Fidelity", "Fi"});
      v.add({S::kVideo, "video_multiple_versions", "Multiple Versions", "So"});
      v.add({S::kVideo, "video_with_non_music", "With Non-Music", "No"});
      return v;
    }();
    return vocab;
  }

  /// Adds a class; re-adding an identical entry is a no-op, a conflicting one
  /// is an error.
  void add(UncertaintyClass cls) {
    if (cls.name.empty()) {
      throw Error(ErrorKind::kSchema, "uncertainty class with empty name");
    }
    if (cls.taxonomy_code && !is_taxonomy_code(*cls.taxonomy_code)) {
      throw Error(ErrorKind::kSchema, "uncertainty class '" + cls.name +
                                          "' has unknown taxonomy code '" +
                                          *cls.taxonomy_code + "'");
    }
    if (auto it = index_.find(cls.name); it != index_.end()) {
      if (classes_[it->second] == cls) return;
      throw Error(ErrorKind::kSchema,
                  "conflicting definition for uncertainty class '" + cls.name + "'");
    }
    index_.emplace(cls.name, classes_.size());
    classes_.push_back(std::move(cls));
  }

  const UncertaintyClass* find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    return it == index_.end() ? nullptr : &classes_[it->second];
  }

  const UncertaintyClass& at(std::string_view name) const {
    if (const auto* cls = find(name)) return *cls;
    throw Error(ErrorKind::kSchema,
                "unknown uncertainty class '" + std::string(name) + "'");
  }

  const std::vector<UncertaintyClass>& classes() const { return classes_; }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json out;
    auto& relevance = out["relevance"] = nlohmann::ordered_json::array();
    for (RelevanceLabel label : kAllRelevanceLabels) {
      relevance.push_back({{"name", to_string(label)}, {"rank", rank(label)}});
    }
    auto& groups = out["sampling_group"] = nlohmann::ordered_json::array();
    for (SamplingGroup group : kAllSamplingGroups) groups.push_back(to_string(group));
    auto& pairs = out["pair_class"] = nlohmann::ordered_json::array();
    for (PairClass c : kAllPairClasses) pairs.push_back(to_string(c));
    out["source"] = {to_string(Source::kSeed), to_string(Source::kWebCandidate)};
    auto& codes = out["taxonomy_code"] = nlohmann::ordered_json::array();
    for (const auto& [code, label] : kTaxonomyCodes) {
      codes.push_back({{"code", code}, {"name", label}});
    }
    auto& unc = out["uncertainty_class"] = nlohmann::ordered_json::array();
    for (const auto& cls : classes_) {
      nlohmann::ordered_json entry = {{"name", cls.name},
                                      {"scope", to_string(cls.scope)},
                                      {"display", cls.display}};
      entry["taxonomy_code"] = cls.taxonomy_code
                                   ? nlohmann::ordered_json(*cls.taxonomy_code)
                                   : nlohmann::ordered_json(nullptr);
      unc.push_back(std::move(entry));
    }
    return out;
  }

  /// Builtin vocabulary extended with the uncertainty classes listed in a
  /// vocab.json document. Fixed enums in the document must match the builtins.
  static Vocabulary from_json(const nlohmann::json& doc) {
    Vocabulary v = builtin();
    if (doc.contains("relevance")) {
      const auto& relevance = doc.at("relevance");
      if (relevance.size() != kAllRelevanceLabels.size()) {
        throw Error(ErrorKind::kSchema, "vocab.json: relevance scale must have 4 entries");
      }
      for (const auto& entry : relevance) {
        RelevanceLabel label = parse_relevance(entry.at("name").get<std::string>());
        if (entry.at("rank").get<int>() != rank(label)) {
          throw Error(ErrorKind::kSchema, "vocab.json: rank mismatch for '" +
                                              std::string(to_string(label)) + "'");
        }
      }
    }
    if (doc.contains("uncertainty_class")) {
      for (const auto& entry : doc.at("uncertainty_class")) {
        UncertaintyClass cls;
        cls.name = entry.at("name").get<std::string>();
        cls.scope = parse_uncertainty_scope(entry.at("scope").get<std::string>());
        cls.display = entry.value("display", cls.name);
        if (entry.contains("taxonomy_code") && !entry.at("taxonomy_code").is_null()) {
          cls.taxonomy_code = entry.at("taxonomy_code").get<std::string>();
        }
        v.add(std::move(cls));
      }
    }
    return v;
  }

 private:
  std::vector<UncertaintyClass> classes_;
  std::unordered_map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// Versions

/// Natural order on version identifiers: two all-digit ids compare
/// numerically, anything else compares bytewise.
inline std::strong_ordering compare_version_ids(std::string_view a,
                                                std::string_view b) {
  auto all_digits = [](std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
      return c >= '0' && c <= '9';
    });
  };
  if (all_digits(a) && all_digits(b)) {
    auto strip = [](std::string_view s) {
      std::size_t i = s.find_first_not_of('0');
      return i == std::string_view::npos ? std::string_view("0") : s.substr(i);
    };
    std::string_view sa = strip(a);
    std::string_view sb = strip(b);
    if (sa.size() != sb.size()) return sa.size() <=> sb.size();
    if (auto c = sa.compare(sb); c != 0) return c <=> 0;
    return a.compare(b) <=> 0;
  }
  return a.compare(b) <=> 0;
}

struct VersionRecord {
  std::string work_id;
  std::string version_id;
  std::string video_id;
  std::string title;
  std::string performer;
  std::string channel;
  std::int64_t duration_s = 0;
  std::optional<std::string> upload_date;  // ISO yyyy-mm-dd
  Source source = Source::kSeed;

  bool operator==(const VersionRecord& other) const = default;
};

}  // namespace covbench

#endif  // COVBENCH_CORE_HPP
