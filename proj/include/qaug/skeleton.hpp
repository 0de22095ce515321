#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "qaug/corpus.hpp"

namespace qaug {

enum class SkeletonSource { LogicalForm, QuestionText };

inline const char* skeleton_source_name(SkeletonSource source) {
  return source == SkeletonSource::LogicalForm ? "logical_form" : "question_text";
}

inline SkeletonSource parse_skeleton_source(const std::string& name) {
  if (name == "logical_form") return SkeletonSource::LogicalForm;
  if (name == "question_text") return SkeletonSource::QuestionText;
  fail(ErrorCode::malformed_line, "unknown skeleton source \"" + name + "\"");
}

/// Token sequence used for demonstration retrieval: function-identifier runs
/// of the logical form when one exists, plain word tokens of the question
/// text otherwise.
struct Skeleton {
  std::vector<std::string> tokens;
  SkeletonSource source = SkeletonSource::QuestionText;

  friend bool operator==(const Skeleton&, const Skeleton&) = default;
};

using Bigram = std::pair<std::string, std::string>;

struct BigramSet {
  std::set<Bigram> pairs;

  friend bool operator==(const BigramSet&, const BigramSet&) = default;
};

namespace detail {

// Lowercased maximal runs of the given character class (ASCII).
template <typename Pred>
inline std::vector<std::string> tokenize(const std::string& text, Pred is_token_char) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (is_token_char(static_cast<unsigned char>(c))) {
      current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

}  // namespace detail

inline Skeleton extract_skeleton(const QuestionRecord& record) {
  Skeleton skeleton;
  if (record.logical_form) {
    skeleton.source = SkeletonSource::LogicalForm;
    skeleton.tokens = detail::tokenize(*record.logical_form, [](unsigned char c) {
      return std::isalnum(c) != 0 || c == '_';
    });
  } else {
    skeleton.source = SkeletonSource::QuestionText;
    skeleton.tokens = detail::tokenize(record.question, [](unsigned char c) {
      return std::isalnum(c) != 0;
    });
  }
  return skeleton;
}

inline BigramSet bigrams(const Skeleton& skeleton) {
  BigramSet set;
  for (std::size_t i = 0; i + 1 < skeleton.tokens.size(); ++i)
    set.pairs.emplace(skeleton.tokens[i], skeleton.tokens[i + 1]);
  return set;
}

/// |input ∩ sample| / |sample|; 0 when the sample has no bigrams. The measure
/// is deliberately normalized by the stored sample, so it is not symmetric.
inline double overlap_score(const BigramSet& input, const BigramSet& sample) {
  if (sample.pairs.empty()) return 0.0;
  std::size_t shared = 0;
  for (const Bigram& pair : sample.pairs)
    if (input.pairs.count(pair)) ++shared;
  return static_cast<double>(shared) / static_cast<double>(sample.pairs.size());
}

/// The min(m, |candidates|) entry ids with the highest overlap against the
/// input, ordered by descending score; ties keep earlier list position.
inline std::vector<std::string> rank_candidates(
    const Skeleton& input,
    const std::vector<std::pair<std::string, Skeleton>>& candidates,
    std::size_t m) {
  const BigramSet input_bigrams = bigrams(input);
  std::vector<std::pair<double, std::size_t>> scored;  // (score, position)
  scored.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    scored.emplace_back(overlap_score(input_bigrams, bigrams(candidates[i].second)), i);
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  const std::size_t take = std::min(m, scored.size());
  std::vector<std::string> ids;
  ids.reserve(take);
  for (std::size_t i = 0; i < take; ++i) ids.push_back(candidates[scored[i].second].first);
  return ids;
}

}  // namespace qaug
