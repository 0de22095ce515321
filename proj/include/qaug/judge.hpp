#pragma once

#include <algorithm>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qaug/backends.hpp"
#include "qaug/corpus.hpp"
#include "qaug/pools.hpp"
#include "qaug/prompt.hpp"

namespace qaug {

/// A generated question with its judge verdict: s rates question quality,
/// w rates semantic consistency with the source question, both 1..5.
struct ScoredCandidate {
  std::string text;
  int s = 1;
  int w = 1;
  std::string rationale;
  ModelId generator;
  std::string source_question_id;
  bool parse_failure = false;

  friend bool operator==(const ScoredCandidate&, const ScoredCandidate&) = default;
};

inline constexpr std::string_view kScoreSystemMessage =
    "You grade a rewritten question against the original question it came from. "
    "First write a brief evaluation, a sentence or two, covering how well-formed "
    "the rewrite is and how faithfully it keeps the original's meaning and answer. "
    "Then finish your reply with exactly these two lines, each carrying an integer "
    "from 1 to 5:\nQUALITY: <1-5>\nCONSISTENCY: <1-5>";

inline constexpr std::string_view kScoreReminder =
    "Answer with the two score lines only.";

/// Deterministic chain-of-thought scoring prompt for one candidate.
inline RenderedPrompt build_scoring_prompt(const QuestionRecord& original,
                                           const std::string& candidate,
                                           const PromptTemplates& templates) {
  std::string logical_form_block;
  if (original.logical_form)
    logical_form_block = "LOGICAL FORM:\n" + *original.logical_form + "\n";
  std::string body = replace_all(templates.score, "{original_question}", original.question);
  body = replace_all(std::move(body), "{logical_form_block}", logical_form_block);
  body = replace_all(std::move(body), "{candidate}", candidate);
  RenderedPrompt prompt;
  prompt.system_message = std::string(kScoreSystemMessage);
  prompt.user_message = std::move(body);
  prompt.digest = prompt_digest(prompt);
  return prompt;
}

/// The re-ask variant sent after an unparseable completion.
inline RenderedPrompt append_score_reminder(RenderedPrompt prompt) {
  prompt.user_message += "\n\n";
  prompt.user_message += kScoreReminder;
  prompt.digest = prompt_digest(prompt);
  return prompt;
}

struct ParsedScores {
  int s = 0;
  int w = 0;
  std::string rationale;
};

namespace detail {

// A score line is "<LABEL>: <integer>" with optional surrounding whitespace.
inline std::optional<long> match_score_line(std::string_view line, std::string_view label) {
  std::size_t i = 0;
  while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
  if (line.compare(i, label.size(), label) != 0) return std::nullopt;
  i += label.size();
  if (i >= line.size() || line[i] != ':') return std::nullopt;
  ++i;
  while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
  const std::size_t value_start = i;
  if (i < line.size() && (line[i] == '+' || line[i] == '-')) ++i;
  const std::size_t digits_start = i;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i == digits_start) return std::nullopt;
  const std::size_t value_end = i;
  while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
  if (i != line.size()) return std::nullopt;
  return std::strtol(std::string(line.substr(value_start, value_end - value_start)).c_str(),
                     nullptr, 10);
}

}  // namespace detail

/// Recovers (s, w, rationale) from a judge completion. The last QUALITY line
/// and the last CONSISTENCY line win; the rationale is everything before the
/// first score line of either kind.
inline ParsedScores parse_scores(std::string_view raw_text) {
  const std::vector<std::string> lines = split_lines(raw_text);
  std::optional<long> quality;
  std::optional<long> consistency;
  std::size_t first_score_line = lines.size();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (auto value = detail::match_score_line(lines[i], "QUALITY")) {
      quality = value;
      first_score_line = std::min(first_score_line, i);
    } else if (auto value = detail::match_score_line(lines[i], "CONSISTENCY")) {
      consistency = value;
      first_score_line = std::min(first_score_line, i);
    }
  }
  if (!quality) fail(ErrorCode::missing_score, "no QUALITY line in judge completion");
  if (!consistency) fail(ErrorCode::missing_score, "no CONSISTENCY line in judge completion");
  if (*quality < 1 || *quality > 5)
    fail(ErrorCode::out_of_range, "quality score " + std::to_string(*quality) + " outside 1..5");
  if (*consistency < 1 || *consistency > 5)
    fail(ErrorCode::out_of_range,
         "consistency score " + std::to_string(*consistency) + " outside 1..5");
  ParsedScores parsed;
  parsed.s = static_cast<int>(*quality);
  parsed.w = static_cast<int>(*consistency);
  std::string rationale;
  for (std::size_t i = 0; i < first_score_line; ++i) {
    if (i > 0) rationale += '\n';
    rationale += lines[i];
  }
  while (!rationale.empty() &&
         std::isspace(static_cast<unsigned char>(rationale.back())))
    rationale.pop_back();
  parsed.rationale = std::move(rationale);
  return parsed;
}

/// Positive iff both scores exceed 3.
inline PoolLabel route(int s, int w) {
  if (s < 1 || s > 5 || w < 1 || w > 5)
    fail(ErrorCode::out_of_range, "scores s=" + std::to_string(s) + " w=" +
                                      std::to_string(w) + " outside 1..5");
  return (s > 3 && w > 3) ? PoolLabel::Positive : PoolLabel::Negative;
}

struct ScoringItem {
  QuestionRecord original;
  std::string candidate;
  ModelId generator;
};

/// Scores one candidate, re-asking once on an unparseable completion and
/// falling back to (1, 1) with the parse-failure flag after that.
inline ScoredCandidate score_one(Backend& scorer, const ScoringItem& item,
                                 const PromptTemplates& templates,
                                 double temperature, std::size_t max_tokens) {
  ScoredCandidate scored;
  scored.text = item.candidate;
  scored.generator = item.generator;
  scored.source_question_id = item.original.id;

  const RenderedPrompt prompt = build_scoring_prompt(item.original, item.candidate, templates);
  GenerationRequest request{prompt, 1, temperature, max_tokens};
  auto attempt = [&](const RenderedPrompt& p) -> std::optional<ParsedScores> {
    GenerationRequest r = request;
    r.prompt = p;
    try {
      return parse_scores(scorer.generate(r).raw_text);
    } catch (const Error&) {
      return std::nullopt;
    }
  };

  std::optional<ParsedScores> parsed = attempt(prompt);
  if (!parsed) parsed = attempt(append_score_reminder(prompt));
  if (parsed) {
    scored.s = parsed->s;
    scored.w = parsed->w;
    scored.rationale = std::move(parsed->rationale);
  } else {
    scored.s = 1;
    scored.w = 1;
    scored.parse_failure = true;
  }
  return scored;
}

/// Scores candidates with a shared scorer backend; output order equals input
/// order regardless of scheduling.
inline std::vector<ScoredCandidate> score_candidates_with(
    Backend& scorer, const std::vector<ScoringItem>& items,
    const PromptTemplates& templates, std::size_t workers,
    double temperature = 0.0, std::size_t max_tokens = 256) {
  std::vector<ScoredCandidate> results(items.size());
  run_indexed(items.size(), workers, [&](std::size_t i) {
    results[i] = score_one(scorer, items[i], templates, temperature, max_tokens);
  });
  return results;
}

inline void require_scorer_disjoint(const ModelId& scorer,
                                    const std::vector<ModelId>& generators) {
  if (std::find(generators.begin(), generators.end(), scorer) != generators.end())
    fail(ErrorCode::scorer_not_disjoint,
         "scorer model \"" + scorer.name + "\" is also a generator");
}

/// Full scoring pass: rejects a scorer that appears in the generator
/// registry, then scores every candidate in input order.
inline std::vector<ScoredCandidate> score_candidates(
    const BackendConfig& scorer, const std::vector<ScoringItem>& items,
    const std::vector<ModelId>& generator_models, const PromptTemplates& templates,
    const BackendFactory& factory = default_backend_factory(),
    std::size_t workers = 1) {
  require_scorer_disjoint(scorer.model, generator_models);
  for (const ScoringItem& item : items)
    if (item.generator == scorer.model)
      fail(ErrorCode::scorer_not_disjoint,
           "scorer model \"" + scorer.model.name + "\" generated candidate input");
  auto backend = factory(scorer);
  return score_candidates_with(*backend, items, templates, workers);
}

}  // namespace qaug
