#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qaug/pools.hpp"
#include "qaug/util.hpp"

namespace qaug {

enum class PromptSetting { InstructionsOnly, ExamplesOnly, InstructionsAndExamples };

/// Machine name used in configs, flags, and report files.
inline const char* prompt_setting_name(PromptSetting setting) {
  switch (setting) {
    case PromptSetting::InstructionsOnly: return "instructions";
    case PromptSetting::ExamplesOnly: return "examples";
    case PromptSetting::InstructionsAndExamples: return "both";
  }
  return "both";
}

/// Human-facing row label in tables and charts.
inline const char* prompt_setting_label(PromptSetting setting) {
  switch (setting) {
    case PromptSetting::InstructionsOnly: return "instructions-only";
    case PromptSetting::ExamplesOnly: return "examples-only";
    case PromptSetting::InstructionsAndExamples: return "instructions+examples";
  }
  return "instructions+examples";
}

inline PromptSetting parse_prompt_setting(const std::string& name) {
  if (name == "instructions") return PromptSetting::InstructionsOnly;
  if (name == "examples") return PromptSetting::ExamplesOnly;
  if (name == "both") return PromptSetting::InstructionsAndExamples;
  fail(ErrorCode::bad_config,
       "unknown setting \"" + name + "\" (expected instructions, examples, or both)");
}

inline bool setting_has_instructions(PromptSetting setting) {
  return setting != PromptSetting::ExamplesOnly;
}

inline bool setting_has_examples(PromptSetting setting) {
  return setting != PromptSetting::InstructionsOnly;
}

/// Contrastive prompt parts prior to rendering.
struct PromptSpec {
  std::optional<std::string> instruction;
  std::vector<std::string> positives;
  std::vector<std::string> negatives;
  std::string input_question;
};

struct RenderedPrompt {
  std::string system_message;
  std::string user_message;
  std::string digest;
};

inline constexpr std::string_view kBetterHeader = "BETTER QUESTIONS:";
inline constexpr std::string_view kWorseHeader = "WORSE QUESTIONS:";

// Embedded copies of the files under templates/. A configured template
// directory overrides them; the defaults keep the library usable from any
// working directory.
inline constexpr std::string_view kDefaultGenerateTemplate =
    "You rewrite questions. Rewrite the question you are given as {n_candidates} new questions.\n"
    "Every rewrite must:\n"
    "- be phrased as a question,\n"
    "- ask for exactly the same answer as the original,\n"
    "- read more clearly and use richer language than the original, so it suits a human reader.\n"
    "When the prompt lists better and worse questions, work out what separates the better ones "
    "from the worse ones and make every rewrite match the quality of the better ones.\n";

inline constexpr std::string_view kDefaultScoreTemplate =
    "ORIGINAL QUESTION:\n"
    "{original_question}\n"
    "{logical_form_block}\n"
    "CANDIDATE REWRITE:\n"
    "{candidate}\n";

struct PromptTemplates {
  std::string generate = std::string(kDefaultGenerateTemplate);
  std::string score = std::string(kDefaultScoreTemplate);
};

/// Reads generate.txt and score.txt from a template directory.
inline PromptTemplates load_templates(const std::filesystem::path& dir) {
  PromptTemplates templates;
  templates.generate = read_text_file(dir / "generate.txt");
  templates.score = read_text_file(dir / "score.txt");
  return templates;
}

/// Stable hex digest over both messages; keys scripted-backend fixtures.
inline std::string prompt_digest(std::string_view system_message,
                                 std::string_view user_message) {
  std::uint64_t hash = fnv1a64(system_message);
  hash = fnv1a64("\x1f", hash);
  hash = fnv1a64(user_message, hash);
  return hex64(hash);
}

inline std::string prompt_digest(const RenderedPrompt& prompt) {
  return prompt_digest(prompt.system_message, prompt.user_message);
}

inline void validate_prompt_spec(const PromptSpec& spec, PromptSetting setting) {
  if (!setting_has_examples(setting) &&
      (!spec.positives.empty() || !spec.negatives.empty()))
    fail(ErrorCode::setting_violation,
         "demonstrations supplied under the instructions-only setting");
  if (setting_has_instructions(setting) &&
      (!spec.instruction || trim(*spec.instruction).empty()))
    fail(ErrorCode::setting_violation,
         "instruction text required but absent for this setting");
  if (!setting_has_instructions(setting) && spec.instruction)
    fail(ErrorCode::setting_violation,
         "instruction text supplied under the examples-only setting");
}

namespace detail {

inline std::string demo_block(std::string_view header,
                              const std::vector<std::string>& demos) {
  std::string block(header);
  for (const std::string& text : demos) {
    block += "\n- ";
    block += text;
  }
  return block;
}

inline std::string output_directive(std::size_t n_candidates) {
  return "Reply with " + std::to_string(n_candidates) +
         " rewritten questions, one per line. Prefix each line with Q1:, Q2:, and so on.";
}

}  // namespace detail

/// Renders the contrastive prompt. The system message carries the instruction
/// block and/or the demonstration blocks per the setting; the user message is
/// the input question followed by the output-format directive.
inline RenderedPrompt render_prompt(const PromptSpec& spec, PromptSetting setting,
                                    std::size_t n_candidates) {
  validate_prompt_spec(spec, setting);
  std::vector<std::string> sections;
  if (setting_has_instructions(setting)) {
    std::string instruction =
        replace_all(*spec.instruction, "{n_candidates}", std::to_string(n_candidates));
    instruction = replace_all(std::move(instruction), "{input_question}", spec.input_question);
    while (!instruction.empty() && instruction.back() == '\n') instruction.pop_back();
    sections.push_back(std::move(instruction));
  }
  if (setting_has_examples(setting)) {
    sections.push_back(detail::demo_block(kBetterHeader, spec.positives));
    sections.push_back(detail::demo_block(kWorseHeader, spec.negatives));
  }
  RenderedPrompt prompt;
  for (std::size_t i = 0; i < sections.size(); ++i) {
    if (i > 0) prompt.system_message += "\n\n";
    prompt.system_message += sections[i];
  }
  prompt.user_message =
      spec.input_question + "\n\n" + detail::output_directive(n_candidates);
  prompt.digest = prompt_digest(prompt);
  return prompt;
}

/// Builds the generation prompt from pool demonstrations. Demo texts render
/// without their scores.
inline RenderedPrompt build_generation_prompt(PromptSetting setting,
                                              const std::string& input_question,
                                              const std::vector<PoolEntry>& positives,
                                              const std::vector<PoolEntry>& negatives,
                                              std::size_t n_candidates,
                                              const PromptTemplates& templates) {
  if (n_candidates < 1)
    fail(ErrorCode::bad_config, "n_candidates must be at least 1");
  PromptSpec spec;
  if (setting_has_instructions(setting)) spec.instruction = templates.generate;
  for (const PoolEntry& entry : positives) spec.positives.push_back(entry.text);
  for (const PoolEntry& entry : negatives) spec.negatives.push_back(entry.text);
  spec.input_question = input_question;
  return render_prompt(spec, setting, n_candidates);
}

}  // namespace qaug
