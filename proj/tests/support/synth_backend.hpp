#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "qaug/backends.hpp"
#include "qaug/judge.hpp"

namespace qaug_test {

// Deterministic stand-in completions keyed by (backend key, prompt). Distinct
// backends produce distinct candidate sets; the same prompt always yields the
// same bytes, so recorded fixtures replay bit-for-bit.

inline std::string synth_variant(std::uint64_t index, const std::string& question) {
  switch (index % 6) {
    case 0: return question;
    case 1: return "Could you tell me this: " + question;
    case 2: return "To be precise, " + question;
    case 3: return "In plain terms, " + question;
    case 4: return "For the record, " + question;
    default: return "Help me settle this: " + question;
  }
}

inline std::string synth_completion(const std::string& backend_key,
                                    const qaug::RenderedPrompt& prompt,
                                    std::size_t n_candidates) {
  const std::uint64_t seed =
      qaug::fnv1a64(backend_key + "|" + qaug::ensure_digest(prompt));
  const std::string& user = prompt.user_message;

  if (user.rfind("ORIGINAL QUESTION:", 0) == 0) {
    const bool reask = user.size() >= qaug::kScoreReminder.size() &&
                       user.compare(user.size() - qaug::kScoreReminder.size(),
                                    qaug::kScoreReminder.size(),
                                    qaug::kScoreReminder) == 0;
    if (reask) {
      if (seed % 5 == 0) return "QUALITY: 4\n";  // still no CONSISTENCY line
      return "QUALITY: " + std::to_string(1 + (seed >> 8) % 5) +
             "\nCONSISTENCY: " + std::to_string(1 + (seed >> 16) % 5) + "\n";
    }
    if (seed % 7 == 0)
      return "The rewrite looks serviceable but I decline to grade it.\n";
    if (seed % 11 == 0) return "Scoring attempt follows.\nQUALITY: 9\nCONSISTENCY: 2\n";
    static const char* kRationales[3] = {
        "The rewrite keeps the original meaning and reads well.",
        "The rewrite is fluent though slightly wordier than needed.",
        "The rewrite drifts a little but stays answerable."};
    return std::string(kRationales[seed % 3]) + "\nQUALITY: " +
           std::to_string(1 + (seed >> 8) % 5) +
           "\nCONSISTENCY: " + std::to_string(1 + (seed >> 16) % 5) + "\n";
  }

  // Generation prompt: the user message is the input question followed by the
  // output-format directive.
  const std::size_t gap = user.find("\n\n");
  const std::string question =
      gap == std::string::npos ? user : user.substr(0, gap);
  if (seed % 13 == 0) return "I cannot improve this question.\n";
  std::string out;
  for (std::size_t i = 0; i < n_candidates; ++i) {
    out += "Q" + std::to_string(i + 1) + ": " +
           synth_variant(seed % 6 + i, question) + "\n";
  }
  return out;
}

/// Scripted backend that synthesizes (and persists) a fixture on first use.
/// One pass with this backend populates a fixture tree that a plain
/// ScriptedBackend then replays byte-identically.
class SynthesizingBackend : public qaug::Backend {
 public:
  using qaug::Backend::Backend;

 protected:
  std::string fetch(const qaug::GenerationRequest& request) override {
    const std::string digest = qaug::ensure_digest(request.prompt);
    const std::filesystem::path path = config_.fixtures_path / (digest + ".txt");
    std::error_code ec;
    if (std::filesystem::exists(path, ec)) return qaug::read_text_file(path);
    const std::string text =
        synth_completion(config_.fixtures_path.filename().string(), request.prompt,
                         request.n_candidates);
    std::filesystem::create_directories(config_.fixtures_path, ec);
    qaug::write_text_file(path, text);
    return text;
  }
};

inline qaug::BackendFactory synth_backend_factory() {
  return [](const qaug::BackendConfig& config) {
    return std::unique_ptr<qaug::Backend>(new SynthesizingBackend(config));
  };
}

}  // namespace qaug_test
