#pragma once

#include <stdexcept>
#include <string>

namespace qaug {

enum class ErrorCode {
  // configuration / usage
  bad_config,
  scorer_not_disjoint,
  fraction_out_of_range,
  setting_violation,
  no_samples,
  // data / IO / transport
  io_failure,
  malformed_line,
  duplicate_id,
  empty_question,
  empty_corpus,
  invariant_violation,
  label_mismatch,
  duplicate_entry,
  corrupt_pool,
  fixture_missing,
  transport,
  auth,
  empty_completion,
  missing_score,
  out_of_range,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::bad_config: return "bad_config";
    case ErrorCode::scorer_not_disjoint: return "scorer_not_disjoint";
    case ErrorCode::fraction_out_of_range: return "fraction_out_of_range";
    case ErrorCode::setting_violation: return "setting_violation";
    case ErrorCode::no_samples: return "no_samples";
    case ErrorCode::io_failure: return "io_failure";
    case ErrorCode::malformed_line: return "malformed_line";
    case ErrorCode::duplicate_id: return "duplicate_id";
    case ErrorCode::empty_question: return "empty_question";
    case ErrorCode::empty_corpus: return "empty_corpus";
    case ErrorCode::invariant_violation: return "invariant_violation";
    case ErrorCode::label_mismatch: return "label_mismatch";
    case ErrorCode::duplicate_entry: return "duplicate_entry";
    case ErrorCode::corrupt_pool: return "corrupt_pool";
    case ErrorCode::fixture_missing: return "fixture_missing";
    case ErrorCode::transport: return "transport";
    case ErrorCode::auth: return "auth";
    case ErrorCode::empty_completion: return "empty_completion";
    case ErrorCode::missing_score: return "missing_score";
    case ErrorCode::out_of_range: return "out_of_range";
  }
  return "unknown";
}

// Exit class used by the CLI: 2 for configuration/usage errors, 3 for
// runtime IO, data, and transport errors.
inline int exit_class(ErrorCode code) {
  switch (code) {
    case ErrorCode::bad_config:
    case ErrorCode::scorer_not_disjoint:
    case ErrorCode::fraction_out_of_range:
    case ErrorCode::setting_violation:
    case ErrorCode::no_samples:
      return 2;
    default:
      return 3;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace qaug
