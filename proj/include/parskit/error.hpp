#pragma once

#include <stdexcept>
#include <string>

namespace parskit {

// Every failure mode the library reports. CLI code maps a subset of these
// onto process exit codes; tests match on the code rather than the message.
enum class errc {
  invalid_encoding,
  empty_corpus,
  target_too_small,
  unknown_id,
  incompatible_specials,
  duplicate_id_corruption,
  shrink_not_supported,
  shape_mismatch,
  invalid_range,
  zero_total,
  empty_input,
  dimension_mismatch,
  empty_sequence,
  empty_outputs,
  range_violation,
  invalid_record,
  invalid_config,
  io_error,
};

inline const char* errc_name(errc code) {
  switch (code) {
    case errc::invalid_encoding: return "invalid_encoding";
    case errc::empty_corpus: return "empty_corpus";
    case errc::target_too_small: return "target_too_small";
    case errc::unknown_id: return "unknown_id";
    case errc::incompatible_specials: return "incompatible_specials";
    case errc::duplicate_id_corruption: return "duplicate_id_corruption";
    case errc::shrink_not_supported: return "shrink_not_supported";
    case errc::shape_mismatch: return "shape_mismatch";
    case errc::invalid_range: return "invalid_range";
    case errc::zero_total: return "zero_total";
    case errc::empty_input: return "empty_input";
    case errc::dimension_mismatch: return "dimension_mismatch";
    case errc::empty_sequence: return "empty_sequence";
    case errc::empty_outputs: return "empty_outputs";
    case errc::range_violation: return "range_violation";
    case errc::invalid_record: return "invalid_record";
    case errc::invalid_config: return "invalid_config";
    case errc::io_error: return "io_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace parskit
