#pragma once

#include <stdexcept>
#include <string>

namespace srcsnn {

enum class Errc {
  non_finite,
  integer_overflow,
  dimension_mismatch,
  invalid_argument,
  bad_magic,
  malformed_header,
  truncated,
  empty_trace,
  empty_dataset,
  shape_mismatch,
  unknown_matrix,
  non_finite_weight,
  degenerate_scale,
  hash_mismatch,
  io,
  config,
};

inline const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::non_finite: return "non-finite dynamics";
    case Errc::integer_overflow: return "integer overflow";
    case Errc::dimension_mismatch: return "dimension mismatch";
    case Errc::invalid_argument: return "invalid argument";
    case Errc::bad_magic: return "bad magic";
    case Errc::malformed_header: return "malformed header";
    case Errc::truncated: return "truncated";
    case Errc::empty_trace: return "empty trace";
    case Errc::empty_dataset: return "empty dataset";
    case Errc::shape_mismatch: return "shape mismatch";
    case Errc::unknown_matrix: return "unknown matrix id";
    case Errc::non_finite_weight: return "non-finite weight";
    case Errc::degenerate_scale: return "degenerate scale";
    case Errc::hash_mismatch: return "hash mismatch";
    case Errc::io: return "i/o error";
    case Errc::config: return "config error";
  }
  return "unknown error";
}

// Every library failure is reported as an Error carrying a stable code; the
// message starts with the code's text so callers can grep logs for it.
class Error : public std::runtime_error {
 public:
  explicit Error(Errc code, const std::string& detail = {})
      : std::runtime_error(detail.empty() ? std::string(to_string(code))
                                          : std::string(to_string(code)) + ": " + detail),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace srcsnn
