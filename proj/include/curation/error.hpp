#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace curation {

enum class ErrorCode {
    invalid_argument,
    dimension_mismatch,
    duplicate_id,
    non_finite,
    bad_magic,
    unsupported_version,
    truncated,
    io,
    degenerate_bandwidth,
    empty_input,
    missing_aux,
    unknown_id,
    parse,
};

std::string_view to_string(ErrorCode code) noexcept;

/// All engine failures are reported through this type; `code()` lets callers
/// (mostly the CLI) map failures without matching on message text.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace curation
