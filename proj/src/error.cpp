#include "curation/error.hpp"

namespace curation {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::dimension_mismatch: return "dimension_mismatch";
        case ErrorCode::duplicate_id: return "duplicate_id";
        case ErrorCode::non_finite: return "non_finite";
        case ErrorCode::bad_magic: return "bad_magic";
        case ErrorCode::unsupported_version: return "unsupported_version";
        case ErrorCode::truncated: return "truncated";
        case ErrorCode::io: return "io";
        case ErrorCode::degenerate_bandwidth: return "degenerate_bandwidth";
        case ErrorCode::empty_input: return "empty_input";
        case ErrorCode::missing_aux: return "missing_aux";
        case ErrorCode::unknown_id: return "unknown_id";
        case ErrorCode::parse: return "parse";
    }
    return "unknown";
}

}  // namespace curation
