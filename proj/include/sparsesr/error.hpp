#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sparsesr {

/// Machine-parsable error category. The CLI prints it as the `error[<code>]` prefix.
enum class ErrorCode {
    invalid_argument,
    io,
    unsupported_format,
    dimension_mismatch,
    registration_failed,
    no_training_data,
    budget_exhausted,
    corrupt_file,
    version_mismatch,
    checksum,
    non_finite,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::io: return "io";
    case ErrorCode::unsupported_format: return "unsupported-format";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::registration_failed: return "registration-failed";
    case ErrorCode::no_training_data: return "no-training-data";
    case ErrorCode::budget_exhausted: return "budget-exhausted";
    case ErrorCode::corrupt_file: return "corrupt-file";
    case ErrorCode::version_mismatch: return "version-mismatch";
    case ErrorCode::checksum: return "checksum";
    case ErrorCode::non_finite: return "non-finite";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

namespace detail {

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const char* what) {
    if (!condition) fail(code, what);
}

} // namespace detail
} // namespace sparsesr
