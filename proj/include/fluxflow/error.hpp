#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fluxflow {

enum class ErrorCode {
    InvalidBound,
    InvalidSpec,
    InfeasibleSelection,
    LengthMismatch,
    ParseError,
    DuplicateClip,
    EmptyClip,
    UnsupportedFormat,
    UnsupportedDepth,
    TruncatedFile,
    MissingRecord,
    DimensionMismatch,
    TooFewFrames,
    ReplayMismatch,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Base of every error thrown by the library. The message is prefixed with
// the code name so that stderr output is self-describing.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

class InfeasibleSelectionError : public Error {
public:
    InfeasibleSelectionError(std::uint64_t requested, std::uint64_t feasible_max);

    std::uint64_t requested() const noexcept { return requested_; }
    std::uint64_t feasible_max() const noexcept { return feasible_max_; }

private:
    std::uint64_t requested_;
    std::uint64_t feasible_max_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line_no, const std::string& message);

    std::size_t line_no() const noexcept { return line_no_; }

private:
    std::size_t line_no_;
};

} // namespace fluxflow
