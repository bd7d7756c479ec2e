#include "fluxflow/error.hpp"

namespace fluxflow {

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidBound: return "InvalidBound";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InfeasibleSelection: return "InfeasibleSelection";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DuplicateClip: return "DuplicateClip";
    case ErrorCode::EmptyClip: return "EmptyClip";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::UnsupportedDepth: return "UnsupportedDepth";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::MissingRecord: return "MissingRecord";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TooFewFrames: return "TooFewFrames";
    case ErrorCode::ReplayMismatch: return "ReplayMismatch";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
  : std::runtime_error{std::string{to_string(code)} + ": " + message}, code_{code}
{}

InfeasibleSelectionError::InfeasibleSelectionError(std::uint64_t requested, std::uint64_t feasible_max)
  : Error{ErrorCode::InfeasibleSelection,
          "requested " + std::to_string(requested) + " positions but at most " +
              std::to_string(feasible_max) + " are feasible (max=" + std::to_string(feasible_max) + ")"},
    requested_{requested},
    feasible_max_{feasible_max}
{}

ParseError::ParseError(std::size_t line_no, const std::string& message)
  : Error{ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + message}, line_no_{line_no}
{}

} // namespace fluxflow
