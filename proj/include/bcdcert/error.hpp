#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bcdcert {

/// Failure categories surfaced by the library. Names are stable and appear
/// verbatim in CLI output and summary files.
enum class Errc {
    DimensionMismatch,
    NonFiniteValue,
    MissingLipschitzOracle,
    MissingExactMinimizer,
    SufficientDecreaseViolated,
    BacktrackExhausted,
    InnerSolveFailed,
    OutOfOrderRecord,
    EmptyHistory,
    InsufficientHistory,
    DegenerateFit,
    DegenerateRegion,
    NoConvergence,
    SingularSystem,
    UnknownFamily,
    InvalidDimensions,
    InvalidArgument,
    ConfigError,
    SchemaMismatch,
    TamperDetected,
    IoError,
};

inline constexpr std::string_view to_string(Errc code) noexcept
{
    switch (code) {
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::MissingLipschitzOracle: return "MissingLipschitzOracle";
    case Errc::MissingExactMinimizer: return "MissingExactMinimizer";
    case Errc::SufficientDecreaseViolated: return "SufficientDecreaseViolated";
    case Errc::BacktrackExhausted: return "BacktrackExhausted";
    case Errc::InnerSolveFailed: return "InnerSolveFailed";
    case Errc::OutOfOrderRecord: return "OutOfOrderRecord";
    case Errc::EmptyHistory: return "EmptyHistory";
    case Errc::InsufficientHistory: return "InsufficientHistory";
    case Errc::DegenerateFit: return "DegenerateFit";
    case Errc::DegenerateRegion: return "DegenerateRegion";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::UnknownFamily: return "UnknownFamily";
    case Errc::InvalidDimensions: return "InvalidDimensions";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ConfigError: return "ConfigError";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::TamperDetected: return "TamperDetected";
    case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error
{
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message),
          code_(code)
    {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace bcdcert
