#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace recodmd {

enum class ErrorKind {
    InvalidInput,
    InvalidShape,
    InvalidRank,
    NumericalFailure,
    InsufficientData,
    MissingControl,
    InvalidEmbedding,
    SchemaError,
    ParseError,
    ConfigError,
    EmptyExperiment,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so
/// callers (the CLI in particular) can map it to an exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidInput: return "InvalidInput";
        case ErrorKind::InvalidShape: return "InvalidShape";
        case ErrorKind::InvalidRank: return "InvalidRank";
        case ErrorKind::NumericalFailure: return "NumericalFailure";
        case ErrorKind::InsufficientData: return "InsufficientData";
        case ErrorKind::MissingControl: return "MissingControl";
        case ErrorKind::InvalidEmbedding: return "InvalidEmbedding";
        case ErrorKind::SchemaError: return "SchemaError";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::EmptyExperiment: return "EmptyExperiment";
    }
    return "Unknown";
}

}  // namespace recodmd
