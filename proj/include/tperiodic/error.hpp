#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace tperiodic {

enum class ErrorKind {
    InvalidParameter,
    ZeroAverage,
    Syntax,
    UnknownIdentifier,
    Arity,
    Evaluation,
    Blowup,
    DomainEscape,
    Admissibility,
    Resolution,
    Degeneracy,
    NoConvergence,
    Consistency,
    Config,
};

[[nodiscard]] constexpr const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidParameter: return "invalid_parameter";
        case ErrorKind::ZeroAverage: return "zero_average";
        case ErrorKind::Syntax: return "syntax";
        case ErrorKind::UnknownIdentifier: return "unknown_identifier";
        case ErrorKind::Arity: return "arity";
        case ErrorKind::Evaluation: return "evaluation";
        case ErrorKind::Blowup: return "blowup";
        case ErrorKind::DomainEscape: return "domain_escape";
        case ErrorKind::Admissibility: return "admissibility";
        case ErrorKind::Resolution: return "resolution";
        case ErrorKind::Degeneracy: return "degeneracy";
        case ErrorKind::NoConvergence: return "no_convergence";
        case ErrorKind::Consistency: return "consistency";
        case ErrorKind::Config: return "config";
    }
    return "unknown";
}

/// Single exception type for the library. The kind drives CLI exit codes;
/// `offset` is set for parse errors and for evaluation errors (source byte
/// offset of the offending node).
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message,
          std::optional<std::size_t> offset = std::nullopt)
        : std::runtime_error(message), kind_(kind), offset_(offset) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }
    [[nodiscard]] std::optional<std::size_t> offset() const noexcept { return offset_; }

private:
    ErrorKind kind_;
    std::optional<std::size_t> offset_;
};

}  // namespace tperiodic
