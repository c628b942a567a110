#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gendisc {

enum class ErrorCode {
    InvalidModel,
    InvalidSchedule,
    InvalidArgument,
    FailsA3,
    FailsB1,
    NotErgodic,
    NoConvergence,
    TooLarge,
    GammaZero,
    B2Fails,
    NoCertificate,
    EmptySet,
    PreconditionGamma,
    AssertionFail,
    ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Library-wide exception. Every failure path named by an operation's
/// contract raises one of these with the matching code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidModel: return "INVALID_MODEL";
    case ErrorCode::InvalidSchedule: return "INVALID_SCHEDULE";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::FailsA3: return "FAILS_A3";
    case ErrorCode::FailsB1: return "FAILS_B1";
    case ErrorCode::NotErgodic: return "NOT_ERGODIC";
    case ErrorCode::NoConvergence: return "NO_CONVERGENCE";
    case ErrorCode::TooLarge: return "TOO_LARGE";
    case ErrorCode::GammaZero: return "GAMMA_ZERO";
    case ErrorCode::B2Fails: return "B2_FAILS";
    case ErrorCode::NoCertificate: return "NO_CERTIFICATE";
    case ErrorCode::EmptySet: return "EMPTY_SET";
    case ErrorCode::PreconditionGamma: return "PRECONDITION_GAMMA";
    case ErrorCode::AssertionFail: return "ASSERTION_FAIL";
    case ErrorCode::ConfigError: return "CONFIG_ERROR";
    }
    return "UNKNOWN";
}

} // namespace gendisc
