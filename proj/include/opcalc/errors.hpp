#pragma once

#include <stdexcept>
#include <string>

namespace opcalc {

// Failure modes of the numerical layer. Every throwing operation documents
// which kinds it can raise.
enum class ErrorKind {
    Overflow,
    Divergence,
    Singularity,
    Conditioning,
    Domain,
    Precondition,
    Recognition,
    Causality,
    Truncation,
    GridResolution,
    SupportViolation,
    Unbounded,
    Stall,
    Parse,
    Io,
};

class NumericError : public std::runtime_error {
public:
    NumericError(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
    throw NumericError(kind, msg);
}

} // namespace opcalc
