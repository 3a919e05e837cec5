#pragma once

#include <stdexcept>
#include <string>

namespace waxman {

// Base class for all library errors. `kind()` is a stable machine-readable
// tag used by sweep statuses and the CLI's exit-code mapping.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

// Precondition or argument violations (dimension mismatches, bad flags, ...).
class UsageError : public Error {
public:
    explicit UsageError(const std::string& message) : Error("Usage", message) {}
};

class ZeroVectorError : public Error {
public:
    explicit ZeroVectorError(const std::string& message) : Error("ZeroVector", message) {}
};

// epsilon at or above min(t) - gap_floor: the resolvent is singular or
// too ill-conditioned to factor.
class EpsilonInSpectrumError : public Error {
public:
    EpsilonInSpectrumError(const std::string& message, double min_t)
        : Error("EpsilonInSpectrum", message), min_t_(min_t) {}

    double min_t() const noexcept { return min_t_; }

private:
    double min_t_;
};

// The selected extreme eigenvalue is numerically zero, so lambda = 1/mu
// is unbounded on that branch.
class DegenerateBranchError : public Error {
public:
    explicit DegenerateBranchError(const std::string& message)
        : Error("DegenerateBranch", message) {}
};

// Rayleigh quotient vanished at an iterate; lambda = 1/eps_n is undefined.
class RayleighZeroError : public Error {
public:
    explicit RayleighZeroError(const std::string& message)
        : Error("RayleighZero", message) {}
};

class StartVectorDegenerateError : public Error {
public:
    explicit StartVectorDegenerateError(const std::string& message)
        : Error("StartVectorDegenerate", message) {}
};

// <ref|G_eps V|n> vanished; the reference-vector normalization is undefined.
class RefOrthogonalError : public Error {
public:
    explicit RefOrthogonalError(const std::string& message)
        : Error("RefOrthogonal", message) {}
};

class OutOfRangeError : public Error {
public:
    explicit OutOfRangeError(const std::string& message) : Error("OutOfRange", message) {}
};

class NonMonotoneError : public Error {
public:
    explicit NonMonotoneError(const std::string& message) : Error("NonMonotone", message) {}
};

class TooFewPointsError : public Error {
public:
    explicit TooFewPointsError(const std::string& message)
        : Error("TooFewPoints", message) {}
};

}  // namespace waxman
