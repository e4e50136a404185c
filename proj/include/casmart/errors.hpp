#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace casmart {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument: dimension mismatch, non-finite value, empty input.
class InputError : public Error {
public:
    using Error::Error;
};

/// Precondition on call order or object state was violated.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// The covariance matrix could not be factorized even after jitter escalation.
class FitError : public Error {
public:
    FitError(const std::string& what, std::vector<double> jitters)
        : Error(what), attempted_jitter_(std::move(jitters)) {}

    const std::vector<double>& attempted_jitter() const noexcept { return attempted_jitter_; }

private:
    std::vector<double> attempted_jitter_;
};

/// Every hyperparameter restart failed.
class OptimizationError : public Error {
public:
    using Error::Error;
};

/// A predictive distribution had zero total variance where a density was required.
class DegenerateDistributionError : public Error {
public:
    using Error::Error;
};

/// A request exceeds what the implementation provisions (e.g. Sobol dimension).
class CapabilityError : public Error {
public:
    using Error::Error;
};

/// A finite candidate pool ran out of unsampled points.
class ExhaustionError : public Error {
public:
    using Error::Error;
};

/// ask/tell called out of order or with a point that was never asked.
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// A data table is missing required columns.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A data table has too few usable rows for the requested splits.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration (unknown names, out-of-range settings).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace casmart
