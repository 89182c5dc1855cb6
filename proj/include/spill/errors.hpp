#pragma once

#include <stdexcept>
#include <string>

namespace spill {

/// Base class for all library errors. CLI maps these to exit code 1
/// (runtime failure) unless noted otherwise.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or unusable input file (CSV/JSON).
class IngestError : public Error {
public:
    using Error::Error;
};

/// Too few observations for the requested estimation or window.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// Regression design rank-deficient beyond tolerance.
class SingularDesignError : public Error {
public:
    using Error::Error;
};

/// Zero residual variance or zero FEVD row sum.
class DegenerateVarianceError : public Error {
public:
    using Error::Error;
};

/// Asset order / shape mismatch between inputs that must align.
class AlignmentError : public Error {
public:
    using Error::Error;
};

/// Invalid rolling-window plan (w > T, zero step, ...).
class PlanError : public Error {
public:
    using Error::Error;
};

/// Every window of a rolling run failed.
class RunError : public Error {
public:
    using Error::Error;
};

/// Argument outside its mathematical domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Synthetic control donor pool too small.
class DonorPoolError : public Error {
public:
    using Error::Error;
};

/// Invalid data-generating-process specification.
class SpecError : public Error {
public:
    using Error::Error;
};

} // namespace spill
