#pragma once

#include <stdexcept>
#include <string>

namespace sdos {

// Matrix passed to cholesky() has a non-positive or non-finite pivot.
struct NotPositiveDefinite : std::runtime_error {
    explicit NotPositiveDefinite(const std::string& what) : std::runtime_error(what) {}
};

// -H could not be made positive definite even after the jitter schedule.
struct CurvatureFailure : std::runtime_error {
    explicit CurvatureFailure(const std::string& what) : std::runtime_error(what) {}
};

// A forward evaluation produced NaN or +-inf.
struct NonFiniteValue : std::runtime_error {
    explicit NonFiniteValue(const std::string& what) : std::runtime_error(what) {}
};

// Constrained value sits on or outside its support boundary.
struct ConstraintViolation : std::runtime_error {
    explicit ConstraintViolation(const std::string& what) : std::runtime_error(what) {}
};

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyDataset : std::runtime_error {
    explicit EmptyDataset(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sdos
