#pragma once

#include <stdexcept>
#include <string>

namespace pvcast {

/// Malformed or inconsistent input data (CSV schema, timestamps, ranges).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure (non-finite score, non-positive-definite matrix, ...).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace pvcast
