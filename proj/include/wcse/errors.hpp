#pragma once

#include <stdexcept>
#include <string>

namespace wcse {

// Base of every error thrown by the library. `is_numeric()` separates
// numerical failures (CLI exit code 2) from validation failures (exit 1).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what, bool numeric = false)
        : std::runtime_error(what), numeric_(numeric) {}
    bool is_numeric() const noexcept { return numeric_; }

private:
    bool numeric_;
};

class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& what) : Error("shape error: " + what) {}
};

class InsufficientDataError : public Error {
public:
    explicit InsufficientDataError(const std::string& what)
        : Error("insufficient data: " + what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("configuration error: " + what) {}
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error("format error: " + what) {}
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual)
        : Error("convergence error: " + what, true), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class SingularCovarianceError : public Error {
public:
    SingularCovarianceError(const std::string& what, double eigenvalue)
        : Error("singular covariance: " + what, true), eigenvalue_(eigenvalue) {}
    double eigenvalue() const noexcept { return eigenvalue_; }

private:
    double eigenvalue_;
};

class DegenerateInputError : public Error {
public:
    explicit DegenerateInputError(const std::string& what)
        : Error("degenerate input: " + what, true) {}
};

class ConsistencyError : public Error {
public:
    explicit ConsistencyError(const std::string& what) : Error("consistency error: " + what) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error("numeric failure: " + what, true) {}
};

}  // namespace wcse
