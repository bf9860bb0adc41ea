#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ksm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class ErrorCode {
    DimensionMismatch,
    InvalidArgument,
    InvalidConfig,
    NotPositiveDefinite,
    StepTooLarge,
    Diverged,
    NonFinite,
    Io,
    Format,
};

const char* to_string(ErrorCode code) noexcept;

/// Library error carrying a machine-readable code alongside the message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Raised when L + lambda*I is not positive definite.
class NotPositiveDefiniteError : public Error {
public:
    NotPositiveDefiniteError(double min_eigenvalue, const std::string& context);

    [[nodiscard]] double min_eigenvalue() const noexcept { return min_eigenvalue_; }

private:
    double min_eigenvalue_;
};

}  // namespace ksm
