#include "ksm/linalg.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace ksm {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::DimensionMismatch: return "dimension mismatch";
        case ErrorCode::InvalidArgument: return "invalid argument";
        case ErrorCode::InvalidConfig: return "invalid config";
        case ErrorCode::NotPositiveDefinite: return "not positive definite";
        case ErrorCode::StepTooLarge: return "step too large";
        case ErrorCode::Diverged: return "diverged";
        case ErrorCode::NonFinite: return "non-finite value";
        case ErrorCode::Io: return "i/o error";
        case ErrorCode::Format: return "format error";
    }
    return "unknown";
}

NotPositiveDefiniteError::NotPositiveDefiniteError(double min_eigenvalue, const std::string& context)
    : Error(ErrorCode::NotPositiveDefinite,
            context + ": L + lambda*I is not positive definite (smallest eigenvalue " +
                std::to_string(min_eigenvalue) + ")"),
      min_eigenvalue_(min_eigenvalue) {}

namespace linalg {

SymmetricEigen eig_descending(const Matrix& S) {
    if (S.rows() != S.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "eig_descending: matrix is not square");
    }
    const Matrix sym = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::InvalidArgument, "eig_descending: eigensolver did not converge");
    }
    // Eigen returns ascending order.
    SymmetricEigen out;
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
    return out;
}

Vector eigenvalues_descending(const Matrix& S) {
    if (S.rows() != S.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "eigenvalues_descending: matrix is not square");
    }
    const Matrix sym = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().reverse();
}

double min_eigenvalue(const Matrix& S) { return eigenvalues_descending(S).minCoeff(); }

double max_eigenvalue(const Matrix& S) { return eigenvalues_descending(S).maxCoeff(); }

namespace {

template <typename Map>
Matrix spectral_function(const Matrix& B, double cutoff, Map&& map) {
    const SymmetricEigen e = eig_descending(B);
    Vector mapped(e.values.size());
    for (Index i = 0; i < e.values.size(); ++i) {
        mapped[i] = e.values[i] < cutoff ? 0.0 : map(e.values[i]);
    }
    Matrix out = e.vectors * mapped.asDiagonal() * e.vectors.transpose();
    return 0.5 * (out + out.transpose());
}

}  // namespace

Matrix pinv_sqrt(const Matrix& B, double cutoff) {
    return spectral_function(B, cutoff, [](double v) { return 1.0 / std::sqrt(v); });
}

Matrix pinv_symmetric(const Matrix& B, double cutoff) {
    return spectral_function(B, cutoff, [](double v) { return 1.0 / v; });
}

Matrix add_ridge(const Matrix& A, double s) {
    Matrix out = A;
    out.diagonal().array() += s;
    return out;
}

bool all_finite(const Matrix& A) noexcept { return A.allFinite(); }

}  // namespace linalg
}  // namespace ksm
