#pragma once

#include "ksm/types.hpp"

namespace ksm::linalg {

/// Eigenpairs of a symmetric matrix, largest eigenvalue first.
struct SymmetricEigen {
    Vector values;
    Matrix vectors;  // column k pairs with values[k]
};

/// Decomposes (S + S^T) / 2.
[[nodiscard]] SymmetricEigen eig_descending(const Matrix& S);

[[nodiscard]] Vector eigenvalues_descending(const Matrix& S);

[[nodiscard]] double min_eigenvalue(const Matrix& S);
[[nodiscard]] double max_eigenvalue(const Matrix& S);

/// (B^+)^{1/2}: eigenvalues below `cutoff` are treated as zero, the rest map
/// to lambda^{-1/2}. The result is symmetric.
[[nodiscard]] Matrix pinv_sqrt(const Matrix& B, double cutoff = 1e-10);

/// Moore-Penrose pseudo-inverse of a symmetric matrix with the same cutoff rule.
[[nodiscard]] Matrix pinv_symmetric(const Matrix& B, double cutoff = 1e-10);

/// Identity of size n scaled by s, added to a copy of A.
[[nodiscard]] Matrix add_ridge(const Matrix& A, double s);

[[nodiscard]] bool all_finite(const Matrix& A) noexcept;

}  // namespace ksm::linalg
