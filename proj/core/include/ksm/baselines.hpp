#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ksm/data.hpp"
#include "ksm/kernels.hpp"

namespace ksm {

enum class LandmarkSource { UniformSample, KMeans, LearnedHebbian };

[[nodiscard]] std::string to_string(LandmarkSource source);
[[nodiscard]] LandmarkSource landmark_source_from_string(const std::string& name);

struct LandmarkSet {
    Matrix W;  // N x M
    LandmarkSource source = LandmarkSource::UniformSample;
};

/// Rows y^t = (sqrt(l_1) v_1[t], ..., sqrt(l_N) v_N[t]) over the N largest
/// eigenpairs of F; negative eigenvalues are clamped to zero.
[[nodiscard]] Matrix kernel_pca_features(const Matrix& F, Index n);

/// Nystrom features Y = A (B^+)^{1/2} with A = f(X, W) and B = f(W, W), so
/// Y Y^T = A B^+ A^T.
[[nodiscard]] Matrix nystrom_features(const Kernel& kernel, const Matrix& X,
                                      const LandmarkSet& landmarks);

[[nodiscard]] LandmarkSet select_landmarks_uniform(const Matrix& X, Index n, std::uint64_t seed);

struct KMeansResult {
    Matrix centers;
    std::vector<Index> assignments;
    double inertia = 0.0;
    int iterations = 0;
    std::vector<double> inertia_history;  // after each center update
};

/// Lloyd's algorithm initialized from k distinct data rows. Stops at an
/// assignment fixpoint or after max_iters updates. Empty clusters are re-seeded
/// with the point farthest from its assigned center.
[[nodiscard]] KMeansResult lloyd_kmeans(const Matrix& X, Index k, Rng& rng, int max_iters = 100);

[[nodiscard]] LandmarkSet select_landmarks_kmeans(const Matrix& X, Index n, std::uint64_t seed,
                                                  int max_iters = 100);

/// phi_i(x) = sqrt(2 / N) cos(w_i . x + b_i), w_i ~ N(0, I / sigma^2), b_i ~ U[0, 2 pi].
[[nodiscard]] Matrix random_fourier_features(double sigma, const Matrix& X, Index n,
                                             std::uint64_t seed);

}  // namespace ksm
