#include "ksm/baselines.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "ksm/linalg.hpp"

namespace ksm {

std::string to_string(LandmarkSource source) {
    switch (source) {
        case LandmarkSource::UniformSample: return "uniform";
        case LandmarkSource::KMeans: return "kmeans";
        case LandmarkSource::LearnedHebbian: return "learned";
    }
    return "unknown";
}

LandmarkSource landmark_source_from_string(const std::string& name) {
    if (name == "uniform") return LandmarkSource::UniformSample;
    if (name == "kmeans") return LandmarkSource::KMeans;
    if (name == "learned") return LandmarkSource::LearnedHebbian;
    throw Error(ErrorCode::Format, "unknown landmark source '" + name + "'");
}

Matrix kernel_pca_features(const Matrix& F, Index n) {
    if (F.rows() != F.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "kernel_pca_features: F must be square");
    }
    if (n < 1 || n > F.rows()) {
        throw Error(ErrorCode::InvalidArgument, "kernel_pca_features: need 1 <= N <= T, got N=" +
                                                    std::to_string(n) + ", T=" + std::to_string(F.rows()));
    }
    const linalg::SymmetricEigen e = linalg::eig_descending(F);
    const Vector scale = e.values.head(n).cwiseMax(0.0).cwiseSqrt();
    return e.vectors.leftCols(n) * scale.asDiagonal();
}

Matrix nystrom_features(const Kernel& kernel, const Matrix& X, const LandmarkSet& landmarks) {
    if (landmarks.W.rows() < 1) {
        throw Error(ErrorCode::InvalidArgument, "nystrom_features: empty landmark set");
    }
    const Matrix B = kernel.gram(landmarks.W);
    const Matrix M = linalg::pinv_sqrt(B, 1e-10);
    return kernel.cross_gram(X, landmarks.W) * M;
}

LandmarkSet select_landmarks_uniform(const Matrix& X, Index n, std::uint64_t seed) {
    Rng rng(seed);
    const auto rows = sample_without_replacement(X.rows(), n, rng);
    LandmarkSet out;
    out.source = LandmarkSource::UniformSample;
    out.W.resize(n, X.cols());
    for (Index i = 0; i < n; ++i) {
        out.W.row(i) = X.row(rows[static_cast<std::size_t>(i)]);
    }
    return out;
}

namespace {

struct Assignment {
    std::vector<Index> labels;
    Vector distances;  // squared distance to the assigned center
    double inertia = 0.0;
};

Assignment assign(const Matrix& X, const Matrix& centers) {
    const Vector xn = X.rowwise().squaredNorm();
    const Vector cn = centers.rowwise().squaredNorm();
    const Matrix cross = X * centers.transpose();
    Assignment a;
    a.labels.resize(static_cast<std::size_t>(X.rows()));
    a.distances.resize(X.rows());
    for (Index t = 0; t < X.rows(); ++t) {
        Index best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (Index c = 0; c < centers.rows(); ++c) {
            const double d = std::max(0.0, xn[t] + cn[c] - 2.0 * cross(t, c));
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        a.labels[static_cast<std::size_t>(t)] = best;
        a.distances[t] = best_d;
    }
    a.inertia = a.distances.sum();
    return a;
}

Matrix update_centers(const Matrix& X, const Assignment& a, Index k) {
    Matrix centers = Matrix::Zero(k, X.cols());
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (Index t = 0; t < X.rows(); ++t) {
        const Index c = a.labels[static_cast<std::size_t>(t)];
        centers.row(c) += X.row(t);
        ++counts[static_cast<std::size_t>(c)];
    }
    std::vector<bool> taken(static_cast<std::size_t>(X.rows()), false);
    for (Index c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] > 0) {
            centers.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
            continue;
        }
        // Empty cluster: move it onto the worst-served point not already used.
        Index far = -1;
        for (Index t = 0; t < X.rows(); ++t) {
            if (!taken[static_cast<std::size_t>(t)] && (far < 0 || a.distances[t] > a.distances[far])) {
                far = t;
            }
        }
        taken[static_cast<std::size_t>(far)] = true;
        centers.row(c) = X.row(far);
    }
    return centers;
}

}  // namespace

KMeansResult lloyd_kmeans(const Matrix& X, Index k, Rng& rng, int max_iters) {
    if (k < 1 || k > X.rows()) {
        throw Error(ErrorCode::InvalidArgument, "kmeans: need 1 <= k <= T, got k=" + std::to_string(k) +
                                                    ", T=" + std::to_string(X.rows()));
    }
    if (max_iters < 1) {
        throw Error(ErrorCode::InvalidArgument, "kmeans: max_iters must be positive");
    }
    const auto seeds = sample_without_replacement(X.rows(), k, rng);
    KMeansResult r;
    r.centers.resize(k, X.cols());
    for (Index c = 0; c < k; ++c) {
        r.centers.row(c) = X.row(seeds[static_cast<std::size_t>(c)]);
    }
    Assignment current = assign(X, r.centers);
    r.inertia_history.push_back(current.inertia);
    for (int it = 1; it <= max_iters; ++it) {
        r.centers = update_centers(X, current, k);
        Assignment next = assign(X, r.centers);
        r.inertia_history.push_back(next.inertia);
        r.iterations = it;
        const bool fixpoint = next.labels == current.labels;
        current = std::move(next);
        if (fixpoint) {
            break;
        }
    }
    r.assignments = std::move(current.labels);
    r.inertia = current.inertia;
    return r;
}

LandmarkSet select_landmarks_kmeans(const Matrix& X, Index n, std::uint64_t seed, int max_iters) {
    Rng rng(seed);
    KMeansResult km = lloyd_kmeans(X, n, rng, max_iters);
    return {std::move(km.centers), LandmarkSource::KMeans};
}

Matrix random_fourier_features(double sigma, const Matrix& X, Index n, std::uint64_t seed) {
    if (!(sigma > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "random_fourier_features: sigma must be positive");
    }
    if (n < 1) {
        throw Error(ErrorCode::InvalidArgument, "random_fourier_features: N must be positive");
    }
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0 / sigma);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    Matrix W(n, X.cols());
    Vector b(n);
    for (Index i = 0; i < n; ++i) {
        for (Index a = 0; a < X.cols(); ++a) {
            W(i, a) = normal(rng);
        }
        b[i] = phase(rng);
    }
    const double scale = std::sqrt(2.0 / static_cast<double>(n));
    Matrix Y = X * W.transpose();
    Y.rowwise() += b.transpose();
    return Y.unaryExpr([scale](double v) { return scale * std::cos(v); });
}

}  // namespace ksm
