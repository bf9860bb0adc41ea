#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ksm/model.hpp"

namespace ksm {

/// One row of an approximation sweep.
struct ApproxReport {
    std::string method;
    Index dimensionality = 0;
    double nrmse = 0.0;
    std::uint64_t seed = 0;
    std::string dataset;
    std::string kernel;
};

/// Writes `method,dim,nrmse,seed,dataset,kernel` rows.
/// `meta` entries become leading `# key=value` lines.
void write_reports_csv(const std::filesystem::path& path, const std::vector<ApproxReport>& rows,
                       const std::vector<std::pair<std::string, std::string>>& meta = {});

/// |F - Y Y^T|_F / |F|_F.
[[nodiscard]] double nrmse(const Matrix& F, const Matrix& Y);

/// Eigenvalues of symmetric S, descending, divided by the largest.
[[nodiscard]] Vector spectrum(const Matrix& S);

struct SignFixed {
    ModelState state;
    Matrix Y;
    std::vector<int> signs;  // +1 or -1 per neuron
};

/// Flips w_i and column i of Y wherever the mean response of neuron i is
/// negative, and conjugates L by the same signs so lateral terms are unchanged.
[[nodiscard]] SignFixed fix_sign_degeneracy(const ModelState& state, const Matrix& Y);

/// Ridge constant used by linearized_responses.
inline constexpr double kLinearizedRidge = 0.1;

/// s_i = [0.1 I + <x x^T>]^{-1} <y_i x>, returned as rows of an N x M matrix.
[[nodiscard]] Matrix linearized_responses(const Matrix& X, const Matrix& Y);

/// Fraction of samples whose cluster maps to their label under the best
/// one-to-one cluster/label assignment.
[[nodiscard]] double matched_accuracy(const std::vector<Index>& assignments,
                                      const std::vector<int>& labels);

struct ClusterEval {
    double accuracy = 0.0;
    double inertia = 0.0;
    std::vector<Index> assignments;
};

/// Best-of-n_init Lloyd clustering scored against labels.
[[nodiscard]] ClusterEval kmeans_cluster_eval(const Matrix& Z, const std::vector<int>& labels,
                                              Index k, int n_init, std::uint64_t seed);

struct ClassifierRow {
    int labels_per_class = 0;
    double best_weight_decay = 0.0;
    double train_accuracy = 0.0;  // mean over seeds at best_weight_decay
    double test_accuracy = 0.0;
};

/// Closed-form ridge regression onto one-hot targets with an unpenalized bias.
class RidgeClassifier {
public:
    RidgeClassifier(const Matrix& Z, const std::vector<int>& labels, double weight_decay);

    [[nodiscard]] std::vector<int> predict(const Matrix& Z) const;
    [[nodiscard]] double accuracy(const Matrix& Z, const std::vector<int>& labels) const;

private:
    Matrix weights_;  // D x C
    Vector bias_;     // C
    int classes_ = 0;
};

/// For each labels-per-class count: draws that many training rows per class
/// for every seed, fits a ridge classifier for every weight decay, and keeps
/// the weight decay with the best mean test accuracy.
[[nodiscard]] std::vector<ClassifierRow> linear_classifier_eval(
    const Matrix& Ztrain, const std::vector<int>& labels_train, const Matrix& Ztest,
    const std::vector<int>& labels_test, const std::vector<int>& labels_per_class,
    const std::vector<double>& weight_decays, const std::vector<std::uint64_t>& seeds);

struct Histogram {
    std::vector<double> edges;  // bins + 1 entries
    std::vector<long> counts;
    double excess_kurtosis = 0.0;  // NaN for constant data
};

/// Pooled histogram of all entries of Y. Constant data collapses to one bin.
[[nodiscard]] Histogram response_histogram(const Matrix& Y, int bins);

[[nodiscard]] double excess_kurtosis(const Matrix& Y);

}  // namespace ksm
