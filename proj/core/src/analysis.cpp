#include "ksm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "ksm/baselines.hpp"
#include "ksm/csv.hpp"
#include "ksm/linalg.hpp"

namespace ksm {

void write_reports_csv(const std::filesystem::path& path, const std::vector<ApproxReport>& rows,
                       const std::vector<std::pair<std::string, std::string>>& meta) {
    auto out = csv::open(path);
    csv::write_preamble(out, meta);
    out << "method,dim,nrmse,seed,dataset,kernel\n";
    for (const auto& r : rows) {
        out << r.method << ',' << r.dimensionality << ',' << csv::format(r.nrmse) << ',' << r.seed << ','
            << r.dataset << ',' << r.kernel << '\n';
    }
}

double nrmse(const Matrix& F, const Matrix& Y) {
    if (F.rows() != F.cols() || Y.rows() != F.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "nrmse: F must be T x T and Y must have T rows");
    }
    const double denom = F.norm();
    if (denom == 0.0) {
        throw Error(ErrorCode::InvalidArgument, "nrmse: |F|_F is zero");
    }
    Matrix R = F;
    R.noalias() -= Y * Y.transpose();
    return R.norm() / denom;
}

Vector spectrum(const Matrix& S) {
    if (S.size() == 0) {
        throw Error(ErrorCode::InvalidArgument, "spectrum: empty matrix");
    }
    const Vector values = linalg::eigenvalues_descending(S);
    if (values[0] == 0.0) {
        throw Error(ErrorCode::InvalidArgument, "spectrum: largest eigenvalue is zero");
    }
    return values / values[0];
}

SignFixed fix_sign_degeneracy(const ModelState& state, const Matrix& Y) {
    if (Y.cols() != state.neurons()) {
        throw Error(ErrorCode::DimensionMismatch, "fix_sign_degeneracy: Y has the wrong column count");
    }
    SignFixed out{state, Y, std::vector<int>(static_cast<std::size_t>(Y.cols()), 1)};
    const Vector means = Y.colwise().mean().transpose();
    for (Index i = 0; i < Y.cols(); ++i) {
        if (means[i] < 0.0) {
            out.signs[static_cast<std::size_t>(i)] = -1;
            out.state.W.row(i) *= -1.0;
            out.Y.col(i) *= -1.0;
        }
    }
    // L -> S L S keeps every lateral term L_ij y_i y_j unchanged.
    for (Index i = 0; i < Y.cols(); ++i) {
        for (Index j = 0; j < Y.cols(); ++j) {
            out.state.L(i, j) *= out.signs[static_cast<std::size_t>(i)] * out.signs[static_cast<std::size_t>(j)];
        }
    }
    return out;
}

Matrix linearized_responses(const Matrix& X, const Matrix& Y) {
    if (X.rows() < 1 || Y.rows() != X.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "linearized_responses: X and Y need the same T >= 1 rows");
    }
    const double inv_t = 1.0 / static_cast<double>(X.rows());
    Matrix C = inv_t * (X.transpose() * X);
    C.diagonal().array() += kLinearizedRidge;
    const Matrix cross = inv_t * (X.transpose() * Y);  // M x N, column i is <y_i x>
    return C.llt().solve(cross).transpose();
}

double matched_accuracy(const std::vector<Index>& assignments, const std::vector<int>& labels) {
    if (assignments.size() != labels.size() || labels.empty()) {
        throw Error(ErrorCode::DimensionMismatch, "matched_accuracy: size mismatch");
    }
    const Index clusters = *std::max_element(assignments.begin(), assignments.end()) + 1;
    const int classes = *std::max_element(labels.begin(), labels.end()) + 1;
    const Index side = std::max<Index>(clusters, classes);
    Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(side, side);
    for (std::size_t t = 0; t < labels.size(); ++t) {
        if (labels[t] < 0) {
            throw Error(ErrorCode::InvalidArgument, "matched_accuracy: negative label");
        }
        ++counts(assignments[t], labels[t]);
    }

    long best = 0;
    if (side <= 8) {
        std::vector<Index> perm(static_cast<std::size_t>(side));
        std::iota(perm.begin(), perm.end(), Index{0});
        do {
            long hits = 0;
            for (Index c = 0; c < side; ++c) {
                hits += counts(c, perm[static_cast<std::size_t>(c)]);
            }
            best = std::max(best, hits);
        } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
        // Greedy: repeatedly take the largest remaining cell.
        std::vector<bool> row_used(static_cast<std::size_t>(side)), col_used(static_cast<std::size_t>(side));
        for (Index step = 0; step < side; ++step) {
            int top = -1;
            Index br = 0, bc = 0;
            for (Index r = 0; r < side; ++r) {
                for (Index c = 0; c < side; ++c) {
                    if (!row_used[static_cast<std::size_t>(r)] && !col_used[static_cast<std::size_t>(c)] &&
                        counts(r, c) > top) {
                        top = counts(r, c);
                        br = r;
                        bc = c;
                    }
                }
            }
            row_used[static_cast<std::size_t>(br)] = true;
            col_used[static_cast<std::size_t>(bc)] = true;
            best += top;
        }
    }
    return static_cast<double>(best) / static_cast<double>(labels.size());
}

ClusterEval kmeans_cluster_eval(const Matrix& Z, const std::vector<int>& labels, Index k, int n_init,
                                std::uint64_t seed) {
    if (static_cast<Index>(labels.size()) != Z.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "kmeans_cluster_eval: label count does not match rows");
    }
    if (k < 1 || k > Z.rows()) {
        throw Error(ErrorCode::InvalidArgument, "kmeans_cluster_eval: need 1 <= k <= T");
    }
    if (n_init < 1) {
        throw Error(ErrorCode::InvalidArgument, "kmeans_cluster_eval: n_init must be positive");
    }
    Rng rng(seed);
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int run = 0; run < n_init; ++run) {
        KMeansResult r = lloyd_kmeans(Z, k, rng, 300);
        if (r.inertia < best.inertia) {
            best = std::move(r);
        }
    }
    ClusterEval out;
    out.inertia = best.inertia;
    out.assignments = std::move(best.assignments);
    out.accuracy = matched_accuracy(out.assignments, labels);
    return out;
}

RidgeClassifier::RidgeClassifier(const Matrix& Z, const std::vector<int>& labels, double weight_decay) {
    if (static_cast<Index>(labels.size()) != Z.rows() || Z.rows() < 1) {
        throw Error(ErrorCode::DimensionMismatch, "RidgeClassifier: label count does not match rows");
    }
    if (!(weight_decay >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "RidgeClassifier: weight decay must be non-negative");
    }
    classes_ = *std::max_element(labels.begin(), labels.end()) + 1;
    const Index n = Z.rows();
    Matrix targets = Matrix::Zero(n, classes_);
    for (Index t = 0; t < n; ++t) {
        targets(t, labels[static_cast<std::size_t>(t)]) = 1.0;
    }
    const Eigen::RowVectorXd z_mean = Z.colwise().mean();
    const Eigen::RowVectorXd t_mean = targets.colwise().mean();
    const Matrix Zc = Z.rowwise() - z_mean;
    const Matrix Tc = targets.rowwise() - t_mean;
    // minimize (1/n)|Zc W - Tc|^2 + weight_decay |W|^2
    const double ridge = static_cast<double>(n) * weight_decay;
    if (n >= Z.cols()) {
        Matrix G = Zc.transpose() * Zc;
        G.diagonal().array() += ridge;
        weights_ = G.ldlt().solve(Zc.transpose() * Tc);
    } else {
        Matrix G = Zc * Zc.transpose();
        G.diagonal().array() += ridge;
        weights_ = Zc.transpose() * G.ldlt().solve(Tc);
    }
    bias_ = (t_mean - z_mean * weights_).transpose();
}

std::vector<int> RidgeClassifier::predict(const Matrix& Z) const {
    if (Z.cols() != weights_.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "RidgeClassifier: feature dimension mismatch");
    }
    Matrix scores = Z * weights_;
    scores.rowwise() += bias_.transpose();
    std::vector<int> out(static_cast<std::size_t>(Z.rows()));
    for (Index t = 0; t < Z.rows(); ++t) {
        Index arg = 0;
        scores.row(t).maxCoeff(&arg);
        out[static_cast<std::size_t>(t)] = static_cast<int>(arg);
    }
    return out;
}

double RidgeClassifier::accuracy(const Matrix& Z, const std::vector<int>& labels) const {
    const auto pred = predict(Z);
    if (pred.size() != labels.size() || labels.empty()) {
        throw Error(ErrorCode::DimensionMismatch, "RidgeClassifier: label count does not match rows");
    }
    std::size_t hits = 0;
    for (std::size_t t = 0; t < pred.size(); ++t) {
        hits += pred[t] == labels[t] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

std::vector<ClassifierRow> linear_classifier_eval(const Matrix& Ztrain, const std::vector<int>& labels_train,
                                                  const Matrix& Ztest, const std::vector<int>& labels_test,
                                                  const std::vector<int>& labels_per_class,
                                                  const std::vector<double>& weight_decays,
                                                  const std::vector<std::uint64_t>& seeds) {
    if (static_cast<Index>(labels_train.size()) != Ztrain.rows() ||
        static_cast<Index>(labels_test.size()) != Ztest.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "linear_classifier_eval: label count does not match rows");
    }
    if (weight_decays.empty() || seeds.empty()) {
        throw Error(ErrorCode::InvalidArgument, "linear_classifier_eval: need weight decays and seeds");
    }
    std::map<int, std::vector<Index>> by_class;
    for (std::size_t t = 0; t < labels_train.size(); ++t) {
        by_class[labels_train[t]].push_back(static_cast<Index>(t));
    }

    std::vector<ClassifierRow> rows;
    for (const int k : labels_per_class) {
        for (const auto& [cls, members] : by_class) {
            if (k < 1 || static_cast<std::size_t>(k) > members.size()) {
                throw Error(ErrorCode::InvalidArgument,
                            "linear_classifier_eval: " + std::to_string(k) + " labels per class requested but class " +
                                std::to_string(cls) + " has " + std::to_string(members.size()));
            }
        }
        Vector train_acc = Vector::Zero(static_cast<Index>(weight_decays.size()));
        Vector test_acc = Vector::Zero(static_cast<Index>(weight_decays.size()));
        for (const std::uint64_t seed : seeds) {
            Rng rng(seed);
            std::vector<Index> chosen;
            for (const auto& [cls, members] : by_class) {
                for (const Index pick : sample_without_replacement(static_cast<Index>(members.size()), k, rng)) {
                    chosen.push_back(members[static_cast<std::size_t>(pick)]);
                }
            }
            Matrix Zk(static_cast<Index>(chosen.size()), Ztrain.cols());
            std::vector<int> lk(chosen.size());
            for (std::size_t r = 0; r < chosen.size(); ++r) {
                Zk.row(static_cast<Index>(r)) = Ztrain.row(chosen[r]);
                lk[r] = labels_train[static_cast<std::size_t>(chosen[r])];
            }
            for (std::size_t w = 0; w < weight_decays.size(); ++w) {
                const RidgeClassifier clf(Zk, lk, weight_decays[w]);
                train_acc[static_cast<Index>(w)] += clf.accuracy(Zk, lk);
                test_acc[static_cast<Index>(w)] += clf.accuracy(Ztest, labels_test);
            }
        }
        Index best = 0;
        test_acc.maxCoeff(&best);
        const double inv = 1.0 / static_cast<double>(seeds.size());
        rows.push_back({k, weight_decays[static_cast<std::size_t>(best)], train_acc[best] * inv, test_acc[best] * inv});
    }
    return rows;
}

double excess_kurtosis(const Matrix& Y) {
    const double mean = Y.mean();
    const Eigen::ArrayXXd centered = Y.array() - mean;
    const double m2 = centered.square().mean();
    if (m2 == 0.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const double m4 = centered.square().square().mean();
    return m4 / (m2 * m2) - 3.0;
}

Histogram response_histogram(const Matrix& Y, int bins) {
    if (bins < 1) {
        throw Error(ErrorCode::InvalidArgument, "response_histogram: bins must be at least 1");
    }
    if (Y.size() == 0) {
        throw Error(ErrorCode::InvalidArgument, "response_histogram: empty response matrix");
    }
    Histogram h;
    h.excess_kurtosis = excess_kurtosis(Y);
    const double lo = Y.minCoeff();
    const double hi = Y.maxCoeff();
    if (lo == hi) {
        h.edges = {lo, hi};
        h.counts = {static_cast<long>(Y.size())};
        return h;
    }
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int b = 0; b <= bins; ++b) {
        h.edges[static_cast<std::size_t>(b)] = lo + (hi - lo) * b / bins;
    }
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    const double width = (hi - lo) / bins;
    for (Index i = 0; i < Y.size(); ++i) {
        const auto b = std::min<long>(bins - 1, static_cast<long>((Y.data()[i] - lo) / width));
        ++h.counts[static_cast<std::size_t>(b)];
    }
    return h;
}

}  // namespace ksm
