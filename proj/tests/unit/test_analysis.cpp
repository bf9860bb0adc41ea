#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "ksm/analysis.hpp"
#include "ksm/baselines.hpp"
#include "ksm/data.hpp"
#include "../support/generators.hpp"
#include "../support/oracles.hpp"

using namespace ksm;
using oracle::Mat;
using oracle::Vec;

TEST_CASE("nrmse") {
    std::mt19937_64 rng(1);
    const Mat G = oracle::random_matrix(8, 3, rng);
    const Mat F = G * G.transpose();
    CHECK(nrmse(F, G) < 1e-15);
    CHECK(nrmse(F, Mat::Zero(8, 2)) == 1.0);
    CHECK_THROWS_AS((void)nrmse(Mat::Zero(3, 3), Mat::Ones(3, 1)), Error);
    CHECK_THROWS_AS((void)nrmse(F, Mat::Ones(7, 1)), Error);

    std::vector<double> eig(25);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (auto& e : eig) e = u(rng);
    const Mat P = oracle::psd_with_spectrum(eig, rng);
    const std::vector<double> ev = oracle::jacobi_eigenvalues(P);
    double total = 0.0;
    for (double e : ev) total += e * e;
    double prev = 2.0;
    for (Index n = 1; n <= 25; ++n) {
        double tail = 0.0;
        for (std::size_t i = static_cast<std::size_t>(n); i < ev.size(); ++i) tail += ev[i] * ev[i];
        const double err = nrmse(P, kernel_pca_features(P, n));
        CHECK(err == doctest::Approx(std::sqrt(tail / total)).epsilon(1e-8));
        CHECK(err <= prev + 1e-15);
        prev = err;
    }
}

TEST_CASE("normalized spectrum") {
    std::mt19937_64 rng(2);
    const Vec s = spectrum(Mat::Identity(5, 5));
    CHECK((s.array() == 1.0).all());

    const Vec v = oracle::random_vector(6, rng);
    const Vec r = spectrum(v * v.transpose());
    CHECK(r[0] == 1.0);
    CHECK(r.tail(5).cwiseAbs().maxCoeff() < 1e-14);

    const Mat X = oracle::random_matrix(15, 3, rng);
    const Mat F = Kernel::power_cosine(2).gram(X);
    const std::vector<double> ev = oracle::jacobi_eigenvalues(F);
    const Vec got = spectrum(F);
    for (std::size_t i = 0; i < ev.size(); ++i) {
        CHECK(got[static_cast<Index>(i)] == doctest::Approx(ev[i] / ev[0]).epsilon(1e-10));
    }

    // rank of Y Y^T is bounded by the feature count
    const Mat Y = oracle::random_matrix(20, 4, rng);
    const Vec sy = spectrum(Y * Y.transpose());
    CHECK((sy.tail(16).cwiseAbs().array() < 1e-12).all());

    CHECK_THROWS_AS((void)spectrum(Mat(0, 0)), Error);
}

TEST_CASE("sign degeneracy removal") {
    std::mt19937_64 rng(3);

    SUBCASE("positive means are left alone") {
        const ModelState s = gen::random_state(Kernel::linear(), 3, 2, rng);
        const Mat Y = Mat::Ones(4, 3);
        const SignFixed f = fix_sign_degeneracy(s, Y);
        CHECK(f.Y == Y);
        CHECK(f.state.W == s.W);
        CHECK(f.signs == std::vector<int>{1, 1, 1});
    }

    SUBCASE("a flipped neuron is restored") {
        const ModelState s = gen::random_state(Kernel::linear(), 3, 2, rng);
        Mat Y = Mat::Ones(4, 3);
        Y.col(1) << 0.5, 2.0, -0.1, 0.3;
        ModelState flipped = s;
        flipped.W.row(1) *= -1.0;
        Mat Yf = Y;
        Yf.col(1) *= -1.0;
        const SignFixed f = fix_sign_degeneracy(flipped, Yf);
        CHECK(f.Y == Y);
        CHECK(f.state.W == s.W);
        CHECK(f.signs == std::vector<int>{1, -1, 1});
    }

    SUBCASE("zero mean counts as positive") {
        const ModelState s = gen::random_state(Kernel::linear(), 1, 2, rng);
        const Mat Y = (Mat(2, 1) << 1.0, -1.0).finished();
        CHECK(fix_sign_degeneracy(s, Y).signs == std::vector<int>{1});
    }

    SUBCASE("odd power-cosine energies are invariant") {
        ModelState s = gen::random_state(Kernel::power_cosine(3), 10, 4, rng);
        s.L = 0.5 * (s.L + s.L.transpose());
        const Mat X = oracle::random_matrix(30, 4, rng);
        const ResponseBatch r = response_closed_form(s, X);
        const SignFixed f = fix_sign_degeneracy(s, r.Y);
        const Vec e = energies(f.state, X, f.Y);
        CHECK((e - r.energies).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, r.energies.cwiseAbs().maxCoeff()));
        const Mat Y2 = response_closed_form(f.state, X).Y;
        CHECK((Y2 - f.Y).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((f.Y.colwise().mean().array() >= 0.0).all());
    }
}

TEST_CASE("linearized responses") {
    std::mt19937_64 rng(4);

    SUBCASE("whitened identity map") {
        // columns orthogonal with squared norm T, so <x x^T> = I
        const Mat Q = Eigen::HouseholderQR<Mat>(oracle::random_matrix(40, 3, rng)).householderQ() * Mat::Identity(40, 3);
        const Mat X = std::sqrt(40.0) * Q;
        const Mat S = linearized_responses(X, X);
        CHECK((S - Mat::Identity(3, 3) / 1.1).cwiseAbs().maxCoeff() < 1e-12);
    }

    SUBCASE("a neuron copying one coordinate points along it") {
        const Mat Q = Eigen::HouseholderQR<Mat>(oracle::random_matrix(50, 3, rng)).householderQ() * Mat::Identity(50, 3);
        const Mat X = Q * Vec((Vec(3) << 2.0, 5.0, 9.0).finished()).asDiagonal();
        const Mat Y = 3.0 * X.col(1);
        const Mat S = linearized_responses(X, Y);
        const double c = (X.col(1).squaredNorm() / 50.0);
        CHECK(S(0, 1) == doctest::Approx(3.0 * c / (0.1 + c)));
        CHECK(std::abs(S(0, 0)) < 1e-12);
        CHECK(std::abs(S(0, 2)) < 1e-12);
    }

    SUBCASE("matches a dense ridge solve") {
        const Mat X = oracle::random_matrix(30, 5, rng);
        const Mat Y = oracle::random_matrix(30, 4, rng);
        const Mat A = 0.1 * Mat::Identity(5, 5) + X.transpose() * X / 30.0;
        const Mat want = oracle::gauss_solve(A, X.transpose() * Y / 30.0).transpose();
        CHECK(oracle::rel_err(linearized_responses(X, Y), want) < 1e-12);
    }
}

TEST_CASE("matched accuracy") {
    CHECK(matched_accuracy({1, 1, 0, 0}, {0, 0, 1, 1}) == 1.0);
    CHECK(matched_accuracy({0, 0, 0, 1}, {0, 0, 1, 1}) == 0.75);
    CHECK(matched_accuracy({2, 0, 1, 2}, {0, 1, 2, 0}) == 1.0);
    // greedy path for many clusters
    std::vector<Index> a;
    std::vector<int> l;
    for (int c = 0; c < 12; ++c) {
        for (int r = 0; r < 5; ++r) {
            a.push_back((c + 3) % 12);
            l.push_back(c);
        }
    }
    CHECK(matched_accuracy(a, l) == 1.0);
    CHECK_THROWS_AS((void)matched_accuracy({0, 1}, {0}), Error);
}

TEST_CASE("k-means cluster evaluation") {
    std::mt19937_64 rng(5);
    Mat Z(90, 2);
    std::vector<int> labels;
    const double cx[] = {0.0, 10.0, -10.0}, cy[] = {10.0, 0.0, 0.0};
    for (int c = 0; c < 3; ++c) {
        for (int r = 0; r < 30; ++r) {
            Z.row(c * 30 + r) << cx[c] + 0.3 * oracle::random_vector(1, rng)[0], cy[c] + 0.3 * oracle::random_vector(1, rng)[0];
            labels.push_back(c);
        }
    }
    const ClusterEval e = kmeans_cluster_eval(Z, labels, 3, 10, 1);
    CHECK(e.accuracy == 1.0);
    const ClusterEval again = kmeans_cluster_eval(Z, labels, 3, 10, 1);
    CHECK(again.assignments == e.assignments);
    CHECK(again.inertia == e.inertia);

    const Dataset moons = make_half_moons(400, 0.1, 0);
    const ClusterEval raw = kmeans_cluster_eval(moons.X, *moons.labels, 2, 20, 0);
    CHECK(raw.accuracy < 0.9);
    CHECK_THROWS_AS((void)kmeans_cluster_eval(Z, labels, 91, 1, 0), Error);
}

TEST_CASE("ridge classifier") {
    std::mt19937_64 rng(6);

    SUBCASE("separable two-class data") {
        Mat Z(200, 3);
        std::vector<int> y;
        for (Index t = 0; t < 200; ++t) {
            const int c = static_cast<int>(t % 2);
            Z.row(t) = oracle::random_vector(3, rng, 0.3).transpose();
            Z(t, 0) += c ? 3.0 : -3.0;
            y.push_back(c);
        }
        const RidgeClassifier clf(Z.topRows(100), {y.begin(), y.begin() + 100}, 1e-3);
        CHECK(clf.accuracy(Z.bottomRows(100), {y.begin() + 100, y.end()}) == 1.0);
    }

    SUBCASE("one-hot features") {
        std::vector<int> y;
        Mat Z = Mat::Zero(50, 5);
        for (Index t = 0; t < 50; ++t) {
            y.push_back(static_cast<int>(t % 5));
            Z(t, t % 5) = 1.0;
        }
        for (double wd : {1e-5, 1e-4, 1e-3}) {
            CHECK(RidgeClassifier(Z, y, wd).accuracy(Z, y) == 1.0);
        }
    }

    SUBCASE("wide features use the same solution") {
        // more features than samples exercises the dual form
        const Mat Z = oracle::random_matrix(20, 60, rng);
        std::vector<int> y;
        for (int t = 0; t < 20; ++t) y.push_back(t % 4);
        const RidgeClassifier clf(Z, y, 1e-6);
        CHECK(clf.accuracy(Z, y) == 1.0);
    }

    SUBCASE("accuracy table") {
        Mat Z(400, 2);
        std::vector<int> y;
        for (Index t = 0; t < 400; ++t) {
            const int c = static_cast<int>(t % 4);
            Z.row(t) = oracle::random_vector(2, rng, 0.2).transpose();
            Z(t, 0) += (c & 1) ? 2.0 : -2.0;
            Z(t, 1) += (c & 2) ? 2.0 : -2.0;
            y.push_back(c);
        }
        const auto rows = linear_classifier_eval(Z.topRows(200), {y.begin(), y.begin() + 200}, Z.bottomRows(200),
                                                 {y.begin() + 200, y.end()}, {1, 10}, {1e-5, 1e-1, 1.0}, {0, 1, 2});
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].labels_per_class == 1);
        CHECK(rows[1].test_accuracy == 1.0);
        CHECK(rows[1].train_accuracy == 1.0);
        CHECK_THROWS_AS((void)linear_classifier_eval(Z.topRows(200), {y.begin(), y.begin() + 200}, Z.bottomRows(200),
                                                     {y.begin() + 200, y.end()}, {51}, {1e-3}, {0}),
                        Error);
    }
}

TEST_CASE("response histogram and kurtosis") {
    const Histogram c = response_histogram(Mat::Constant(5, 4, 2.5), 10);
    REQUIRE(c.counts.size() == 1);
    CHECK(c.counts[0] == 20);
    CHECK(c.edges.size() == 2);
    CHECK(std::isnan(c.excess_kurtosis));

    std::mt19937_64 rng(7);
    const Mat G = oracle::random_matrix(400, 250, rng);
    const Histogram h = response_histogram(G, 50);
    CHECK(h.counts.size() == 50);
    CHECK(h.edges.size() == 51);
    long total = 0;
    for (long n : h.counts) total += n;
    CHECK(total == G.size());
    const double se = std::sqrt(24.0 / static_cast<double>(G.size()));
    CHECK(std::abs(h.excess_kurtosis) < 4.0 * se);

    // heavy tails are detected
    Mat S = G.array().cube();
    CHECK(excess_kurtosis(S) > 10.0);
    CHECK_THROWS_AS((void)response_histogram(G, 0), Error);
}

TEST_CASE("report CSV") {
    const auto dir = std::filesystem::temp_directory_path() / "ksm_test_reports";
    std::filesystem::remove_all(dir);
    const auto path = dir / "r.csv";
    write_reports_csv(path, {{"kernel_pca", 4, 0.25, 3, "moons", "gaussian:sigma=0.3"}}, {{"config_hash", "abc"}});
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == "# config_hash=abc\nmethod,dim,nrmse,seed,dataset,kernel\nkernel_pca,4,0.25,3,moons,gaussian:sigma=0.3\n");
    std::filesystem::remove_all(dir);
}
