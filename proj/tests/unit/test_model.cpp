#include <doctest.h>

#include <cmath>
#include <random>

#include "ksm/baselines.hpp"
#include "ksm/linalg.hpp"
#include "ksm/model.hpp"
#include "../support/generators.hpp"
#include "../support/oracles.hpp"

using namespace ksm;
using oracle::Mat;
using oracle::Vec;

namespace {

// Term-by-term energy, written independently of the library's grouping.
double energy_oracle(const ModelState& s, const Vec& x, const Vec& y) {
    const Index n = s.neurons();
    double feed = 0.0, self = 0.0, lateral = 0.0, lsq = 0.0;
    for (Index i = 0; i < n; ++i) {
        const Vec w = s.W.row(i).transpose();
        feed += s.q[i] * y[i] * s.kernel.eval(w, x);
        self += s.q[i] * s.q[i] * s.kernel.eval(w, w);
    }
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            lateral += s.L(i, j) * y[i] * y[j];
            lsq += s.L(i, j) * s.L(i, j);
        }
    }
    return -feed + 0.5 * self + 0.5 * lateral - 0.25 * lsq + 0.5 * s.lambda * y.squaredNorm();
}

Mat random_inputs(const Kernel& k, Index t, Index m, std::mt19937_64& rng) {
    return oracle::random_matrix(t, m, rng, gen::input_scale(k));
}

double mean_energy(const ModelState& s, const Mat& X, const Mat& Y) { return energies(s, X, Y).mean(); }

}  // namespace

TEST_CASE("init follows the stated initialization") {
    const ModelState s = init_model(16, 2, Kernel::gaussian(0.3), 0.001, 7);
    CHECK(s.q == Vec::Ones(16));
    CHECK(s.L == Mat::Identity(16, 16));
    CHECK(s.lambda == 0.001);
    CHECK(s.W.rows() == 16);
    CHECK(s.W.cols() == 2);

    const ModelState again = init_model(16, 2, Kernel::gaussian(0.3), 0.001, 7);
    CHECK(again.W == s.W);
    CHECK(init_model(16, 2, Kernel::gaussian(0.3), 0.001, 8).W != s.W);

    const ModelState big = init_model(200, 50, Kernel::linear(), 0.001, 3);
    const double n = static_cast<double>(big.W.size());
    CHECK(std::abs(big.W.mean()) < 4.0 / std::sqrt(n));
    const double var = (big.W.array() - big.W.mean()).square().sum() / (n - 1.0);
    CHECK(var == doctest::Approx(1.0).epsilon(0.05));

    CHECK_THROWS_AS((void)init_model(0, 2, Kernel::linear(), 0.001, 0), Error);
    CHECK_THROWS_AS((void)init_model(2, 2, Kernel::linear(), -1.0, 0), Error);
}

TEST_CASE("closed-form responses") {
    std::mt19937_64 rng(11);

    SUBCASE("identity lateral weights pass the drive through") {
        ModelState s = init_model(5, 3, Kernel::power_cosine(2), 0.0, 1);
        const Mat X = oracle::random_matrix(4, 3, rng);
        const ResponseBatch r = response_closed_form(s, X);
        for (Index b = 0; b < X.rows(); ++b) {
            for (Index i = 0; i < 5; ++i) {
                CHECK(r.Y(b, i) == doctest::Approx(s.kernel.eval(s.W.row(i).transpose(), X.row(b).transpose())));
            }
        }
    }

    SUBCASE("after init the response is the drive over 1 + lambda") {
        const ModelState s = init_model(6, 2, Kernel::gaussian(0.3), 1e-3, 2);
        const Mat X = oracle::random_matrix(3, 2, rng, 0.3);
        const ResponseBatch r = response_closed_form(s, X);
        for (Index b = 0; b < X.rows(); ++b) {
            for (Index i = 0; i < 6; ++i) {
                const double f = s.kernel.eval(s.W.row(i).transpose(), X.row(b).transpose());
                CHECK(r.Y(b, i) == doctest::Approx(f / 1.001).epsilon(1e-14));
            }
        }
    }

    SUBCASE("random PD states match an independent dense solve") {
        for (const Kernel& k : gen::all_kernels()) {
            for (int rep = 0; rep < 10; ++rep) {
                const ModelState s = gen::random_state(k, 7, 3, rng);
                const Mat X = random_inputs(k, 5, 3, rng);
                const ResponseBatch r = response_closed_form(s, X);
                Mat A(X.rows(), 7);
                for (Index b = 0; b < X.rows(); ++b)
                    for (Index i = 0; i < 7; ++i)
                        A(b, i) = s.q[i] * k.eval(s.W.row(i).transpose(), X.row(b).transpose());
                const Mat K = s.L + s.lambda * Mat::Identity(7, 7);
                const Mat Y = oracle::gauss_solve(K, A.transpose()).transpose();
                CHECK((r.Y - Y).lpNorm<Eigen::Infinity>() < 1e-10);
                for (Index b = 0; b < X.rows(); ++b) {
                    CHECK(r.energies[b] == doctest::Approx(energy_oracle(s, X.row(b).transpose(), r.Y.row(b).transpose())));
                }
            }
        }
    }

    SUBCASE("optimality residual over 100 random states") {
        double worst = 0.0;
        for (int rep = 0; rep < 100; ++rep) {
            const Kernel k = gen::all_kernels()[static_cast<std::size_t>(rep % 4)];
            const ModelState s = gen::random_state(k, 8, 4, rng);
            const Mat X = random_inputs(k, 6, 4, rng);
            const ResponseBatch r = response_closed_form(s, X);
            const Mat A = feedforward(s, X);
            const Mat resid = A - r.Y * (s.L + s.lambda * Mat::Identity(8, 8));
            worst = std::max(worst, resid.lpNorm<Eigen::Infinity>());
        }
        CHECK(worst <= 1e-8);
    }

    SUBCASE("indefinite lateral weights are reported") {
        ModelState s = init_model(3, 2, Kernel::linear(), 1e-3, 0);
        s.L = -Mat::Identity(3, 3);
        try {
            (void)response_closed_form(s, Mat::Ones(1, 2));
            FAIL("expected an error");
        } catch (const NotPositiveDefiniteError& e) {
            CHECK(e.code() == ErrorCode::NotPositiveDefinite);
            CHECK(e.min_eigenvalue() == doctest::Approx(-0.999));
        }
    }

    SUBCASE("input dimension mismatch") {
        const ModelState s = init_model(3, 2, Kernel::linear(), 1e-3, 0);
        CHECK_THROWS_AS((void)response_closed_form(s, Mat::Ones(1, 3)), Error);
    }
}

TEST_CASE("recurrent dynamics") {
    std::mt19937_64 rng(21);

    SUBCASE("unit step with identity lateral weights lands on the drive") {
        ModelState s = init_model(4, 3, Kernel::linear(), 0.0, 5);
        const Vec x = oracle::random_vector(3, rng);
        const Vec a = feedforward(s, x.transpose()).row(0).transpose();
        const DynamicsResult one = response_dynamics(s, x, 1.0, 1, 1e-12);
        CHECK((one.y - a).lpNorm<Eigen::Infinity>() < 1e-15);
        const DynamicsResult full = response_dynamics(s, x, 1.0, 100, 1e-12);
        CHECK(full.converged);
        CHECK(full.steps <= 2);
        CHECK((full.y - a).lpNorm<Eigen::Infinity>() < 1e-15);
    }

    SUBCASE("agrees with the closed form and never raises the energy") {
        for (int rep = 0; rep < 40; ++rep) {
            const Kernel k = gen::all_kernels()[static_cast<std::size_t>(rep % 4)];
            const ModelState s = gen::random_state(k, 6, 3, rng);
            const Vec x = random_inputs(k, 1, 3, rng).row(0).transpose();
            const double lmax = linalg::max_eigenvalue(s.L + s.lambda * Mat::Identity(6, 6));
            const DynamicsResult d = response_dynamics(s, x, 1.0 / lmax, 10000, 1e-7);
            REQUIRE(d.converged);
            const Vec y = response_closed_form(s, x.transpose()).Y.row(0).transpose();
            CHECK((d.y - y).lpNorm<Eigen::Infinity>() < 1e-6);
            for (std::size_t i = 1; i < d.energy_trace.size(); ++i) {
                CHECK(d.energy_trace[i] <= d.energy_trace[i - 1] + 1e-12);
            }
            CHECK(d.energy_trace.back() == doctest::Approx(energy(s, x, d.y)));
        }
    }

    SUBCASE("step just below the stability limit still converges") {
        const ModelState s = gen::random_state(Kernel::gaussian(0.3), 6, 2, rng);
        const Vec x = random_inputs(s.kernel, 1, 2, rng).row(0).transpose();
        const double lmax = linalg::max_eigenvalue(s.L + s.lambda * Mat::Identity(6, 6));
        const DynamicsResult d = response_dynamics(s, x, 1.99 / lmax, 100000, 1e-10);
        CHECK(d.converged);
        const Vec y = response_closed_form(s, x.transpose()).Y.row(0).transpose();
        CHECK((d.y - y).lpNorm<Eigen::Infinity>() < 1e-6);
    }

    SUBCASE("step at or above the stability limit is rejected") {
        const ModelState s = gen::random_state(Kernel::linear(), 4, 2, rng);
        const double lmax = linalg::max_eigenvalue(s.L + s.lambda * Mat::Identity(4, 4));
        try {
            (void)response_dynamics(s, Vec::Ones(2), 2.0 / lmax * 1.01, 100, 1e-8);
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::StepTooLarge);
        }
    }

    SUBCASE("non-convergence is reported") {
        const ModelState s = gen::random_state(Kernel::linear(), 4, 2, rng);
        const DynamicsResult d = response_dynamics(s, Vec::Ones(2), 1e-3, 3, 1e-12);
        CHECK_FALSE(d.converged);
        CHECK(d.steps == 3);
    }
}

TEST_CASE("energy examples") {
    std::mt19937_64 rng(31);
    ModelState s = init_model(5, 2, Kernel::linear(), 0.7, 0);
    s.q.setZero();
    s.L.setZero();
    CHECK(energy(s, Vec::Ones(2), Vec::Zero(5)) == 0.0);

    s.L = Mat::Identity(5, 5);
    CHECK(energy(s, Vec::Ones(2), Vec::Zero(5)) == doctest::Approx(-5.0 / 4.0));

    for (const Kernel& k : gen::all_kernels()) {
        const ModelState r = gen::random_state(k, 6, 3, rng, 0.05);
        const Mat X = random_inputs(k, 4, 3, rng);
        const Mat Y = oracle::random_matrix(4, 6, rng);
        const Vec e = energies(r, X, Y);
        for (Index b = 0; b < 4; ++b) {
            const double want = energy_oracle(r, X.row(b).transpose(), Y.row(b).transpose());
            CHECK(energy(r, X.row(b).transpose(), Y.row(b).transpose()) == doctest::Approx(want).epsilon(1e-12));
            CHECK(e[b] == doctest::Approx(want).epsilon(1e-12));
        }
    }
}

TEST_CASE("parameter gradients are exact derivatives of the mean energy") {
    std::mt19937_64 rng(41);
    const double h = 1e-6;
    for (const Kernel& k : gen::all_kernels()) {
        CAPTURE(k.describe());
        for (int rep = 0; rep < 5; ++rep) {
            const ModelState s = gen::random_state(k, 4, 3, rng);
            const Mat X = random_inputs(k, 6, 3, rng);
            const Mat Y = response_closed_form(s, X).Y;
            const ParamGradients g = param_gradients(s, X, Y);

            Mat dW(4, 3);
            for (Index i = 0; i < 4; ++i) {
                for (Index a = 0; a < 3; ++a) {
                    ModelState p = s, m = s;
                    p.W(i, a) += h;
                    m.W(i, a) -= h;
                    dW(i, a) = (mean_energy(p, X, Y) - mean_energy(m, X, Y)) / (2 * h);
                }
            }
            Vec dq(4);
            for (Index i = 0; i < 4; ++i) {
                ModelState p = s, m = s;
                p.q[i] += h;
                m.q[i] -= h;
                dq[i] = (mean_energy(p, X, Y) - mean_energy(m, X, Y)) / (2 * h);
            }
            Mat dL(4, 4);
            for (Index i = 0; i < 4; ++i) {
                for (Index j = 0; j < 4; ++j) {
                    ModelState p = s, m = s;
                    p.L(i, j) += h;
                    m.L(i, j) -= h;
                    dL(i, j) = (mean_energy(p, X, Y) - mean_energy(m, X, Y)) / (2 * h);
                }
            }
            CHECK(oracle::rel_err(g.dW, dW) < 1e-5);
            CHECK(oracle::rel_err(g.dq, dq) < 1e-5);
            CHECK(oracle::rel_err(g.dL, dL) < 1e-5);
            CHECK(g.dL == g.dL.transpose());
        }
    }
}

TEST_CASE("gradients at zero response") {
    std::mt19937_64 rng(43);
    for (const Kernel& k : gen::all_kernels()) {
        const ModelState s = gen::random_state(k, 3, 2, rng);
        const Mat X = random_inputs(k, 4, 2, rng);
        const ParamGradients g = param_gradients(s, X, Mat::Zero(4, 3));
        for (Index i = 0; i < 3; ++i) {
            const Vec w = s.W.row(i).transpose();
            const Vec want = 0.5 * s.q[i] * s.q[i] * k.grad_self(w);
            CHECK((g.dW.row(i).transpose() - want).norm() <= 1e-14 * std::max(1.0, want.norm()));
            CHECK(g.dq[i] == doctest::Approx(s.q[i] * k.eval(w, w)));
        }
        CHECK((g.dL + 0.5 * s.L).norm() < 1e-15);
    }
}

TEST_CASE("gaussian weight gradient has the correlation form") {
    std::mt19937_64 rng(47);
    const double sigma = 0.3;
    const ModelState s = gen::random_state(Kernel::gaussian(sigma), 5, 2, rng);
    const Mat X = oracle::random_matrix(8, 2, rng, 0.3);
    const Mat Y = response_closed_form(s, X).Y;
    const ParamGradients g = param_gradients(s, X, Y);
    for (Index i = 0; i < 5; ++i) {
        const Vec w = s.W.row(i).transpose();
        Vec corr_x = Vec::Zero(2);
        double corr = 0.0;
        for (Index b = 0; b < 8; ++b) {
            const Vec x = X.row(b).transpose();
            const double gp = std::exp(-(x - w).squaredNorm() / (2 * sigma * sigma)) * Y(b, i);
            corr_x += gp * x;
            corr += gp;
        }
        const Vec want = -(s.q[i] / (sigma * sigma)) * (corr_x - corr * w) / 8.0;
        CHECK(oracle::rel_err(g.dW.row(i).transpose(), want) < 1e-12);
    }
}

TEST_CASE("lateral gradient preserves symmetry") {
    std::mt19937_64 rng(53);
    const ModelState s = gen::random_state(Kernel::power_cosine(3), 9, 4, rng);
    const Mat X = oracle::random_matrix(17, 4, rng);
    const ParamGradients g = param_gradients(s, X, response_closed_form(s, X).Y);
    CHECK(g.dL == g.dL.transpose());
}

TEST_CASE("correlation bound holds for random instances") {
    std::mt19937_64 rng(61);
    std::uniform_int_distribution<int> ut(1, 20), um(1, 5);
    std::normal_distribution<double> nq(0.0, 2.0);
    double worst = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const Kernel k = gen::all_kernels()[static_cast<std::size_t>(rep % 4)];
        const Index T = ut(rng), M = um(rng);
        const Mat X = random_inputs(k, T, M, rng);
        const Vec y = oracle::random_vector(T, rng, 2.0);
        const Vec w = oracle::random_vector(M, rng, gen::input_scale(k));
        worst = std::min(worst, correlation_bound_slack(k, X, y, nq(rng), w));
    }
    CHECK(worst >= -1e-10);
}

TEST_CASE("bound is tight at the optimal gain for a data-point landmark") {
    // With q at its optimum the right-hand side equals half the rank-1 Nystrom
    // quadratic form y^T A B^+ A^T y.
    std::mt19937_64 rng(67);
    for (const Kernel& k : gen::all_kernels()) {
        const Mat X = random_inputs(k, 12, 3, rng);
        const Vec y = oracle::random_vector(12, rng);
        const Vec w = X.row(4).transpose();
        const double q = optimal_gain(k, X, y, w);
        double rhs = 0.0;
        for (Index t = 0; t < 12; ++t) rhs += q * y[t] * k.eval(X.row(t).transpose(), w);
        rhs -= 0.5 * q * q * k.eval(w, w);
        const Mat Y1 = nystrom_features(k, X, LandmarkSet{w.transpose(), LandmarkSource::UniformSample});
        const double nys = 0.5 * y.dot(Y1 * (Y1.transpose() * y));
        CHECK(rhs == doctest::Approx(nys).epsilon(1e-10));
        // any other gain does no better
        for (double dq : {-0.1, 0.1}) {
            double other = 0.0;
            for (Index t = 0; t < 12; ++t) other += (q + dq) * y[t] * k.eval(X.row(t).transpose(), w);
            other -= 0.5 * (q + dq) * (q + dq) * k.eval(w, w);
            CHECK(other <= rhs);
        }
    }
}

TEST_CASE("upper-bound objective dominates the similarity-matching terms") {
    // The upper-bound objective is written on a quarter of the scale of the
    // expanded squared-error objective.
    std::mt19937_64 rng(71);
    for (const Kernel& k : gen::all_kernels()) {
        CAPTURE(k.describe());
        for (int rep = 0; rep < 25; ++rep) {
            const ModelState s = gen::random_state(k, 5, 3, rng);
            const Mat X = random_inputs(k, 15, 3, rng);
            const Mat Y = response_closed_form(s, X).Y;
            const Mat F = k.gram(X);
            CHECK(upper_bound_objective(s, X, Y) >= 0.25 * cmds_y_terms(F, Y) - 1e-8);
        }
        // the y-dependent terms differ from the full objective by a constant
        const Mat X = random_inputs(k, 10, 3, rng);
        const Mat F = k.gram(X);
        const Mat Y1 = oracle::random_matrix(10, 4, rng), Y2 = oracle::random_matrix(10, 4, rng);
        CHECK(cmds_objective(F, Y1) - cmds_y_terms(F, Y1) ==
              doctest::Approx(cmds_objective(F, Y2) - cmds_y_terms(F, Y2)).epsilon(1e-10));
    }
}

TEST_CASE("legendre form of the squared correlation") {
    for (double C = -3.0; C <= 3.0; C += 0.25) {
        const auto [argmax, value] = legendre_quadratic(C);
        CHECK(argmax == C);
        CHECK(value == doctest::Approx(0.5 * C * C));
        double best = -1e300;
        for (double L = -5.0; L <= 5.0; L += 1e-3) best = std::max(best, C * L - 0.5 * L * L);
        CHECK(best <= value + 1e-15);
        CHECK(best >= value - 1e-6);
    }
}

TEST_CASE("fused step evaluation matches the separate calls") {
    std::mt19937_64 rng(77);
    for (const Kernel k : gen::all_kernels()) {
        const ModelState s = gen::random_state(k, 5, 4, rng);
        const Mat X = oracle::random_matrix(7, 4, rng, gen::input_scale(k));
        const StepEvaluation e = evaluate_step(s, X);
        const ResponseBatch r = response_closed_form(s, X);
        const ParamGradients g = param_gradients(s, X, r.Y);
        CHECK((e.response.Y - r.Y).norm() <= 1e-12 * (1.0 + r.Y.norm()));
        CHECK((e.response.energies - r.energies).norm() <= 1e-12 * (1.0 + r.energies.norm()));
        const Vec direct = energies(s, X, r.Y);
        CHECK((r.energies - direct).norm() <= 1e-10 * (1.0 + direct.norm()));
        CHECK((e.grads.dW - g.dW).norm() <= 1e-12 * (1.0 + g.dW.norm()));
        CHECK((e.grads.dq - g.dq).norm() <= 1e-12 * (1.0 + g.dq.norm()));
        CHECK((e.grads.dL - g.dL).norm() <= 1e-12 * (1.0 + g.dL.norm()));
    }
}
