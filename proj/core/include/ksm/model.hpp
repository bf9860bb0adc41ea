#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ksm/kernels.hpp"
#include "ksm/types.hpp"

namespace ksm {

/// Parameters of the recurrent network: feedforward features W (N x M, row i
/// is w_i), gains q, lateral weights L (N x N) and the ridge term lambda.
struct ModelState {
    Matrix W;
    Vector q;
    Matrix L;
    double lambda = 1e-3;
    Kernel kernel = Kernel::linear();

    [[nodiscard]] Index neurons() const noexcept { return W.rows(); }
    [[nodiscard]] Index input_dim() const noexcept { return W.cols(); }

    void validate() const;
};

/// W ~ N(0, 1) i.i.d., q = 1, L = I.
[[nodiscard]] ModelState init_model(Index neurons, Index input_dim, Kernel kernel,
                                    double lambda, std::uint64_t seed);

/// Steady-state responses for a batch and their energies.
struct ResponseBatch {
    Matrix Y;         // B x N
    Vector energies;  // B
};

/// Feedforward drive a(b, j) = q_j f(w_j, x^b), B x N.
[[nodiscard]] Matrix feedforward(const ModelState& state, const Matrix& X);

/// Solves (L + lambda I) y = a for every row of X. Throws
/// NotPositiveDefiniteError if L + lambda I is not positive definite.
[[nodiscard]] ResponseBatch response_closed_form(const ModelState& state, const Matrix& X);

struct DynamicsResult {
    Vector y;
    int steps = 0;
    bool converged = false;
    std::vector<double> energy_trace;  // energy at y = 0 and after every step
};

/// Euler-discretized recurrent dynamics y <- y + eta (a - (L + lambda I) y)
/// started from y = 0. Stops once |dy|_inf < tol or after max_steps.
[[nodiscard]] DynamicsResult response_dynamics(const ModelState& state,
                                               const Eigen::Ref<const Vector>& x, double eta_y,
                                               int max_steps, double tol);

/// Per-sample energy e(y, x; W, q, L).
[[nodiscard]] double energy(const ModelState& state, const Eigen::Ref<const Vector>& x,
                            const Eigen::Ref<const Vector>& y);

/// Energies of every row pair (x^b, y^b).
[[nodiscard]] Vector energies(const ModelState& state, const Matrix& X, const Matrix& Y);

/// Exact partial derivatives of the minibatch-mean energy with Y held fixed.
struct ParamGradients {
    Matrix dW;  // N x M
    Vector dq;  // N
    Matrix dL;  // N x N
};

[[nodiscard]] ParamGradients param_gradients(const ModelState& state, const Matrix& X,
                                             const Matrix& Y);

struct StepEvaluation {
    ResponseBatch response;
    ParamGradients grads;
};

/// Closed-form responses, energies and gradients of one batch, sharing a
/// single kernel evaluation.
[[nodiscard]] StepEvaluation evaluate_step(const ModelState& state, const Matrix& X);

// Objective-level quantities.

/// (1/2T^2) sum_st y_s y_t f(x_s, x_t) - (1/T) sum_t q y_t f(x_t, w) + (q^2/2) f(w, w).
/// Non-negative for every PSD kernel, q and w.
[[nodiscard]] double correlation_bound_slack(const Kernel& kernel, const Matrix& X, const Vector& y, double q,
                                             const Eigen::Ref<const Vector>& w);

/// Gain maximizing sum_t q y_t f(x_t, w) - (q^2/2) f(w, w); zero when f(w, w) = 0.
[[nodiscard]] double optimal_gain(const Kernel& kernel, const Matrix& X, const Vector& y,
                                  const Eigen::Ref<const Vector>& w);

/// Upper-bound objective at fixed W, q:
/// -(1/T) sum_t sum_i [q_i y_i f(w_i, x^t) - (q_i^2/2) f(w_i, w_i)] + (1/4) sum_ij C_ij^2,
/// with C = Y^T Y / T.
[[nodiscard]] double upper_bound_objective(const ModelState& state, const Matrix& X, const Matrix& Y);

/// Mean squared similarity mismatch (1/T^2) sum_st [F_st - y_s . y_t]^2.
[[nodiscard]] double cmds_objective(const Matrix& F, const Matrix& Y);

/// The Y-dependent part of cmds_objective:
/// -(2/T^2) sum_st F_st y_s . y_t + (1/T^2) sum_st (y_s . y_t)^2.
[[nodiscard]] double cmds_y_terms(const Matrix& F, const Matrix& Y);

/// max over L of (C L - L^2 / 2): returns {argmax, value} = {C, C^2 / 2}.
[[nodiscard]] std::pair<double, double> legendre_quadratic(double C) noexcept;

}  // namespace ksm
