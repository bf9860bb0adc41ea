#include "ksm/model.hpp"

#include <cmath>
#include <random>

#include "ksm/data.hpp"
#include "ksm/linalg.hpp"

namespace ksm {
namespace {

Matrix recurrent_matrix(const ModelState& state) { return linalg::add_ridge(state.L, state.lambda); }

// Terms of the energy that do not depend on y or x.
double constant_energy(const ModelState& state) {
    double self = 0.0;
    for (Index i = 0; i < state.neurons(); ++i) {
        self += 0.5 * state.q[i] * state.q[i] * state.kernel.self_similarity(state.W.row(i).transpose());
    }
    return self - 0.25 * state.L.squaredNorm();
}

void check_batch(const ModelState& state, const Matrix& X, const char* op) {
    if (X.cols() != state.input_dim()) {
        throw Error(ErrorCode::DimensionMismatch, std::string(op) + ": inputs have " +
                                                      std::to_string(X.cols()) + " columns, model expects " +
                                                      std::to_string(state.input_dim()));
    }
}

}  // namespace

void ModelState::validate() const {
    const Index n = W.rows();
    if (n < 1 || W.cols() < 1) {
        throw Error(ErrorCode::InvalidArgument, "model: W must be non-empty");
    }
    if (q.size() != n || L.rows() != n || L.cols() != n) {
        throw Error(ErrorCode::DimensionMismatch, "model: W, q and L disagree on the neuron count");
    }
    if (!(lambda >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "model: lambda must be non-negative");
    }
    if (!W.allFinite() || !q.allFinite() || !L.allFinite()) {
        throw Error(ErrorCode::NonFinite, "model: parameters contain non-finite values");
    }
}

ModelState init_model(Index neurons, Index input_dim, Kernel kernel, double lambda, std::uint64_t seed) {
    if (neurons < 1 || input_dim < 1) {
        throw Error(ErrorCode::InvalidArgument, "init_model: N and M must be positive");
    }
    if (!(lambda >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "init_model: lambda must be non-negative");
    }
    ModelState s;
    s.kernel = std::move(kernel);
    s.lambda = lambda;
    s.W.resize(neurons, input_dim);
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index i = 0; i < neurons; ++i) {
        for (Index a = 0; a < input_dim; ++a) {
            s.W(i, a) = normal(rng);
        }
    }
    s.q = Vector::Ones(neurons);
    s.L = Matrix::Identity(neurons, neurons);
    return s;
}

Matrix feedforward(const ModelState& state, const Matrix& X) {
    check_batch(state, X, "feedforward");
    return state.kernel.cross_gram(X, state.W) * state.q.asDiagonal();
}

namespace {

Matrix solve_responses(const ModelState& state, const Matrix& A) {
    const Matrix K = recurrent_matrix(state);
    Eigen::LLT<Matrix> llt(K);
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefiniteError(linalg::min_eigenvalue(K), "response_closed_form");
    }
    return llt.solve(A.transpose()).transpose();
}

Vector energies_from_drive(const ModelState& state, const Matrix& A, const Matrix& Y) {
    const double offset = constant_energy(state);
    const Matrix YL = Y * state.L;
    Vector e(A.rows());
    for (Index b = 0; b < A.rows(); ++b) {
        e[b] = offset - A.row(b).dot(Y.row(b)) + 0.5 * YL.row(b).dot(Y.row(b)) +
               0.5 * state.lambda * Y.row(b).squaredNorm();
    }
    return e;
}

// At the steady state L y = a - lambda y, so the lateral and ridge terms
// collapse to a.y / 2.
Vector steady_state_energies(const ModelState& state, const Matrix& A, const Matrix& Y) {
    return Vector::Constant(A.rows(), constant_energy(state)) - 0.5 * A.cwiseProduct(Y).rowwise().sum();
}

ParamGradients gradients_from_coefficients(const ModelState& state, const Matrix& X, const Matrix& Y,
                                           const GradCoefficients& g);

}  // namespace

ResponseBatch response_closed_form(const ModelState& state, const Matrix& X) {
    const Matrix A = feedforward(state, X);
    ResponseBatch out;
    out.Y = solve_responses(state, A);
    out.energies = steady_state_energies(state, A, out.Y);
    return out;
}

DynamicsResult response_dynamics(const ModelState& state, const Eigen::Ref<const Vector>& x,
                                 double eta_y, int max_steps, double tol) {
    if (x.size() != state.input_dim()) {
        throw Error(ErrorCode::DimensionMismatch, "response_dynamics: input dimension mismatch");
    }
    if (!(eta_y > 0.0) || !(tol > 0.0) || max_steps < 1) {
        throw Error(ErrorCode::InvalidArgument,
                    "response_dynamics: eta_y, tol and max_steps must be positive");
    }
    const Matrix K = recurrent_matrix(state);
    const Vector spectrum = linalg::eigenvalues_descending(K);
    const double lmax = spectrum[0];
    const double lmin = spectrum[spectrum.size() - 1];
    if (!(lmin > 0.0)) {
        throw NotPositiveDefiniteError(lmin, "response_dynamics");
    }
    if (eta_y >= 2.0 / lmax) {
        throw Error(ErrorCode::StepTooLarge, "response_dynamics: eta_y=" + std::to_string(eta_y) +
                                                 " is not below 2/lambda_max=" + std::to_string(2.0 / lmax));
    }

    Vector a(state.neurons());
    for (Index i = 0; i < state.neurons(); ++i) {
        a[i] = state.q[i] * state.kernel.eval(state.W.row(i).transpose(), x);
    }
    const double offset = constant_energy(state);
    auto e_of = [&](const Vector& y) { return offset - a.dot(y) + 0.5 * y.dot(K * y); };

    DynamicsResult out;
    out.y = Vector::Zero(state.neurons());
    double e_prev = e_of(out.y);
    out.energy_trace.push_back(e_prev);
    int rising = 0;
    for (int step = 1; step <= max_steps; ++step) {
        const Vector dy = eta_y * (a - K * out.y);
        out.y += dy;
        out.steps = step;
        const double e = e_of(out.y);
        out.energy_trace.push_back(e);
        rising = e > e_prev ? rising + 1 : 0;
        if (rising >= 10 || !std::isfinite(e)) {
            throw Error(ErrorCode::Diverged,
                        "response_dynamics: energy increased for 10 consecutive steps at step " +
                            std::to_string(step));
        }
        e_prev = e;
        if (dy.lpNorm<Eigen::Infinity>() < tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

double energy(const ModelState& state, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
    if (x.size() != state.input_dim() || y.size() != state.neurons()) {
        throw Error(ErrorCode::DimensionMismatch, "energy: dimension mismatch");
    }
    double e = 0.0;
    for (Index i = 0; i < state.neurons(); ++i) {
        const Vector w = state.W.row(i).transpose();
        const double qi = state.q[i];
        e -= qi * y[i] * state.kernel.eval(w, x) - 0.5 * qi * qi * state.kernel.self_similarity(w);
    }
    for (Index i = 0; i < state.neurons(); ++i) {
        for (Index j = 0; j < state.neurons(); ++j) {
            e += 0.5 * (state.L(i, j) * y[i] * y[j] - 0.5 * state.L(i, j) * state.L(i, j));
        }
    }
    return e + 0.5 * state.lambda * y.squaredNorm();
}

Vector energies(const ModelState& state, const Matrix& X, const Matrix& Y) {
    check_batch(state, X, "energies");
    if (Y.rows() != X.rows() || Y.cols() != state.neurons()) {
        throw Error(ErrorCode::DimensionMismatch, "energies: response matrix has the wrong shape");
    }
    return energies_from_drive(state, feedforward(state, X), Y);
}

ParamGradients param_gradients(const ModelState& state, const Matrix& X, const Matrix& Y) {
    check_batch(state, X, "param_gradients");
    if (Y.rows() != X.rows() || Y.cols() != state.neurons()) {
        throw Error(ErrorCode::DimensionMismatch, "param_gradients: response matrix has the wrong shape");
    }
    return gradients_from_coefficients(state, X, Y, state.kernel.grad_coefficients(X, state.W));
}

StepEvaluation evaluate_step(const ModelState& state, const Matrix& X) {
    check_batch(state, X, "evaluate_step");
    const GradCoefficients g = state.kernel.grad_coefficients(X, state.W);
    const Matrix A = g.values * state.q.asDiagonal();
    StepEvaluation out;
    out.response.Y = solve_responses(state, A);
    out.response.energies = steady_state_energies(state, A, out.response.Y);
    out.grads = gradients_from_coefficients(state, X, out.response.Y, g);
    return out;
}

namespace {

ParamGradients gradients_from_coefficients(const ModelState& state, const Matrix& X, const Matrix& Y,
                                           const GradCoefficients& g) {
    const Index N = state.neurons();
    const double inv_b = 1.0 / static_cast<double>(X.rows());

    // de/dw_i = -q_i y_i df(w_i, x)/dw_i + (q_i^2 / 2) d f(w_i, w_i)/dw_i
    const Matrix C = -(Y * state.q.asDiagonal());
    ParamGradients out;
    out.dW = inv_b * (C.cwiseProduct(g.along_x).transpose() * X);
    const Vector along_w = inv_b * C.cwiseProduct(g.along_w).colwise().sum().transpose();
    out.dq.resize(N);
    const Vector corr = inv_b * Y.cwiseProduct(g.values).colwise().sum().transpose();
    for (Index i = 0; i < N; ++i) {
        const Vector w = state.W.row(i).transpose();
        const double qi = state.q[i];
        out.dW.row(i) += (along_w[i] * w + 0.5 * qi * qi * state.kernel.grad_self(w)).transpose();
        // de/dq_i = -y_i f(w_i, x) + q_i f(w_i, w_i)
        out.dq[i] = -corr[i] + qi * state.kernel.self_similarity(w);
    }
    // de/dL_ij = (y_i y_j - L_ij) / 2
    Matrix corr_yy = Matrix::Zero(N, N);
    corr_yy.selfadjointView<Eigen::Lower>().rankUpdate(Y.transpose(), inv_b);
    corr_yy.triangularView<Eigen::StrictlyUpper>() = corr_yy.transpose();
    out.dL = 0.5 * (corr_yy - state.L);
    return out;
}

}  // namespace

double correlation_bound_slack(const Kernel& kernel, const Matrix& X, const Vector& y, double q,
                               const Eigen::Ref<const Vector>& w) {
    if (y.size() != X.rows() || w.size() != X.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "correlation_bound_slack: dimension mismatch");
    }
    const double T = static_cast<double>(X.rows());
    const Matrix F = kernel.gram(X);
    const Vector fw = kernel.cross_gram(X, w.transpose());
    return y.dot(F * y) / (2.0 * T * T) - q * y.dot(fw) / T + 0.5 * q * q * kernel.self_similarity(w);
}

double optimal_gain(const Kernel& kernel, const Matrix& X, const Vector& y, const Eigen::Ref<const Vector>& w) {
    if (y.size() != X.rows() || w.size() != X.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "optimal_gain: dimension mismatch");
    }
    const double fww = kernel.self_similarity(w);
    if (fww == 0.0) {
        return 0.0;
    }
    return y.dot(kernel.cross_gram(X, w.transpose()).col(0)) / fww;
}

double upper_bound_objective(const ModelState& state, const Matrix& X, const Matrix& Y) {
    check_batch(state, X, "upper_bound_objective");
    if (Y.rows() != X.rows() || Y.cols() != state.neurons()) {
        throw Error(ErrorCode::DimensionMismatch, "upper_bound_objective: response matrix has the wrong shape");
    }
    const double T = static_cast<double>(X.rows());
    const Matrix A = feedforward(state, X);
    double self = 0.0;
    for (Index i = 0; i < state.neurons(); ++i) {
        self += 0.5 * state.q[i] * state.q[i] * state.kernel.self_similarity(state.W.row(i).transpose());
    }
    const Matrix C = Y.transpose() * Y / T;
    return -(A.cwiseProduct(Y).sum() / T - self) + 0.25 * C.squaredNorm();
}

double cmds_objective(const Matrix& F, const Matrix& Y) {
    if (F.rows() != F.cols() || Y.rows() != F.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "cmds_objective: F must be T x T and Y must have T rows");
    }
    const double T = static_cast<double>(F.rows());
    return (F - Y * Y.transpose()).squaredNorm() / (T * T);
}

double cmds_y_terms(const Matrix& F, const Matrix& Y) {
    if (F.rows() != F.cols() || Y.rows() != F.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "cmds_y_terms: F must be T x T and Y must have T rows");
    }
    const double T = static_cast<double>(F.rows());
    const Matrix S = Y * Y.transpose();
    return (-2.0 * F.cwiseProduct(S).sum() + S.squaredNorm()) / (T * T);
}

std::pair<double, double> legendre_quadratic(double C) noexcept { return {C, 0.5 * C * C}; }

}  // namespace ksm
