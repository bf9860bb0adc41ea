#pragma once

#include <optional>
#include <string>
#include <variant>

#include <nlohmann/json_fwd.hpp>

#include "ksm/types.hpp"

namespace ksm {

struct LinearKernel {};

/// exp(-|u - v|^2 / (2 sigma^2)); normalized so f(v, v) = 1.
struct GaussianKernel {
    double sigma;
};

/// |u| |v| (u_hat . v_hat)^alpha. Degree-1 homogeneous; alpha = 1 is the linear kernel.
struct PowerCosineKernel {
    int alpha;
};

/// (u . v)^alpha.
struct HomogeneousPolynomialKernel {
    int alpha;
};

/// For every kernel here d f(w, x) / d w = P x + R w. Batched evaluation
/// returns the kernel values and both coefficient matrices (T x N each).
struct GradCoefficients {
    Matrix values;
    Matrix along_x;  // P
    Matrix along_w;  // R
};

enum class KernelKind { Linear, Gaussian, PowerCosine, HomogeneousPolynomial };

/// Positive semi-definite similarity function with gradients in its first
/// argument. Immutable once constructed.
class Kernel {
public:
    using Params = std::variant<LinearKernel, GaussianKernel, PowerCosineKernel,
                                HomogeneousPolynomialKernel>;

    Kernel(Params params);  // NOLINT(google-explicit-constructor)

    static Kernel linear() { return Kernel(LinearKernel{}); }
    static Kernel gaussian(double sigma) { return Kernel(GaussianKernel{sigma}); }
    static Kernel power_cosine(int alpha) { return Kernel(PowerCosineKernel{alpha}); }
    static Kernel homogeneous_polynomial(int alpha) {
        return Kernel(HomogeneousPolynomialKernel{alpha});
    }

    [[nodiscard]] KernelKind kind() const noexcept;
    [[nodiscard]] const Params& params() const noexcept { return params_; }

    /// Degree d with f(a u, b v) = (ab)^d f(u, v), if the kernel has one.
    [[nodiscard]] std::optional<double> homogeneity() const noexcept;

    [[nodiscard]] double eval(const Eigen::Ref<const Vector>& u,
                              const Eigen::Ref<const Vector>& v) const;

    /// d f(w, x) / d w.
    [[nodiscard]] Vector grad_first_arg(const Eigen::Ref<const Vector>& w,
                                        const Eigen::Ref<const Vector>& x) const;

    /// Total derivative of w -> f(w, w).
    [[nodiscard]] Vector grad_self(const Eigen::Ref<const Vector>& w) const;

    /// f(w, w); cheaper than eval(w, w) for every kernel here.
    [[nodiscard]] double self_similarity(const Eigen::Ref<const Vector>& w) const;

    /// T x T matrix of f(x^s, x^t) over the rows of X.
    [[nodiscard]] Matrix gram(const Matrix& X) const;

    /// T x N matrix of f(x^t, w_i) for rows x^t of X and rows w_i of W.
    [[nodiscard]] Matrix cross_gram(const Matrix& X, const Matrix& W) const;

    /// Values and gradient coefficients for rows x^t of X against rows w_i of W.
    [[nodiscard]] GradCoefficients grad_coefficients(const Matrix& X, const Matrix& W) const;

    /// Short identifier such as "gaussian:sigma=0.3" used in reports.
    [[nodiscard]] std::string describe() const;

    bool operator==(const Kernel& other) const;

private:
    Params params_;
};

/// Parses {"kind": "gaussian", "sigma": 0.3} and friends. Unknown keys are rejected.
Kernel kernel_from_json(const nlohmann::json& spec);
nlohmann::json kernel_to_json(const Kernel& kernel);

}  // namespace ksm
