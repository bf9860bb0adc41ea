#include "ksm/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ksm/csv.hpp"
#include "ksm/parallel.hpp"

namespace ksm {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

double ipow(double base, int exponent) {
    double result = 1.0;
    for (int i = 0; i < exponent; ++i) {
        result *= base;
    }
    return result;
}

void check_same_dim(Index a, Index b, const char* op) {
    if (a != b) {
        throw Error(ErrorCode::DimensionMismatch, std::string(op) + ": dimension mismatch (" +
                                                      std::to_string(a) + " vs " +
                                                      std::to_string(b) + ")");
    }
}

double clamp_cosine(double c) { return std::clamp(c, -1.0, 1.0); }

// f(u, v) for the dot-product family given u.v and both norms.
double power_cosine_from_dot(double dot, double nu, double nv, int alpha) {
    const double scale = nu * nv;
    if (scale == 0.0) {
        return 0.0;
    }
    return scale * ipow(clamp_cosine(dot / scale), alpha);
}

}  // namespace

Kernel::Kernel(Params params) : params_(std::move(params)) {
    std::visit(overloaded{
                   [](const LinearKernel&) {},
                   [](const GaussianKernel& g) {
                       if (!(g.sigma > 0.0) || !std::isfinite(g.sigma)) {
                           throw Error(ErrorCode::InvalidArgument,
                                       "gaussian kernel: sigma must be positive and finite");
                       }
                   },
                   [](const PowerCosineKernel& p) {
                       if (p.alpha < 1) {
                           throw Error(ErrorCode::InvalidArgument,
                                       "power_cosine kernel: alpha must be a positive integer");
                       }
                   },
                   [](const HomogeneousPolynomialKernel& p) {
                       if (p.alpha < 1) {
                           throw Error(ErrorCode::InvalidArgument,
                                       "homogeneous_polynomial kernel: alpha must be a positive integer");
                       }
                   },
               },
               params_);
}

KernelKind Kernel::kind() const noexcept {
    return std::visit(overloaded{
                          [](const LinearKernel&) { return KernelKind::Linear; },
                          [](const GaussianKernel&) { return KernelKind::Gaussian; },
                          [](const PowerCosineKernel&) { return KernelKind::PowerCosine; },
                          [](const HomogeneousPolynomialKernel&) {
                              return KernelKind::HomogeneousPolynomial;
                          },
                      },
                      params_);
}

std::optional<double> Kernel::homogeneity() const noexcept {
    return std::visit(overloaded{
                          [](const LinearKernel&) -> std::optional<double> { return 1.0; },
                          [](const GaussianKernel&) -> std::optional<double> { return std::nullopt; },
                          [](const PowerCosineKernel&) -> std::optional<double> { return 1.0; },
                          [](const HomogeneousPolynomialKernel& p) -> std::optional<double> {
                              return static_cast<double>(p.alpha);
                          },
                      },
                      params_);
}

double Kernel::eval(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v) const {
    check_same_dim(u.size(), v.size(), "kernel eval");
    return std::visit(
        overloaded{
            [&](const LinearKernel&) { return u.dot(v); },
            [&](const GaussianKernel& g) {
                return std::exp(-(u - v).squaredNorm() / (2.0 * g.sigma * g.sigma));
            },
            [&](const PowerCosineKernel& p) {
                return power_cosine_from_dot(u.dot(v), u.norm(), v.norm(), p.alpha);
            },
            [&](const HomogeneousPolynomialKernel& p) { return ipow(u.dot(v), p.alpha); },
        },
        params_);
}

Vector Kernel::grad_first_arg(const Eigen::Ref<const Vector>& w,
                              const Eigen::Ref<const Vector>& x) const {
    check_same_dim(w.size(), x.size(), "kernel grad_first_arg");
    return std::visit(
        overloaded{
            [&](const LinearKernel&) -> Vector { return x; },
            [&](const GaussianKernel& g) -> Vector {
                const double s2 = g.sigma * g.sigma;
                const double f = std::exp(-(w - x).squaredNorm() / (2.0 * s2));
                return (-f / s2) * (w - x);
            },
            [&](const PowerCosineKernel& p) -> Vector {
                const double nw = w.norm();
                const double nx = x.norm();
                if (nw == 0.0 || nx == 0.0) {
                    return Vector::Zero(w.size());
                }
                // d/dw |w||x| c^a = (1 - a) c^a (|x| / |w|) w + a c^(a-1) x
                const double c = clamp_cosine(w.dot(x) / (nw * nx));
                const double ca1 = ipow(c, p.alpha - 1);
                return ((1.0 - p.alpha) * ca1 * c * nx / nw) * w + (p.alpha * ca1) * x;
            },
            [&](const HomogeneousPolynomialKernel& p) -> Vector {
                return (p.alpha * ipow(w.dot(x), p.alpha - 1)) * x;
            },
        },
        params_);
}

Vector Kernel::grad_self(const Eigen::Ref<const Vector>& w) const {
    return std::visit(
        overloaded{
            [&](const LinearKernel&) -> Vector { return 2.0 * w; },
            [&](const GaussianKernel&) -> Vector { return Vector::Zero(w.size()); },
            [&](const PowerCosineKernel&) -> Vector { return 2.0 * w; },
            [&](const HomogeneousPolynomialKernel& p) -> Vector {
                return (2.0 * p.alpha * ipow(w.squaredNorm(), p.alpha - 1)) * w;
            },
        },
        params_);
}

double Kernel::self_similarity(const Eigen::Ref<const Vector>& w) const {
    return std::visit(
        overloaded{
            [&](const LinearKernel&) { return w.squaredNorm(); },
            [&](const GaussianKernel&) { return 1.0; },
            [&](const PowerCosineKernel&) { return w.squaredNorm(); },
            [&](const HomogeneousPolynomialKernel& p) { return ipow(w.squaredNorm(), p.alpha); },
        },
        params_);
}

Matrix Kernel::cross_gram(const Matrix& X, const Matrix& W) const {
    check_same_dim(X.cols(), W.cols(), "kernel cross_gram");
    Matrix out(X.rows(), W.rows());
    if (const auto* g = std::get_if<GaussianKernel>(&params_)) {
        const double denom = 2.0 * g->sigma * g->sigma;
        parallel_for(0, X.rows(), [&](Index t) {
            for (Index i = 0; i < W.rows(); ++i) {
                out(t, i) = std::exp(-(X.row(t) - W.row(i)).squaredNorm() / denom);
            }
        });
        return out;
    }
    // Dot-product kernels: one matrix product, then an elementwise map.
    out.noalias() = X * W.transpose();
    if (std::holds_alternative<LinearKernel>(params_)) {
        return out;
    }
    if (const auto* h = std::get_if<HomogeneousPolynomialKernel>(&params_)) {
        const int alpha = h->alpha;
        out = out.unaryExpr([alpha](double d) { return ipow(d, alpha); });
        return out;
    }
    const int alpha = std::get<PowerCosineKernel>(params_).alpha;
    const Vector xn = X.rowwise().norm();
    const Vector wn = W.rowwise().norm();
    parallel_for(0, X.rows(), [&](Index t) {
        for (Index i = 0; i < W.rows(); ++i) {
            out(t, i) = power_cosine_from_dot(out(t, i), xn[t], wn[i], alpha);
        }
    });
    return out;
}

GradCoefficients Kernel::grad_coefficients(const Matrix& X, const Matrix& W) const {
    check_same_dim(X.cols(), W.cols(), "kernel grad_coefficients");
    GradCoefficients out;
    const bool dot_product = std::holds_alternative<PowerCosineKernel>(params_) ||
                             std::holds_alternative<HomogeneousPolynomialKernel>(params_);
    // dot-product kernels derive values and coefficients from one product
    Matrix D;
    if (dot_product) {
        D.noalias() = X * W.transpose();
    } else {
        out.values = cross_gram(X, W);
    }
    const Index T = X.rows();
    const Index N = W.rows();
    std::visit(
        overloaded{
            [&](const LinearKernel&) {
                out.along_x = Matrix::Ones(T, N);
                out.along_w = Matrix::Zero(T, N);
            },
            [&](const GaussianKernel& g) {
                const double s2 = g.sigma * g.sigma;
                out.along_x = out.values / s2;
                out.along_w = -out.along_x;
            },
            [&](const PowerCosineKernel& p) {
                out.values.resize(T, N);
                out.along_x.resize(T, N);
                out.along_w.resize(T, N);
                const Vector xn = X.rowwise().norm();
                const Vector wn = W.rowwise().norm();
                parallel_for(0, T, [&](Index t) {
                    for (Index i = 0; i < N; ++i) {
                        out.values(t, i) = power_cosine_from_dot(D(t, i), xn[t], wn[i], p.alpha);
                        if (xn[t] == 0.0 || wn[i] == 0.0) {
                            out.along_x(t, i) = 0.0;
                            out.along_w(t, i) = 0.0;
                            continue;
                        }
                        const double c = clamp_cosine(D(t, i) / (xn[t] * wn[i]));
                        const double ca1 = ipow(c, p.alpha - 1);
                        out.along_x(t, i) = p.alpha * ca1;
                        out.along_w(t, i) = (1.0 - p.alpha) * ca1 * c * xn[t] / wn[i];
                    }
                });
            },
            [&](const HomogeneousPolynomialKernel& p) {
                const int alpha = p.alpha;
                out.values = D.unaryExpr([alpha](double d) { return ipow(d, alpha); });
                out.along_x = D.unaryExpr([alpha](double d) { return alpha * ipow(d, alpha - 1); });
                out.along_w = Matrix::Zero(T, N);
            },
        },
        params_);
    return out;
}

Matrix Kernel::gram(const Matrix& X) const {
    if (X.rows() < 1) {
        throw Error(ErrorCode::InvalidArgument, "kernel gram: need at least one row");
    }
    Matrix G = cross_gram(X, X);
    // Mirror the upper triangle so the result is exactly symmetric.
    G.triangularView<Eigen::StrictlyLower>() = G.transpose();
    if (kind() == KernelKind::Gaussian) {
        G.diagonal().setOnes();
    }
    return G;
}

std::string Kernel::describe() const {
    return std::visit(
        overloaded{
            [](const LinearKernel&) { return std::string("linear"); },
            [](const GaussianKernel& g) { return "gaussian:sigma=" + csv::format(g.sigma); },
            [](const PowerCosineKernel& p) { return "power_cosine:alpha=" + std::to_string(p.alpha); },
            [](const HomogeneousPolynomialKernel& p) {
                return "homogeneous_polynomial:alpha=" + std::to_string(p.alpha);
            },
        },
        params_);
}

bool Kernel::operator==(const Kernel& other) const {
    if (kind() != other.kind()) {
        return false;
    }
    return std::visit(
        overloaded{
            [](const LinearKernel&, const LinearKernel&) { return true; },
            [](const GaussianKernel& a, const GaussianKernel& b) { return a.sigma == b.sigma; },
            [](const PowerCosineKernel& a, const PowerCosineKernel& b) { return a.alpha == b.alpha; },
            [](const HomogeneousPolynomialKernel& a, const HomogeneousPolynomialKernel& b) {
                return a.alpha == b.alpha;
            },
            [](const auto&, const auto&) { return false; },
        },
        params_, other.params_);
}

namespace {

void reject_unknown_keys(const nlohmann::json& spec, std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : spec.items()) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* a) { return key == a; }) == allowed.end()) {
            throw Error(ErrorCode::InvalidConfig, "kernel: unknown key '" + key + "'");
        }
    }
}

int read_alpha(const nlohmann::json& spec) {
    if (!spec.contains("alpha") || !spec["alpha"].is_number_integer()) {
        throw Error(ErrorCode::InvalidConfig, "kernel.alpha: expected a positive integer");
    }
    return spec["alpha"].get<int>();
}

}  // namespace

Kernel kernel_from_json(const nlohmann::json& spec) {
    if (!spec.is_object() || !spec.contains("kind") || !spec["kind"].is_string()) {
        throw Error(ErrorCode::InvalidConfig, "kernel: expected an object with a string 'kind'");
    }
    const auto kind = spec["kind"].get<std::string>();
    try {
        if (kind == "linear") {
            reject_unknown_keys(spec, {"kind"});
            return Kernel::linear();
        }
        if (kind == "gaussian") {
            reject_unknown_keys(spec, {"kind", "sigma"});
            if (!spec.contains("sigma") || !spec["sigma"].is_number()) {
                throw Error(ErrorCode::InvalidConfig, "kernel.sigma: expected a positive number");
            }
            return Kernel::gaussian(spec["sigma"].get<double>());
        }
        if (kind == "power_cosine") {
            reject_unknown_keys(spec, {"kind", "alpha"});
            return Kernel::power_cosine(read_alpha(spec));
        }
        if (kind == "homogeneous_polynomial") {
            reject_unknown_keys(spec, {"kind", "alpha"});
            return Kernel::homogeneous_polynomial(read_alpha(spec));
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidArgument) {
            throw Error(ErrorCode::InvalidConfig, e.what());
        }
        throw;
    }
    throw Error(ErrorCode::InvalidConfig, "kernel.kind: unknown kernel '" + kind + "'");
}

nlohmann::json kernel_to_json(const Kernel& kernel) {
    return std::visit(
        overloaded{
            [](const LinearKernel&) { return nlohmann::json{{"kind", "linear"}}; },
            [](const GaussianKernel& g) {
                return nlohmann::json{{"kind", "gaussian"}, {"sigma", g.sigma}};
            },
            [](const PowerCosineKernel& p) {
                return nlohmann::json{{"kind", "power_cosine"}, {"alpha", p.alpha}};
            },
            [](const HomogeneousPolynomialKernel& p) {
                return nlohmann::json{{"kind", "homogeneous_polynomial"}, {"alpha", p.alpha}};
            },
        },
        kernel.params());
}

}  // namespace ksm
