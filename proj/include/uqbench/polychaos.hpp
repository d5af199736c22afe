#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "uqbench/designs.hpp"
#include "uqbench/errors.hpp"

namespace uqbench::pce {

/// Classical Legendre polynomial P_k(z) by the three-term recurrence
/// (k+1) P_{k+1} = (2k+1) z P_k - k P_{k-1}.
inline double legendre(int k, double z) {
    if (k == 0) return 1.0;
    double p0 = 1.0;
    double p1 = z;
    for (int j = 1; j < k; ++j) {
        const double p2 = ((2.0 * j + 1.0) * z * p1 - j * p0) / (j + 1.0);
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

// P_0..P_p at z into out[0..p].
inline void legendre_all(int p, double z, std::span<double> out) {
    out[0] = 1.0;
    if (p >= 1) out[1] = z;
    for (int j = 1; j < p; ++j) {
        out[static_cast<std::size_t>(j + 1)] =
            ((2.0 * j + 1.0) * z * out[static_cast<std::size_t>(j)] - j * out[static_cast<std::size_t>(j - 1)]) / (j + 1.0);
    }
}

/// gamma_k^2 = E[P_k(Z)^2] for Z uniform on [-1,1].
inline double norm_squared(int k) { return 1.0 / (2.0 * k + 1.0); }

enum class Truncation { TotalOrder, TensorProduct };

inline const char* to_string(Truncation t) {
    return t == Truncation::TotalOrder ? "total-order" : "tensor-product";
}

struct TruncationScheme {
    Truncation kind = Truncation::TotalOrder;
    int order = 1;  // p

    static TruncationScheme total_order(int p) { return {Truncation::TotalOrder, p}; }
    static TruncationScheme tensor_product(int p) { return {Truncation::TensorProduct, p}; }
    friend bool operator==(const TruncationScheme&, const TruncationScheme&) = default;
};

using MultiIndex = std::vector<int>;

inline int total_degree(const MultiIndex& a) {
    int s = 0;
    for (int v : a) s += v;
    return s;
}

// Graded ordering: total degree first, then lexicographically descending
// exponents, so (n=2, p=2) gives 00, 10, 01, 20, 11, 02.
inline bool graded_less(const MultiIndex& a, const MultiIndex& b) {
    const int da = total_degree(a);
    const int db = total_degree(b);
    if (da != db) return da < db;
    return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

inline constexpr std::size_t kDefaultBasisCap = 100'000;

inline double basis_size(std::size_t n, TruncationScheme scheme) {
    if (scheme.kind == Truncation::TensorProduct) return std::pow(scheme.order + 1.0, static_cast<double>(n));
    double r = 1.0;  // C(n+p, p) in floating point to detect overflow
    for (int i = 1; i <= scheme.order; ++i) r = r * (static_cast<double>(n) + i) / i;
    return std::round(r);
}

/// Ordered multi-index set with normalization constants gamma_alpha^2.
class Basis {
public:
    Basis(std::size_t n, TruncationScheme scheme, std::size_t cap = kDefaultBasisCap) : n_(n), scheme_(scheme) {
        if (n < 1) throw SizeError("basis dimension must be >= 1");
        if (scheme.order < 0) throw ConfigError("truncation order must be >= 0");
        const double count = basis_size(n, scheme);
        if (count > static_cast<double>(cap)) {
            throw SizeError("basis with " + std::to_string(static_cast<long long>(count)) +
                            " terms exceeds the cap of " + std::to_string(cap));
        }
        MultiIndex current(n, 0);
        enumerate(current, 0, 0);
        std::sort(indices_.begin(), indices_.end(), graded_less);
        norms_sq_.reserve(indices_.size());
        for (const auto& a : indices_) {
            double g = 1.0;
            for (int k : a) g *= pce::norm_squared(k);
            norms_sq_.push_back(g);
        }
    }

    std::size_t dim() const noexcept { return n_; }
    std::size_t size() const noexcept { return indices_.size(); }
    TruncationScheme scheme() const noexcept { return scheme_; }
    int max_degree() const noexcept { return scheme_.order; }
    const std::vector<MultiIndex>& indices() const noexcept { return indices_; }
    const MultiIndex& index(std::size_t j) const { return indices_[j]; }
    double norm_squared(std::size_t j) const { return norms_sq_[j]; }
    const std::vector<double>& norms_squared() const noexcept { return norms_sq_; }

    // Psi(z): every basis polynomial evaluated at one point.
    Eigen::VectorXd evaluate(std::span<const double> z) const {
        if (z.size() != n_) throw DomainError("point dimension does not match basis dimension");
        const int p = max_degree();
        std::vector<double> table((static_cast<std::size_t>(p) + 1) * n_);
        for (std::size_t d = 0; d < n_; ++d) {
            legendre_all(p, z[d], std::span(table).subspan(d * (static_cast<std::size_t>(p) + 1), static_cast<std::size_t>(p) + 1));
        }
        Eigen::VectorXd psi(static_cast<Eigen::Index>(size()));
        for (std::size_t j = 0; j < size(); ++j) {
            double v = 1.0;
            for (std::size_t d = 0; d < n_; ++d) v *= table[d * (static_cast<std::size_t>(p) + 1) + static_cast<std::size_t>(indices_[j][d])];
            psi[static_cast<Eigen::Index>(j)] = v;
        }
        return psi;
    }

    friend bool operator==(const Basis& a, const Basis& b) {
        return a.n_ == b.n_ && a.scheme_ == b.scheme_ && a.indices_ == b.indices_;
    }

private:
    void enumerate(MultiIndex& current, std::size_t d, int used) {
        const int p = scheme_.order;
        if (d == n_) {
            indices_.push_back(current);
            return;
        }
        const int limit = scheme_.kind == Truncation::TotalOrder ? p - used : p;
        for (int k = 0; k <= limit; ++k) {
            current[d] = k;
            enumerate(current, d + 1, used + k);
        }
        current[d] = 0;
    }

    std::size_t n_;
    TruncationScheme scheme_;
    std::vector<MultiIndex> indices_;
    std::vector<double> norms_sq_;
};

/// Psi with Psi(i, j) = psi_{alpha_j}(x^(i)).
inline Eigen::MatrixXd basis_matrix(const Design& design, const Basis& basis) {
    if (design.dim() != basis.dim()) {
        throw DomainError("design dimension " + std::to_string(design.dim()) + " does not match basis dimension " +
                          std::to_string(basis.dim()));
    }
    Eigen::MatrixXd psi(static_cast<Eigen::Index>(design.size()), static_cast<Eigen::Index>(basis.size()));
    for (std::size_t i = 0; i < design.size(); ++i) {
        psi.row(static_cast<Eigen::Index>(i)) = basis.evaluate(design.point(i)).transpose();
    }
    return psi;
}

enum class FitMethod { Regression, SpectralProjection };

inline const char* to_string(FitMethod m) {
    return m == FitMethod::Regression ? "regression" : "spectral-projection";
}

struct FitDiagnostics {
    double condition_estimate = 1.0;
    double residual_norm = 0.0;
    std::vector<std::string> warnings;
};

inline constexpr double kIllConditioned = 1e12;

/// A fitted expansion sum_alpha a_alpha psi_alpha(z).
class Model {
public:
    Model(Basis basis, Eigen::VectorXd coefficients, FitMethod method, FitDiagnostics diagnostics = {})
        : basis_(std::move(basis)), coefficients_(std::move(coefficients)), method_(method),
          diagnostics_(std::move(diagnostics)) {
        if (static_cast<std::size_t>(coefficients_.size()) != basis_.size()) {
            throw SizeError("coefficient count " + std::to_string(coefficients_.size()) + " does not match basis size " +
                            std::to_string(basis_.size()));
        }
        if (!coefficients_.allFinite()) throw FitError("expansion coefficients are not finite");
    }

    const Basis& basis() const noexcept { return basis_; }
    const Eigen::VectorXd& coefficients() const noexcept { return coefficients_; }
    FitMethod method() const noexcept { return method_; }
    const FitDiagnostics& diagnostics() const noexcept { return diagnostics_; }

    double predict(std::span<const double> z) const { return coefficients_.dot(basis_.evaluate(z)); }

    Eigen::VectorXd predict(const Design& design) const { return basis_matrix(design, basis_) * coefficients_; }

    // Mean a_0 and variance sum_{alpha != 0} a_alpha^2 gamma_alpha^2.
    std::pair<double, double> analytic_moments() const {
        double var = 0.0;
        for (std::size_t j = 1; j < basis_.size(); ++j) {
            const double a = coefficients_[static_cast<Eigen::Index>(j)];
            var += a * a * basis_.norm_squared(j);
        }
        return {coefficients_[0], var};
    }

    friend Model operator+(const Model& a, const Model& b) {
        if (!(a.basis_ == b.basis_)) throw ConfigError("cannot add expansions on different bases");
        return Model(a.basis_, a.coefficients_ + b.coefficients_, a.method_);
    }

private:
    Basis basis_;
    Eigen::VectorXd coefficients_;
    FitMethod method_;
    FitDiagnostics diagnostics_;
};

inline void require_finite(std::span<const double> y) {
    for (double v : y) {
        if (!std::isfinite(v)) throw DomainError("simulator outputs must be finite");
    }
}

/// Least-squares (point-collocation) fit on a total-order basis, solved by a
/// column-pivoted Householder QR of Psi.
inline Model fit_regression(const Design& design, std::span<const double> y, const Basis& basis) {
    if (basis.scheme().kind != Truncation::TotalOrder) {
        throw ConfigError("regression fits are paired with total-order truncation");
    }
    if (y.size() != design.size()) throw SizeError("output count does not match design size");
    require_finite(y);
    const std::size_t m = design.size();
    const std::size_t N = basis.size();
    if (m < N) {
        throw FitError("under-determined regression: " + std::to_string(m) + " design points for " +
                       std::to_string(N) + " expansion terms");
    }
    const Eigen::MatrixXd psi = basis_matrix(design, basis);
    const Eigen::Map<const Eigen::VectorXd> Y(y.data(), static_cast<Eigen::Index>(m));
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(psi);

    FitDiagnostics diag;
    const auto r = qr.matrixR().topLeftCorner(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N)).diagonal().cwiseAbs();
    diag.condition_estimate = r.minCoeff() > 0.0 ? r.maxCoeff() / r.minCoeff() : std::numeric_limits<double>::infinity();
    if (diag.condition_estimate > kIllConditioned) {
        diag.warnings.push_back("ill-conditioned regression: condition estimate " + std::to_string(diag.condition_estimate));
    }
    Eigen::VectorXd a = qr.solve(Y);
    diag.residual_norm = (psi * a - Y).norm();
    return Model(basis, std::move(a), FitMethod::Regression, std::move(diag));
}

// Node count per dimension of a tensor grid, taken from the design or
// counted from its distinct coordinates.
inline std::vector<int> grid_orders(const Design& design) {
    if (!design.grid_orders.empty()) return design.grid_orders;
    std::vector<int> orders;
    for (std::size_t d = 0; d < design.dim(); ++d) {
        std::set<double> distinct;
        for (std::size_t i = 0; i < design.size(); ++i) distinct.insert(design.point(i)[d]);
        orders.push_back(static_cast<int>(distinct.size()));
    }
    return orders;
}

/// Spectral projection: a_alpha = (1/gamma_alpha^2) sum_i w_i y_i psi_alpha(x_i)
/// on a weighted tensor grid.
inline Model fit_projection(const Design& design, std::span<const double> y, const Basis& basis) {
    if (basis.scheme().kind != Truncation::TensorProduct) {
        throw ConfigError("spectral projection is paired with tensor-product truncation");
    }
    if (!design.weights) throw ConfigError("spectral projection needs a tensor-grid design with quadrature weights");
    if (design.dim() != basis.dim()) throw DomainError("design dimension does not match basis dimension");
    if (y.size() != design.size()) throw SizeError("output count does not match design size");
    require_finite(y);
    const int p = basis.max_degree();
    const auto orders = grid_orders(design);
    for (std::size_t d = 0; d < orders.size(); ++d) {
        if (orders[d] <= p) {
            throw ConfigError("aliasing: dimension " + std::to_string(d + 1) + " has " + std::to_string(orders[d]) +
                              " nodes, degree " + std::to_string(p) + " needs at least " + std::to_string(p + 1));
        }
    }
    const auto& w = *design.weights;
    Eigen::VectorXd a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t i = 0; i < design.size(); ++i) a += (w[i] * y[i]) * basis.evaluate(design.point(i));
    for (std::size_t j = 0; j < basis.size(); ++j) a[static_cast<Eigen::Index>(j)] /= basis.norm_squared(j);

    FitDiagnostics diag;
    const Eigen::Map<const Eigen::VectorXd> Y(y.data(), static_cast<Eigen::Index>(y.size()));
    diag.residual_norm = (basis_matrix(design, basis) * a - Y).norm();
    return Model(basis, std::move(a), FitMethod::SpectralProjection, std::move(diag));
}

}  // namespace uqbench::pce
