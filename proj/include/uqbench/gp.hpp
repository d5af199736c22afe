#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "uqbench/designs.hpp"
#include "uqbench/errors.hpp"
#include "uqbench/optimize.hpp"
#include "uqbench/random.hpp"

namespace uqbench::gp {

enum class KernelFamily { SquaredExponential, Matern52 };

inline const char* to_string(KernelFamily f) {
    return f == KernelFamily::SquaredExponential ? "squared-exponential" : "matern52";
}

/// Separable stationary correlation with one length per input.
///
///   SE:        exp(-1/2 sum (d_j/delta_j)^2)
///   Matern-5/2: prod (1 + sqrt5 r_j + 5/3 r_j^2) * exp(-sqrt5 sum r_j),  r_j = d_j/delta_j
struct Kernel {
    KernelFamily family = KernelFamily::SquaredExponential;
    Eigen::VectorXd lengths;

    Kernel() = default;
    Kernel(KernelFamily f, Eigen::VectorXd l) : family(f), lengths(std::move(l)) {
        for (Eigen::Index j = 0; j < lengths.size(); ++j) {
            if (!(lengths[j] > 0.0) || !std::isfinite(lengths[j])) {
                throw DomainError("correlation lengths must be positive and finite");
            }
        }
    }

    std::size_t dim() const noexcept { return static_cast<std::size_t>(lengths.size()); }

    double operator()(std::span<const double> a, std::span<const double> b) const {
        return eval(a, b, nullptr);
    }

    // Correlation and its derivatives with respect to log(delta_j).
    double eval(std::span<const double> a, std::span<const double> b, double* dlog) const {
        const std::size_t n = dim();
        if (family == KernelFamily::SquaredExponential) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double r = (a[j] - b[j]) / lengths[static_cast<Eigen::Index>(j)];
                s += r * r;
                if (dlog) dlog[j] = r * r;
            }
            const double c = std::exp(-0.5 * s);
            if (dlog) {
                for (std::size_t j = 0; j < n; ++j) dlog[j] *= c;
            }
            return c;
        }
        constexpr double kSqrt5 = 2.23606797749978969641;
        double poly = 1.0;
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double r = std::abs(a[j] - b[j]) / lengths[static_cast<Eigen::Index>(j)];
            const double f = 1.0 + kSqrt5 * r + (5.0 / 3.0) * r * r;
            poly *= f;
            s += r;
            // d log f_j / d log delta_j
            if (dlog) dlog[j] = (5.0 / 3.0) * r * r * (1.0 + kSqrt5 * r) / f;
        }
        const double c = poly * std::exp(-kSqrt5 * s);
        if (dlog) {
            for (std::size_t j = 0; j < n; ++j) dlog[j] *= c;
        }
        return c;
    }
};

// ---------------------------------------------------------------------------
// Mean basis
// ---------------------------------------------------------------------------

/// Monomials h(z) of total degree <= 2 in the standard coordinates. The
/// constant term always comes first.
struct MeanBasis {
    std::vector<std::vector<int>> terms;

    static MeanBasis constant(std::size_t n) { return {{std::vector<int>(n, 0)}}; }

    std::size_t size() const noexcept { return terms.size(); }
    std::size_t dim() const noexcept { return terms.empty() ? 0 : terms.front().size(); }

    double term(std::size_t t, std::span<const double> z) const {
        double v = 1.0;
        for (std::size_t j = 0; j < z.size(); ++j) {
            for (int e = 0; e < terms[t][j]; ++e) v *= z[j];
        }
        return v;
    }

    Eigen::VectorXd evaluate(std::span<const double> z) const {
        Eigen::VectorXd h(static_cast<Eigen::Index>(size()));
        for (std::size_t t = 0; t < size(); ++t) h[static_cast<Eigen::Index>(t)] = term(t, z);
        return h;
    }

    Eigen::MatrixXd matrix(const PointMatrix& points) const {
        Eigen::MatrixXd H(points.rows(), static_cast<Eigen::Index>(size()));
        for (Eigen::Index i = 0; i < points.rows(); ++i) {
            const std::span<const double> z(points.data() + i * points.cols(), static_cast<std::size_t>(points.cols()));
            for (std::size_t t = 0; t < size(); ++t) H(i, static_cast<Eigen::Index>(t)) = term(t, z);
        }
        return H;
    }

    static std::string describe(const std::vector<int>& exps) {
        std::string out;
        for (std::size_t j = 0; j < exps.size(); ++j) {
            if (exps[j] == 0) continue;
            if (!out.empty()) out += "*";
            out += "z" + std::to_string(j + 1);
            if (exps[j] > 1) out += "^" + std::to_string(exps[j]);
        }
        return out.empty() ? "1" : out;
    }

    void validate(std::size_t n) const {
        if (terms.empty()) throw ConfigError("mean basis needs at least the constant term");
        for (std::size_t t = 0; t < terms.size(); ++t) {
            if (terms[t].size() != n) throw ConfigError("mean basis term has the wrong dimension");
            for (std::size_t u = 0; u < t; ++u) {
                if (terms[u] == terms[t]) throw ConfigError("mean basis terms must be distinct");
            }
        }
    }
};

// Candidate order: linear z_j, pure quadratics z_j^2, then interactions z_j z_k (j < k).
inline std::vector<std::vector<int>> mean_candidates(std::size_t n, int max_degree = 2) {
    std::vector<std::vector<int>> out;
    if (max_degree >= 1) {
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<int> e(n, 0);
            e[j] = 1;
            out.push_back(e);
        }
    }
    if (max_degree >= 2) {
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<int> e(n, 0);
            e[j] = 2;
            out.push_back(e);
        }
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = j + 1; k < n; ++k) {
                std::vector<int> e(n, 0);
                e[j] = 1;
                e[k] = 1;
                out.push_back(e);
            }
        }
    }
    return out;
}

struct MeanSelection {
    MeanBasis basis;
    std::vector<std::string> warnings;
};

namespace detail {

inline double ols_rss(const Eigen::MatrixXd& H, const Eigen::VectorXd& y) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(H);
    const Eigen::VectorXd b = qr.solve(y);
    return (y - H * b).squaredNorm();
}

}  // namespace detail

/// Forward stepwise selection of the mean basis by BIC of the ordinary
/// least-squares fit, BIC = m log(RSS/m) + q log m. Starts from the constant
/// and greedily adds the candidate with the lowest BIC while it improves on the
/// current model and q < min(m-3, floor(m/3)).
inline MeanSelection stepwise_mean_basis(const Design& design, std::span<const double> y, int max_degree = 2) {
    const std::size_t m = design.size();
    const std::size_t n = design.dim();
    MeanSelection sel{MeanBasis::constant(n), {}};
    if (m < 5) {
        sel.warnings.push_back("stepwise mean selection needs m >= 5 (m = " + std::to_string(m) +
                               "); using the constant mean");
        return sel;
    }
    const Eigen::Map<const Eigen::VectorXd> Y(y.data(), static_cast<Eigen::Index>(m));
    // RSS below this counts as an exact fit; no candidate can then improve BIC.
    const double rss_floor = std::max(1e-20 * Y.squaredNorm(), std::numeric_limits<double>::min());
    const double md = static_cast<double>(m);
    auto bic = [&](const MeanBasis& b) {
        const double rss = std::max(detail::ols_rss(b.matrix(design.points), Y), rss_floor);
        return md * std::log(rss / md) + static_cast<double>(b.size()) * std::log(md);
    };
    const std::size_t cap = std::min(m - 3, m / 3);
    auto candidates = mean_candidates(n, max_degree);
    std::vector<bool> used(candidates.size(), false);
    double current = bic(sel.basis);
    while (sel.basis.size() < cap) {
        std::optional<std::size_t> best;
        double best_bic = current;
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            if (used[c]) continue;
            MeanBasis trial = sel.basis;
            trial.terms.push_back(candidates[c]);
            const double b = bic(trial);
            if (b < best_bic) {
                best_bic = b;
                best = c;
            }
        }
        if (!best) break;
        used[*best] = true;
        sel.basis.terms.push_back(candidates[*best]);
        current = best_bic;
    }
    return sel;
}

// ---------------------------------------------------------------------------
// Marginal likelihood
// ---------------------------------------------------------------------------

inline constexpr double kJitterStart = 1e-10;
inline constexpr double kJitterMax = 1e-6;

/// Correlation matrix A = C + tau I with the smallest tau in the escalation
/// schedule 1e-10, 1e-9, ..., 1e-6 that makes it numerically positive definite.
/// The diagonal of C is one, so tau is relative to mean(diag A).
struct CorrelationFactor {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;
};

inline Eigen::MatrixXd correlation_matrix(const PointMatrix& X, const Kernel& kernel) {
    const Eigen::Index m = X.rows();
    const auto n = static_cast<std::size_t>(X.cols());
    Eigen::MatrixXd A(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        A(i, i) = 1.0;
        const std::span<const double> xi(X.data() + i * X.cols(), n);
        for (Eigen::Index k = 0; k < i; ++k) {
            const double c = kernel(xi, std::span<const double>(X.data() + k * X.cols(), n));
            A(i, k) = c;
            A(k, i) = c;
        }
    }
    return A;
}

inline std::optional<CorrelationFactor> factor_correlation(const Eigen::MatrixXd& C,
                                                           std::optional<double> fixed_jitter = std::nullopt) {
    auto attempt = [&](double tau) -> std::optional<CorrelationFactor> {
        Eigen::MatrixXd A = C;
        A.diagonal().array() += tau;
        CorrelationFactor f{Eigen::LLT<Eigen::MatrixXd>(A), tau};
        if (f.llt.info() != Eigen::Success) return std::nullopt;
        const auto d = f.llt.matrixLLT().diagonal();
        if (!(d.minCoeff() > 0.0) || !d.allFinite()) return std::nullopt;
        return f;
    };
    if (fixed_jitter) return attempt(*fixed_jitter);
    for (double tau = kJitterStart; tau <= kJitterMax * 1.0000001; tau *= 10.0) {
        if (auto f = attempt(tau)) return f;
    }
    return std::nullopt;
}

/// Everything the marginal likelihood and the posterior need at one set of
/// correlation lengths.
struct Profile {
    CorrelationFactor factor;
    Eigen::MatrixXd Ainv_H;                  // A^{-1} H
    Eigen::LLT<Eigen::MatrixXd> G;           // H^T A^{-1} H
    Eigen::VectorXd beta;
    Eigen::VectorXd alpha;                   // A^{-1} (Y - H beta)
    double lambda2 = 0.0;                    // (Y - H beta)^T A^{-1} (Y - H beta)
    double log_det_A = 0.0;
    double log_det_G = 0.0;
};

inline std::optional<Profile> profile(const Eigen::MatrixXd& C, const Eigen::MatrixXd& H, const Eigen::VectorXd& Y,
                                      std::optional<double> fixed_jitter = std::nullopt) {
    auto factor = factor_correlation(C, fixed_jitter);
    if (!factor) return std::nullopt;
    Profile p;
    p.factor = std::move(*factor);
    p.Ainv_H = p.factor.llt.solve(H);
    const Eigen::MatrixXd G = H.transpose() * p.Ainv_H;
    p.G.compute(G);
    if (p.G.info() != Eigen::Success) return std::nullopt;
    p.beta = p.G.solve(p.Ainv_H.transpose() * Y);
    const Eigen::VectorXd resid = Y - H * p.beta;
    p.alpha = p.factor.llt.solve(resid);
    p.lambda2 = std::max(resid.dot(p.alpha), 0.0);
    p.log_det_A = 2.0 * p.factor.llt.matrixLLT().diagonal().array().log().sum();
    p.log_det_G = 2.0 * p.G.matrixLLT().diagonal().array().log().sum();
    if (!std::isfinite(p.log_det_G) || !p.beta.allFinite()) return std::nullopt;
    return p;
}

/// Log of L(delta|Y) ∝ (lambda2)^{-(m-q)/2} |A|^{-1/2} |H^T A^{-1} H|^{-1/2}
/// with constant terms dropped, so values are comparable only for the same
/// (design, Y, mean basis). If `grad_log` is non-null it receives the gradient
/// with respect to log(delta):
///
///   d/dtheta_j = (m-q)/2 * alpha^T A_j alpha / lambda2 - 1/2 tr(P A_j),
///   P = A^{-1} - A^{-1} H (H^T A^{-1} H)^{-1} H^T A^{-1}.
///
/// Throws FitError when A cannot be factorized at the maximum jitter.
inline double log_marginal_likelihood(const Eigen::VectorXd& lengths, const Design& design, std::span<const double> y,
                                      const MeanBasis& mean_basis, KernelFamily family,
                                      Eigen::VectorXd* grad_log = nullptr,
                                      std::optional<double> fixed_jitter = std::nullopt) {
    const Kernel kernel(family, lengths);
    const auto m = static_cast<Eigen::Index>(design.size());
    const auto q = static_cast<Eigen::Index>(mean_basis.size());
    if (m <= q) throw FitError("log-likelihood needs m > q");
    const Eigen::Map<const Eigen::VectorXd> Y(y.data(), m);
    const Eigen::MatrixXd H = mean_basis.matrix(design.points);
    const Eigen::MatrixXd C = correlation_matrix(design.points, kernel);
    auto prof = profile(C, H, Y, fixed_jitter);
    if (!prof) {
        std::string msg = "correlation matrix not positive definite at maximum jitter for delta = (";
        for (Eigen::Index j = 0; j < lengths.size(); ++j) msg += (j ? ", " : "") + std::to_string(lengths[j]);
        throw FitError(msg + ")");
    }
    const double dof = static_cast<double>(m - q);
    const double value = -0.5 * dof * std::log(prof->lambda2) - 0.5 * prof->log_det_A - 0.5 * prof->log_det_G;
    if (grad_log) {
        const std::size_t n = design.dim();
        const Eigen::MatrixXd Ainv = prof->factor.llt.solve(Eigen::MatrixXd::Identity(m, m));
        const Eigen::MatrixXd P = Ainv - prof->Ainv_H * prof->G.solve(prof->Ainv_H.transpose());
        Eigen::VectorXd quad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        Eigen::VectorXd trace = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        std::vector<double> dc(n);
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index k = 0; k < i; ++k) {
                kernel.eval(design.point(static_cast<std::size_t>(i)), design.point(static_cast<std::size_t>(k)), dc.data());
                const double aa = 2.0 * prof->alpha[i] * prof->alpha[k];
                const double pp = 2.0 * P(i, k);
                for (std::size_t j = 0; j < n; ++j) {
                    quad[static_cast<Eigen::Index>(j)] += aa * dc[j];
                    trace[static_cast<Eigen::Index>(j)] += pp * dc[j];
                }
            }
        }
        *grad_log = 0.5 * dof * quad / prof->lambda2 - 0.5 * trace;
    }
    return value;
}

// ---------------------------------------------------------------------------
// Fitted emulator
// ---------------------------------------------------------------------------

/// Student-t marginal posterior t_dof(mean, variance).
struct PosteriorPrediction {
    double mean = 0.0;
    double variance = 0.0;
    int dof = 0;
};

struct FitOptions {
    int starts = 5;
    std::uint64_t seed = 1;
    double lower_factor = 1e-2;  // bounds are [factor * 2, factor * 2] per dimension on the cube
    double upper_factor = 1e2;
    opt::BoxOptions optimizer{};
};

class Model;
inline Model fit(const Design& design, std::span<const double> y, KernelFamily family, const MeanBasis& mean_basis,
                 const FitOptions& options = {});
inline Model fit(const Design& design, std::span<const double> y, KernelFamily family, const FitOptions& options = {});

class Model {
public:
    /// Rebuilds every cached quantity at fixed correlation lengths. With
    /// `jitter` given, that exact diagonal inflation is used; otherwise the
    /// escalation schedule picks one.
    static Model at_lengths(const Design& design, std::span<const double> y, Kernel kernel, MeanBasis mean_basis,
                            std::optional<double> jitter = std::nullopt, std::uint64_t seed = 0) {
        Model model;
        model.points_ = design.points;
        model.y_ = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
        model.kernel_ = std::move(kernel);
        model.mean_basis_ = std::move(mean_basis);
        model.seed_ = seed;
        model.rebuild(jitter);
        return model;
    }

    const Kernel& kernel() const noexcept { return kernel_; }
    const MeanBasis& mean_basis() const noexcept { return mean_basis_; }
    const Eigen::VectorXd& beta() const noexcept { return prof_.beta; }
    double lambda2() const noexcept { return prof_.lambda2; }
    double jitter() const noexcept { return prof_.factor.jitter; }
    double log_likelihood() const noexcept { return log_likelihood_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const PointMatrix& points() const noexcept { return points_; }
    const Eigen::VectorXd& outputs() const noexcept { return y_; }
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(points_.rows()); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(points_.cols()); }
    int dof() const noexcept { return static_cast<int>(size() - mean_basis_.size()); }

    // lambda2 / (m - q - 2)
    // Infinite when m - q <= 2: the t posterior then has no finite variance.
    double variance_scale() const noexcept {
        if (dof() <= 2) return std::numeric_limits<double>::infinity();
        return prof_.lambda2 / static_cast<double>(dof() - 2);
    }
    bool has_finite_variance() const noexcept { return dof() > 2; }

    PosteriorPrediction predict(std::span<const double> z) const {
        check_dim(z);
        const Eigen::VectorXd r = cross_correlation(z);
        const Eigen::VectorXd h = mean_basis_.evaluate(z);
        PosteriorPrediction out;
        out.dof = dof();
        out.mean = h.dot(prof_.beta) + r.dot(prof_.alpha);
        const Eigen::VectorXd w = prof_.factor.llt.matrixL().solve(r);
        const Eigen::VectorXd Q = h - prof_.Ainv_H.transpose() * r;
        const double c = 1.0 + prof_.factor.jitter;  // augmented correlation at zero lag
        const double v = std::max(c - w.squaredNorm() + Q.dot(prof_.G.solve(Q)), 0.0);
        out.variance = has_finite_variance() ? variance_scale() * v : std::numeric_limits<double>::infinity();
        return out;
    }

    // V*(z, z')
    double predict_cov(std::span<const double> a, std::span<const double> b) const {
        require_finite_variance();
        check_dim(a);
        check_dim(b);
        const Eigen::VectorXd ra = cross_correlation(a);
        const Eigen::VectorXd rb = cross_correlation(b);
        const Eigen::VectorXd Qa = mean_basis_.evaluate(a) - prof_.Ainv_H.transpose() * ra;
        const Eigen::VectorXd Qb = mean_basis_.evaluate(b) - prof_.Ainv_H.transpose() * rb;
        const double c = augmented(a, b);
        const double v = c - ra.dot(prof_.factor.llt.solve(rb)) + Qa.dot(prof_.G.solve(Qb));
        return variance_scale() * v;
    }

    /// Posterior means and the P x P posterior scale matrix V* at a point set.
    std::pair<Eigen::VectorXd, Eigen::MatrixXd> joint_posterior(const PointMatrix& Z) const {
        require_finite_variance();
        if (static_cast<std::size_t>(Z.cols()) != dim()) throw DomainError("probe dimension does not match model");
        const Eigen::Index P = Z.rows();
        const auto n = dim();
        Eigen::MatrixXd R(P, static_cast<Eigen::Index>(size()));
        for (Eigen::Index i = 0; i < P; ++i) {
            R.row(i) = cross_correlation(std::span<const double>(Z.data() + i * Z.cols(), n)).transpose();
        }
        const Eigen::MatrixXd Hp = mean_basis_.matrix(Z);
        const Eigen::VectorXd mean = Hp * prof_.beta + R * prof_.alpha;
        const Eigen::MatrixXd W = prof_.factor.llt.matrixL().solve(R.transpose());
        const Eigen::MatrixXd Q = Hp - R * prof_.Ainv_H;
        Eigen::MatrixXd K(P, P);
        for (Eigen::Index i = 0; i < P; ++i) {
            const std::span<const double> zi(Z.data() + i * Z.cols(), n);
            for (Eigen::Index k = 0; k <= i; ++k) {
                const double c = augmented(zi, std::span<const double>(Z.data() + k * Z.cols(), n));
                K(i, k) = c;
                K(k, i) = c;
            }
        }
        K.noalias() -= W.transpose() * W;
        K.noalias() += Q * prof_.G.solve(Q.transpose());
        K = 0.5 * (K + K.transpose()).eval();
        K *= variance_scale();
        return {mean, K};
    }

    /// S joint draws (rows) from the multivariate Student-t posterior with
    /// m - q degrees of freedom at the P points (columns). Each draw shares one
    /// chi-square scale across all points.
    Eigen::MatrixXd sample_posterior(const PointMatrix& Z, std::size_t draws, std::uint64_t seed,
                                     std::size_t max_points = 2000) const {
        if (static_cast<std::size_t>(Z.rows()) > max_points) {
            throw SizeError("posterior sampling at " + std::to_string(Z.rows()) + " points exceeds the cap of " +
                            std::to_string(max_points));
        }
        auto [mean, K] = joint_posterior(Z);
        const Eigen::Index P = Z.rows();
        const auto S = static_cast<Eigen::Index>(draws);
        const double scale = K.diagonal().mean();

        Engine rng = make_engine(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::chi_squared_distribution<double> chi2(static_cast<double>(dof()));
        Eigen::MatrixXd normals(P, S);
        Eigen::VectorXd t_scale(S);
        for (Eigen::Index s = 0; s < S; ++s) {
            t_scale[s] = std::sqrt(static_cast<double>(dof()) / chi2(rng));
            for (Eigen::Index i = 0; i < P; ++i) normals(i, s) = normal(rng);
        }

        Eigen::MatrixXd out = mean.transpose().replicate(S, 1);
        if (!(scale > 0.0)) return out;  // zero posterior covariance everywhere

        std::optional<Eigen::LLT<Eigen::MatrixXd>> llt;
        for (double tau = 1e-10; tau <= 1e-4 * 1.0000001; tau *= 10.0) {
            Eigen::MatrixXd Kj = K;
            Kj.diagonal().array() += tau * scale;
            Eigen::LLT<Eigen::MatrixXd> f(Kj);
            if (f.info() == Eigen::Success && f.matrixLLT().diagonal().minCoeff() > 0.0) {
                llt = std::move(f);
                break;
            }
        }
        if (!llt) throw FitError("posterior covariance not positive definite at maximum jitter");
        const Eigen::MatrixXd L = llt->matrixL();
        Eigen::MatrixXd correlated = L.triangularView<Eigen::Lower>() * normals;  // P x S
        correlated *= t_scale.asDiagonal();
        out += correlated.transpose();
        return out;
    }

private:
    friend Model fit(const Design&, std::span<const double>, KernelFamily, const MeanBasis&, const FitOptions&);
    friend Model fit(const Design&, std::span<const double>, KernelFamily, const FitOptions&);

    Model() = default;

    void require_finite_variance() const {
        if (!has_finite_variance()) {
            throw FitError("posterior covariance needs m - q > 2 (m - q = " + std::to_string(dof()) + ")");
        }
    }

    void check_dim(std::span<const double> z) const {
        if (z.size() != dim()) throw DomainError("point dimension does not match model dimension");
    }

    // c(a, b) + tau * [a == b]: the jitter acts as a white-noise term of the
    // correlation function, so the posterior still interpolates exactly.
    double augmented(std::span<const double> a, std::span<const double> b) const {
        const double c = kernel_(a, b);
        return std::equal(a.begin(), a.end(), b.begin()) ? c + prof_.factor.jitter : c;
    }

    Eigen::VectorXd cross_correlation(std::span<const double> z) const {
        const auto n = dim();
        Eigen::VectorXd r(points_.rows());
        for (Eigen::Index i = 0; i < points_.rows(); ++i) {
            r[i] = augmented(z, std::span<const double>(points_.data() + i * points_.cols(), n));
        }
        return r;
    }

    void rebuild(std::optional<double> jitter) {
        const auto m = static_cast<std::size_t>(points_.rows());
        const auto q = mean_basis_.size();
        mean_basis_.validate(dim());
        if (kernel_.dim() != dim()) throw ConfigError("kernel dimension does not match design");
        if (!(m > q)) {
            throw FitError("GP needs more design points than mean-basis terms (m = " + std::to_string(m) +
                           ", q = " + std::to_string(q) + ")");
        }
        H_ = mean_basis_.matrix(points_);
        const Eigen::MatrixXd C = correlation_matrix(points_, kernel_);
        auto prof = profile(C, H_, y_, jitter);
        if (!prof) throw FitError("correlation matrix not positive definite at maximum jitter");
        prof_ = std::move(*prof);
        log_likelihood_ = -0.5 * static_cast<double>(m - q) * std::log(prof_.lambda2) - 0.5 * prof_.log_det_A -
                          0.5 * prof_.log_det_G;
    }

    PointMatrix points_;
    Eigen::VectorXd y_;
    Kernel kernel_;
    MeanBasis mean_basis_;
    Eigen::MatrixXd H_;
    Profile prof_;
    double log_likelihood_ = 0.0;
    std::uint64_t seed_ = 0;
    std::vector<std::string> warnings_;
};

/// Plug-in maximum-likelihood fit of the correlation lengths.
///
/// Maximizes the log marginal likelihood over log(delta) inside
/// [log(1e-2 * 2), log(1e2 * 2)] per dimension with a bounded quasi-Newton
/// method and analytic gradients, from `starts` Latin-hypercube starting
/// points. Outputs lying exactly in the span of the mean basis skip the search.
inline Model fit(const Design& design, std::span<const double> y, KernelFamily family, const MeanBasis& mean_basis,
                 const FitOptions& options) {
    const std::size_t m = design.size();
    const std::size_t n = design.dim();
    if (y.size() != m) throw SizeError("output count does not match design size");
    for (double v : y) {
        if (!std::isfinite(v)) throw DomainError("simulator outputs must be finite");
    }
    mean_basis.validate(n);
    if (!(m > mean_basis.size())) {
        throw FitError("GP needs m > q (m = " + std::to_string(m) + ", q = " + std::to_string(mean_basis.size()) + ")");
    }
    constexpr double kCubeWidth = 2.0;
    const Eigen::VectorXd lo = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), std::log(options.lower_factor * kCubeWidth));
    const Eigen::VectorXd hi = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), std::log(options.upper_factor * kCubeWidth));

    const Eigen::Map<const Eigen::VectorXd> Y(y.data(), static_cast<Eigen::Index>(m));
    const Eigen::MatrixXd H = mean_basis.matrix(design.points);
    const double resid = Y.size() ? std::sqrt(detail::ols_rss(H, Y)) : 0.0;
    std::vector<std::string> warnings;
    if (m <= mean_basis.size() + 2) {
        warnings.push_back("m - q = " + std::to_string(m - mean_basis.size()) +
                           ": posterior variance is infinite; only the posterior mean is usable");
    }
    if (resid <= 1e-12 * std::max(Y.norm(), std::numeric_limits<double>::min()) || Y.isZero(0.0)) {
        warnings.emplace_back("outputs lie in the span of the mean basis; correlation lengths not optimized");
        Model model = Model::at_lengths(design, y, Kernel(family, (0.5 * (lo + hi)).array().exp()), mean_basis,
                                        std::nullopt, options.seed);
        model.warnings_ = std::move(warnings);
        return model;
    }

    auto objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
        try {
            const double v = log_marginal_likelihood(theta.array().exp(), design, y, mean_basis, family, &grad);
            grad = -grad;
            return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
        } catch (const FitError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    const int starts = std::max(options.starts, 1);
    const Design start_design = latin_hypercube(static_cast<std::size_t>(starts), n, split_seed(options.seed, "gp-starts"));
    std::optional<opt::BoxResult> best;
    for (int s = 0; s < starts; ++s) {
        Eigen::VectorXd x0(static_cast<Eigen::Index>(n));
        for (std::size_t j = 0; j < n; ++j) {
            const double u = 0.5 * (start_design.point(static_cast<std::size_t>(s))[j] + 1.0);
            x0[static_cast<Eigen::Index>(j)] = lo[static_cast<Eigen::Index>(j)] + u * (hi[static_cast<Eigen::Index>(j)] - lo[static_cast<Eigen::Index>(j)]);
        }
        auto result = opt::minimize_box(objective, x0, lo, hi, options.optimizer);
        if (std::isfinite(result.value) && (!best || result.value < best->value)) best = std::move(result);
    }
    if (!best) throw FitError("every likelihood optimization start failed to factorize the correlation matrix");

    Model model = Model::at_lengths(design, y, Kernel(family, best->x.array().exp()), mean_basis, std::nullopt, options.seed);
    model.warnings_ = std::move(warnings);
    return model;
}

/// Fit with a stepwise-selected mean basis.
inline Model fit(const Design& design, std::span<const double> y, KernelFamily family, const FitOptions& options) {
    auto selection = stepwise_mean_basis(design, y);
    Model model = fit(design, y, family, selection.basis, options);
    model.warnings_.insert(model.warnings_.begin(), selection.warnings.begin(), selection.warnings.end());
    return model;
}

}  // namespace uqbench::gp
