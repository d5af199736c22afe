#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "uqbench/designs.hpp"
#include "uqbench/polychaos.hpp"

namespace uqbench::pce {
namespace {

TEST(Legendre, ClosedFormValues) {
    EXPECT_EQ(legendre(0, 0.3), 1.0);
    EXPECT_EQ(legendre(1, -0.7), -0.7);
    EXPECT_DOUBLE_EQ(legendre(2, 0.5), -0.125);
    for (int k = 0; k <= 12; ++k) {
        for (double z : {-1.0, -0.61, 0.0, 0.25, 0.9, 1.0}) {
            EXPECT_NEAR(legendre(k, z), oracle::legendre_closed_form(k, z), 1e-13) << k << " " << z;
        }
        EXPECT_NEAR(legendre(k, 1.0), 1.0, 1e-15);
    }
}

TEST(Legendre, NormConstantsMatchSimpsonOracle) {
    EXPECT_EQ(norm_squared(0), 1.0);
    for (int k = 0; k <= 6; ++k) {
        const double integral = oracle::simpson([k](double z) { return 0.5 * std::pow(oracle::legendre_closed_form(k, z), 2); }, -1.0, 1.0, 20000);
        EXPECT_NEAR(norm_squared(k), integral, 1e-12) << k;
    }
    EXPECT_NEAR(norm_squared(1), 1.0 / 3.0, 1e-16);
    EXPECT_NEAR(norm_squared(3), 1.0 / 7.0, 1e-16);
}

TEST(Basis, WorkedExampleOrdering) {
    const Basis total(2, TruncationScheme::total_order(2));
    const std::vector<MultiIndex> expected{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    EXPECT_EQ(total.indices(), expected);

    const Basis tensor(2, TruncationScheme::tensor_product(2));
    ASSERT_EQ(tensor.size(), 9u);
    auto extended = expected;
    extended.insert(extended.end(), {{2, 1}, {1, 2}, {2, 2}});
    EXPECT_EQ(tensor.indices(), extended);
}

TEST(Basis, TermCounts) {
    EXPECT_EQ(Basis(4, TruncationScheme::total_order(3)).size(), 35u);
    for (std::size_t n = 1; n <= 5; ++n) {
        for (int p = 0; p <= 4; ++p) {
            EXPECT_EQ(Basis(n, TruncationScheme::total_order(p)).size(),
                      static_cast<std::size_t>(oracle::binom(static_cast<int>(n) + p, p)));
            EXPECT_EQ(Basis(n, TruncationScheme::tensor_product(p)).size(), ipow(static_cast<std::size_t>(p) + 1, n));
        }
    }
    EXPECT_THROW(Basis(20, TruncationScheme::tensor_product(2)), SizeError);
    EXPECT_THROW(Basis(3, TruncationScheme::total_order(4), 10), SizeError);
}

TEST(Basis, GammaIsProductOfUnivariateNorms) {
    const Basis b(3, TruncationScheme::total_order(3));
    for (std::size_t j = 0; j < b.size(); ++j) {
        double g = 1.0;
        for (int k : b.index(j)) g *= 1.0 / (2.0 * k + 1.0);
        EXPECT_DOUBLE_EQ(b.norm_squared(j), g);
    }
    EXPECT_TRUE(b == Basis(3, TruncationScheme::total_order(3)));
}

TEST(BasisMatrix, StructuralProperties) {
    const Basis b(2, TruncationScheme::total_order(3));
    const auto d = sobol(7, 2, 3);
    const auto psi = basis_matrix(d, b);
    for (Eigen::Index i = 0; i < psi.rows(); ++i) EXPECT_EQ(psi(i, 0), 1.0);

    Design origin;
    origin.points = PointMatrix::Zero(1, 2);
    const auto at0 = basis_matrix(origin, b);
    for (std::size_t j = 0; j < b.size(); ++j) {
        const bool odd = b.index(j)[0] % 2 || b.index(j)[1] % 2;
        if (odd) {
            EXPECT_EQ(at0(0, static_cast<Eigen::Index>(j)), 0.0);
        }
    }

    const Basis b1(1, TruncationScheme::total_order(6));
    Design one;
    one.points = PointMatrix::Ones(1, 1);
    EXPECT_TRUE(basis_matrix(one, b1).isOnes(1e-15));
    EXPECT_THROW(basis_matrix(d, b1), DomainError);
}

TEST(Orthogonality, QuadratureInnerProductsOnMatchingGrid) {
    for (std::size_t n : {1u, 2u, 3u}) {
        for (int p : {1, 2, 3}) {
            const Basis b(n, TruncationScheme::tensor_product(p));
            const std::vector<int> ks(n, p + 1);
            const auto grid = tensor_grid(std::span<const int>(ks));
            const auto psi = basis_matrix(grid, b);
            const Eigen::Map<const Eigen::VectorXd> w(grid.weights->data(), static_cast<Eigen::Index>(grid.size()));
            const Eigen::MatrixXd gram = psi.transpose() * w.asDiagonal() * psi;
            for (std::size_t a = 0; a < b.size(); ++a) {
                for (std::size_t c = 0; c < b.size(); ++c) {
                    const double expected = a == c ? b.norm_squared(a) : 0.0;
                    EXPECT_NEAR(gram(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)), expected, 1e-10);
                }
            }
        }
    }
}

Eigen::VectorXd random_coefficients(std::size_t N, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd a(static_cast<Eigen::Index>(N));
    for (auto& v : a) v = g(rng);
    return a;
}

TEST(Regression, RecoversSynthesizedCoefficients) {
    for (std::size_t n : {1u, 2u, 4u}) {
        for (int p : {1, 2, 3}) {
            const Basis b(n, TruncationScheme::total_order(p));
            const auto truth = random_coefficients(b.size(), 11 * n + p);
            const auto d = sobol(2 * b.size(), n, 5);
            const Eigen::VectorXd y = basis_matrix(d, b) * truth;
            const auto model = fit_regression(d, std::span<const double>(y.data(), y.size()), b);
            EXPECT_LE((model.coefficients() - truth).norm(), 1e-8 * truth.norm());
            EXPECT_LT(model.diagnostics().residual_norm, 1e-9);
        }
    }
}

TEST(Regression, UniquelyDeterminedInterpolates) {
    const Basis b(2, TruncationScheme::total_order(3));
    const auto d = sobol(b.size(), 2, 17);
    std::vector<double> y;
    for (std::size_t i = 0; i < d.size(); ++i) y.push_back(oracle::toy(d.point(i)[0], d.point(i)[1]));
    const auto model = fit_regression(d, y, b);
    const double range = *std::max_element(y.begin(), y.end()) - *std::min_element(y.begin(), y.end());
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(model.predict(d.point(i)), y[i], 1e-8 * range);
}

TEST(Regression, ConstantOutput) {
    const Basis b(3, TruncationScheme::total_order(2));
    const auto d = sobol(30, 3, 0);
    const std::vector<double> y(30, 4.25);
    const auto model = fit_regression(d, y, b);
    EXPECT_NEAR(model.coefficients()[0], 4.25, 1e-12);
    EXPECT_LT(model.coefficients().tail(b.size() - 1).lpNorm<Eigen::Infinity>(), 1e-12);
    const auto [mean, var] = model.analytic_moments();
    EXPECT_NEAR(mean, 4.25, 1e-12);
    EXPECT_NEAR(var, 0.0, 1e-20);
}

TEST(Regression, ErrorPaths) {
    const Basis b(2, TruncationScheme::total_order(3));
    const auto d = sobol(b.size() - 1, 2, 0);
    const std::vector<double> y(d.size(), 1.0);
    EXPECT_THROW(fit_regression(d, y, b), FitError);
    EXPECT_THROW(fit_regression(sobol(20, 2, 0), std::vector<double>(20, 1.0), Basis(2, TruncationScheme::tensor_product(2))),
                 ConfigError);
    std::vector<double> bad(20, 1.0);
    bad[3] = std::nan("");
    EXPECT_THROW(fit_regression(sobol(20, 2, 0), bad, b), DomainError);
}

TEST(Regression, IllConditionedProceedsWithWarning) {
    // Points clustered near the origin make high-degree columns nearly dependent.
    const Basis b(1, TruncationScheme::total_order(8));
    Design d;
    d.points.resize(9, 1);
    for (int i = 0; i < 9; ++i) d.points(i, 0) = 1e-3 * (i - 4);
    std::vector<double> y(9);
    for (int i = 0; i < 9; ++i) y[static_cast<std::size_t>(i)] = std::sin(d.points(i, 0));
    const auto model = fit_regression(d, y, b);
    EXPECT_GT(model.diagnostics().condition_estimate, kIllConditioned);
    EXPECT_FALSE(model.diagnostics().warnings.empty());
}

TEST(Projection, RecoversSingleBasisFunction) {
    for (std::size_t n : {1u, 2u, 3u}) {
        const int p = 3;
        const Basis b(n, TruncationScheme::tensor_product(p));
        const std::vector<int> ks(n, p + 1);
        const auto grid = tensor_grid(std::span<const int>(ks));
        const auto psi = basis_matrix(grid, b);
        for (std::size_t beta = 0; beta < b.size(); ++beta) {
            const Eigen::VectorXd y = psi.col(static_cast<Eigen::Index>(beta));
            const auto model = fit_projection(grid, std::span<const double>(y.data(), y.size()), b);
            for (std::size_t j = 0; j < b.size(); ++j) {
                EXPECT_NEAR(model.coefficients()[static_cast<Eigen::Index>(j)], j == beta ? 1.0 : 0.0, 1e-10);
            }
        }
    }
}

TEST(Projection, ConstantAndErrorPaths) {
    const Basis b(2, TruncationScheme::tensor_product(2));
    const auto grid = tensor_grid({3, 3});
    const auto model = fit_projection(grid, std::vector<double>(9, -2.0), b);
    EXPECT_NEAR(model.coefficients()[0], -2.0, 1e-14);

    const auto coarse = tensor_grid({3, 2});
    EXPECT_THROW(fit_projection(coarse, std::vector<double>(6, 1.0), b), ConfigError);
    const auto pts = sobol(9, 2, 0);
    EXPECT_THROW(fit_projection(pts, std::vector<double>(9, 1.0), b), ConfigError);
    EXPECT_THROW(fit_projection(grid, std::vector<double>(9, 1.0), Basis(2, TruncationScheme::total_order(2))), ConfigError);
}

TEST(Projection, InterpolatesOnMatchingGrid) {
    const int p = 3;
    const Basis b(2, TruncationScheme::tensor_product(p));
    const auto grid = tensor_grid({p + 1, p + 1});
    std::vector<double> y;
    for (std::size_t i = 0; i < grid.size(); ++i) y.push_back(oracle::toy(grid.point(i)[0], grid.point(i)[1]));
    const auto model = fit_projection(grid, y, b);
    for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(model.predict(grid.point(i)), y[i], 1e-12);
}

TEST(Projection, ToyFunctionImprovesWithOrder) {
    const auto val = latin_hypercube(2000, 2, 4);
    auto fit_rmse = [&](int p) {
        const Basis b(2, TruncationScheme::tensor_product(p));
        const auto grid = tensor_grid({p + 1, p + 1});
        std::vector<double> y;
        for (std::size_t i = 0; i < grid.size(); ++i) y.push_back(oracle::toy(grid.point(i)[0], grid.point(i)[1]));
        const auto model = fit_projection(grid, y, b);
        double s = 0.0;
        for (std::size_t i = 0; i < val.size(); ++i) {
            const double pred = model.predict(val.point(i));
            EXPECT_TRUE(std::isfinite(pred));
            s += std::pow(pred - oracle::toy(val.point(i)[0], val.point(i)[1]), 2);
        }
        return std::sqrt(s / val.size());
    };
    EXPECT_LT(fit_rmse(3), fit_rmse(1));
}

TEST(Model, PredictionAndMoments) {
    const Basis b1(1, TruncationScheme::total_order(1));
    const Model pure_p1(b1, Eigen::Vector2d(0.0, 1.0), FitMethod::Regression);
    const auto [mean, var] = pure_p1.analytic_moments();
    EXPECT_EQ(mean, 0.0);
    EXPECT_NEAR(var, 1.0 / 3.0, 1e-16);

    const Basis b(2, TruncationScheme::total_order(2));
    Eigen::VectorXd c = Eigen::VectorXd::Zero(6);
    c[0] = 3.5;
    const Model constant(b, c, FitMethod::Regression);
    EXPECT_DOUBLE_EQ(constant.predict(std::vector{0.3, -0.8}), 3.5);

    const Model m1(b, random_coefficients(6, 1), FitMethod::Regression);
    const Model m2(b, random_coefficients(6, 2), FitMethod::Regression);
    const auto sum = m1 + m2;
    for (auto z : {std::vector{0.1, 0.2}, std::vector{-0.9, 0.5}}) {
        EXPECT_NEAR(sum.predict(z), m1.predict(z) + m2.predict(z), 1e-14);
    }
    EXPECT_THROW(Model(b, Eigen::VectorXd::Zero(5), FitMethod::Regression), SizeError);
}

TEST(Model, AnalyticMomentsMatchMonteCarlo) {
    const Basis b(3, TruncationScheme::total_order(3));
    const Model model(b, random_coefficients(b.size(), 42), FitMethod::Regression);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int samples = 100000;
    double s = 0.0;
    double s2 = 0.0;
    for (int i = 0; i < samples; ++i) {
        const std::vector<double> z{u(rng), u(rng), u(rng)};
        const double v = model.predict(z);
        s += v;
        s2 += v * v;
    }
    const double mc_mean = s / samples;
    const double mc_var = s2 / samples - mc_mean * mc_mean;
    const auto [mean, var] = model.analytic_moments();
    EXPECT_NEAR(mc_mean, mean, 0.01 * std::sqrt(var) + 0.01 * std::abs(mean));
    EXPECT_NEAR(mc_var, var, 0.01 * var);
}

TEST(Basis, OrderingIsDeterministic) {
    const Basis a(4, TruncationScheme::total_order(4));
    const Basis b(4, TruncationScheme::total_order(4));
    EXPECT_EQ(a.indices(), b.indices());
    for (std::size_t j = 1; j < a.size(); ++j) EXPECT_TRUE(graded_less(a.index(j - 1), a.index(j)));
}

}  // namespace
}  // namespace uqbench::pce
