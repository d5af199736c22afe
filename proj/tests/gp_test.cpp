#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "uqbench/designs.hpp"
#include "uqbench/gp.hpp"

namespace uqbench::gp {
namespace {

std::vector<double> toy_outputs(const Design& d) {
    std::vector<double> y;
    for (std::size_t i = 0; i < d.size(); ++i) y.push_back(oracle::toy(d.point(i)[0], d.point(i)[1]));
    return y;
}

TEST(Kernel, WorkedValues) {
    const std::vector<double> a{0.0};
    const std::vector<double> b{0.5};
    const Kernel se(KernelFamily::SquaredExponential, Eigen::VectorXd::Constant(1, 0.5));
    EXPECT_NEAR(se(a, b), std::exp(-0.5), 1e-15);
    EXPECT_NEAR(se(a, b), 0.60653, 1e-5);
    const Kernel mat(KernelFamily::Matern52, Eigen::VectorXd::Constant(1, 0.5));
    EXPECT_NEAR(mat(a, b), (1 + std::sqrt(5.0) + 5.0 / 3.0) * std::exp(-std::sqrt(5.0)), 1e-15);
    EXPECT_NEAR(mat(a, b), 0.52399, 1e-5);
}

TEST(Kernel, PropertiesAndDerivatives) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> l(0.1, 3.0);
    for (auto family : {KernelFamily::SquaredExponential, KernelFamily::Matern52}) {
        for (int rep = 0; rep < 50; ++rep) {
            Eigen::VectorXd lengths(3);
            for (auto& v : lengths) v = l(rng);
            const Kernel k(family, lengths);
            const std::vector<double> a{u(rng), u(rng), u(rng)};
            const std::vector<double> b{u(rng), u(rng), u(rng)};
            EXPECT_EQ(k(a, a), 1.0);
            EXPECT_DOUBLE_EQ(k(a, b), k(b, a));
            const double c = k(a, b);
            EXPECT_GT(c, 0.0);
            EXPECT_LE(c, 1.0);
            double d[3];
            k.eval(a, b, d);
            for (int j = 0; j < 3; ++j) {
                const auto at = [&](double t) {
                    Eigen::VectorXd ll = lengths;
                    ll[j] = std::exp(std::log(ll[j]) + t);
                    return Kernel(family, ll)(a, b);
                };
                EXPECT_NEAR(d[j], oracle::central_difference(at, 0.0, 1e-5), 1e-8);
            }
        }
    }
    EXPECT_THROW(Kernel(KernelFamily::Matern52, Eigen::VectorXd::Constant(1, 0.0)), DomainError);
}

TEST(Kernel, CorrelationMatrixIsPositiveDefinite) {
    const auto d = sobol(40, 3, 8);
    for (auto family : {KernelFamily::SquaredExponential, KernelFamily::Matern52}) {
        const Eigen::MatrixXd C = correlation_matrix(d.points, Kernel(family, Eigen::Vector3d(0.4, 0.7, 1.1)));
        EXPECT_TRUE(C.isApprox(C.transpose()));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
        EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
    }
}

TEST(MeanSelection, LinearDataSelectsLinearTerm) {
    const auto d = sobol(40, 2, 0);
    std::vector<double> y;
    for (std::size_t i = 0; i < d.size(); ++i) y.push_back(1.0 + 2.0 * d.point(i)[0]);
    const auto sel = stepwise_mean_basis(d, y);
    const std::vector<std::vector<int>> expected{{0, 0}, {1, 0}};
    EXPECT_EQ(sel.basis.terms, expected);
}

TEST(MeanSelection, ConstantDataKeepsConstant) {
    const auto d = sobol(40, 3, 0);
    const auto sel = stepwise_mean_basis(d, std::vector<double>(40, 7.0));
    EXPECT_EQ(sel.basis.size(), 1u);
}

TEST(MeanSelection, QuadraticStructureAndCaps) {
    const auto d = sobol(60, 2, 0);
    std::vector<double> y;
    std::mt19937_64 rng(1);
    std::normal_distribution<double> noise(0.0, 1e-3);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto z = d.point(i);
        y.push_back(0.5 + z[0] * z[1] - 3.0 * z[1] * z[1] + noise(rng));
    }
    const auto sel = stepwise_mean_basis(d, y);
    auto has = [&](std::vector<int> e) { return std::find(sel.basis.terms.begin(), sel.basis.terms.end(), e) != sel.basis.terms.end(); };
    EXPECT_TRUE(has({1, 1}));
    EXPECT_TRUE(has({0, 2}));

    const auto small = sobol(4, 2, 0);
    const auto fallback = stepwise_mean_basis(small, std::vector<double>{1, 2, 3, 4});
    EXPECT_EQ(fallback.basis.size(), 1u);
    EXPECT_FALSE(fallback.warnings.empty());

    const auto nine = sobol(9, 3, 0);
    const auto capped = stepwise_mean_basis(nine, toy_outputs(sobol(9, 2, 0)));
    EXPECT_LE(capped.basis.size(), 3u);
    EXPECT_EQ(mean_candidates(3).size(), 9u);
}

TEST(Likelihood, GradientMatchesFiniteDifferences) {
    const auto d = sobol(20, 2, 0);
    const auto y = toy_outputs(d);
    const MeanBasis mean{{{0, 0}, {1, 0}}};
    for (auto family : {KernelFamily::SquaredExponential, KernelFamily::Matern52}) {
        for (Eigen::Vector2d lengths : {Eigen::Vector2d(0.3, 0.5), Eigen::Vector2d(1.0, 0.2), Eigen::Vector2d(0.6, 0.9)}) {
            Eigen::VectorXd grad;
            log_marginal_likelihood(lengths, d, y, mean, family, &grad, 1e-8);
            for (int j = 0; j < 2; ++j) {
                const auto at = [&](double t) {
                    Eigen::VectorXd l = lengths;
                    l[j] = std::exp(std::log(l[j]) + t);
                    return log_marginal_likelihood(l, d, y, mean, family, nullptr, 1e-8);
                };
                const double fd = oracle::central_difference(at, 0.0, 1e-5);
                EXPECT_NEAR(grad[j], fd, 1e-5 * std::max(1.0, std::abs(fd)));
            }
        }
    }
}

// Sample a GP realization at the design points from the prior with known lengths.
std::vector<double> prior_draw(const Design& d, const Kernel& k, std::uint64_t seed) {
    const Eigen::MatrixXd C = correlation_matrix(d.points, k) + 1e-10 * Eigen::MatrixXd::Identity(d.size(), d.size());
    const Eigen::MatrixXd L = C.llt().matrixL();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXd e(static_cast<Eigen::Index>(d.size()));
    for (auto& v : e) v = g(rng);
    const Eigen::VectorXd y = 2.0 + 1.5 * (L * e).array();
    return {y.begin(), y.end()};
}

TEST(Fit, RecoversPriorLengths) {
    const auto d = sobol(60, 2, 21);
    const Eigen::Vector2d truth(0.4, 0.9);
    int recovered = 0;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto y = prior_draw(d, Kernel(KernelFamily::SquaredExponential, truth), seed);
        const auto model = fit(d, y, KernelFamily::SquaredExponential, MeanBasis::constant(2));
        const Eigen::ArrayXd ratio = model.kernel().lengths.array() / truth.array();
        recovered += (ratio > 0.5).all() && (ratio < 2.0).all();
    }
    EXPECT_GE(recovered, 2);
}

TEST(Fit, InterpolatesWithZeroVarianceAtDesign) {
    const auto d = sobol(25, 2, 2);
    const auto y = toy_outputs(d);
    for (auto family : {KernelFamily::SquaredExponential, KernelFamily::Matern52}) {
        const auto model = fit(d, y, family);
        const double range = *std::max_element(y.begin(), y.end()) - *std::min_element(y.begin(), y.end());
        for (std::size_t i = 0; i < d.size(); ++i) {
            const auto p = model.predict(d.point(i));
            EXPECT_NEAR(p.mean, y[i], 1e-6 * range);
            EXPECT_LE(p.variance, 1e-8 * model.lambda2());
        }
        EXPECT_EQ(model.dof(), static_cast<int>(d.size() - model.mean_basis().size()));
    }
}

TEST(Fit, PosteriorShape) {
    const auto d = sobol(30, 2, 0);
    const auto y = toy_outputs(d);
    const auto model = fit(d, y, KernelFamily::Matern52);
    const auto probes = latin_hypercube(50, 2, 6);
    for (std::size_t i = 0; i < probes.size(); ++i) {
        const auto p = model.predict(probes.point(i));
        EXPECT_GE(p.variance, 0.0);
        EXPECT_NEAR(model.predict_cov(probes.point(i), probes.point(i)), p.variance, 1e-12 + 1e-9 * p.variance);
        for (std::size_t k = 0; k < 5; ++k) {
            EXPECT_NEAR(model.predict_cov(probes.point(i), probes.point(k)), model.predict_cov(probes.point(k), probes.point(i)),
                        1e-12);
        }
        EXPECT_NEAR(model.predict_cov(probes.point(i), d.point(3)), 0.0, 1e-9 * model.lambda2());
    }
}

TEST(Fit, FarFieldRevertsToMean) {
    const auto d = sobol(20, 1, 0);
    std::vector<double> y;
    for (std::size_t i = 0; i < d.size(); ++i) y.push_back(std::sin(3.0 * d.point(i)[0]));
    const auto model = Model::at_lengths(d, y, Kernel(KernelFamily::SquaredExponential, Eigen::VectorXd::Constant(1, 0.05)),
                                         MeanBasis::constant(1));
    const std::vector<double> far{40.0};
    EXPECT_NEAR(model.predict(far).mean, model.beta()[0], 1e-12);
}

TEST(Fit, DegenerateOutputsSkipOptimization) {
    const auto d = sobol(12, 2, 0);
    std::vector<double> y;
    for (std::size_t i = 0; i < d.size(); ++i) y.push_back(3.0 - d.point(i)[1]);
    const auto model = fit(d, y, KernelFamily::SquaredExponential, MeanBasis{{{0, 0}, {0, 1}}});
    EXPECT_FALSE(model.warnings().empty());
    const std::vector<double> z{0.2, 0.4};
    EXPECT_NEAR(model.predict(z).mean, 2.6, 1e-8);
}

TEST(Fit, RejectsTooFewPoints) {
    const auto d = sobol(3, 2, 0);
    EXPECT_THROW(fit(d, std::vector<double>{1, 2, 3}, KernelFamily::Matern52, MeanBasis{{{0, 0}, {1, 0}, {0, 1}}}),
                 FitError);
    const auto tiny = fit(d, std::vector<double>{1, 2, 3}, KernelFamily::Matern52, MeanBasis::constant(2));
    EXPECT_NEAR(tiny.predict(d.point(1)).mean, 2.0, 1e-8);
    EXPECT_TRUE(std::isinf(tiny.predict(d.point(1)).variance));
    EXPECT_FALSE(tiny.warnings().empty());
    EXPECT_THROW(tiny.sample_posterior(d.points, 10, 1), FitError);
    const auto fallback = sobol(4, 2, 0);
    const auto model = fit(fallback, std::vector<double>{1, 2, 4, 3}, KernelFamily::Matern52);
    EXPECT_FALSE(model.warnings().empty());
}

TEST(Fit, DeterministicForSeed) {
    const auto d = sobol(20, 2, 4);
    const auto y = toy_outputs(d);
    const auto a = fit(d, y, KernelFamily::Matern52);
    const auto b = fit(d, y, KernelFamily::Matern52);
    EXPECT_EQ(a.kernel().lengths, b.kernel().lengths);
    EXPECT_EQ(a.log_likelihood(), b.log_likelihood());
}

TEST(Sampling, MomentsMatchStudentT) {
    const auto d = sobol(15, 2, 0);
    const auto y = toy_outputs(d);
    const auto model = fit(d, y, KernelFamily::SquaredExponential, MeanBasis::constant(2));
    const auto probes = latin_hypercube(4, 2, 12);
    const auto [mean, K] = model.joint_posterior(probes.points);
    const std::size_t S = 40000;
    const Eigen::MatrixXd draws = model.sample_posterior(probes.points, S, 77);
    const Eigen::RowVectorXd sample_mean = draws.colwise().mean();
    const Eigen::MatrixXd centered = draws.rowwise() - sample_mean;
    const Eigen::MatrixXd sample_cov = centered.transpose() * centered / static_cast<double>(S - 1);
    const double nu = model.dof();
    const Eigen::MatrixXd expected = nu / (nu - 2.0) * K;
    for (Eigen::Index i = 0; i < 4; ++i) {
        EXPECT_NEAR(sample_mean[i], mean[i], 4.0 * std::sqrt(expected(i, i) / S));
        EXPECT_NEAR(sample_cov(i, i), expected(i, i), 0.1 * expected(i, i));
    }
    const Eigen::MatrixXd again = model.sample_posterior(probes.points, 10, 77);
    EXPECT_EQ(again, model.sample_posterior(probes.points, 10, 77));
    EXPECT_THROW(model.sample_posterior(latin_hypercube(30, 2, 0).points, 2, 1, 20), SizeError);
}

TEST(Sampling, DesignPointsReproduceData) {
    const auto d = sobol(15, 2, 0);
    const auto y = toy_outputs(d);
    const auto model = fit(d, y, KernelFamily::Matern52);
    const Eigen::MatrixXd draws = model.sample_posterior(d.points.topRows(3), 50, 5);
    for (Eigen::Index i = 0; i < 3; ++i) {
        EXPECT_LT((draws.col(i).array() - y[static_cast<std::size_t>(i)]).abs().maxCoeff(), 1e-3);
    }
}

}  // namespace
}  // namespace uqbench::gp
