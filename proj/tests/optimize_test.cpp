#include <gtest/gtest.h>

#include "uqbench/optimize.hpp"

namespace uqbench::opt {
namespace {

TEST(MinimizeBox, UnconstrainedQuadratic) {
    const Eigen::Vector3d center(0.3, -1.2, 2.0);
    const Eigen::Vector3d scale(1.0, 10.0, 0.1);
    auto f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        const Eigen::VectorXd d = x - center;
        g = 2.0 * scale.cwiseProduct(d);
        return d.dot(scale.cwiseProduct(d));
    };
    const auto r = minimize_box(f, Eigen::Vector3d::Zero(), Eigen::Vector3d::Constant(-5), Eigen::Vector3d::Constant(5));
    EXPECT_TRUE(r.converged);
    EXPECT_LT((r.x - center).norm(), 1e-5);
}

TEST(MinimizeBox, ActiveBoundsAreRespected) {
    auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g = 2.0 * (x - Eigen::Vector2d(3.0, -0.5));
        return (x - Eigen::Vector2d(3.0, -0.5)).squaredNorm();
    };
    const auto r = minimize_box(f, Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1));
    EXPECT_NEAR(r.x[0], 1.0, 1e-12);
    EXPECT_NEAR(r.x[1], -0.5, 1e-5);
}

TEST(MinimizeBox, Rosenbrock) {
    auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        const double a = 1.0 - x[0];
        const double b = x[1] - x[0] * x[0];
        g.resize(2);
        g[0] = -2.0 * a - 400.0 * x[0] * b;
        g[1] = 200.0 * b;
        return a * a + 100.0 * b * b;
    };
    BoxOptions o;
    o.max_iterations = 2000;
    o.value_tolerance = 0.0;
    const auto r = minimize_box(f, Eigen::Vector2d(-1.2, 1.0), Eigen::Vector2d(-2, -2), Eigen::Vector2d(2, 2), o);
    EXPECT_LT((r.x - Eigen::Vector2d(1, 1)).norm(), 1e-4);
}

TEST(MinimizeBox, InfeasibleRegionsBacktrack) {
    // Non-finite values act as walls; the search must stay inside x < 0.5.
    auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        g.resize(1);
        if (x[0] >= 0.5) return std::numeric_limits<double>::infinity();
        g[0] = 2.0 * (x[0] - 0.4);
        return (x[0] - 0.4) * (x[0] - 0.4);
    };
    const auto r = minimize_box(f, Eigen::VectorXd::Constant(1, -3.0), Eigen::VectorXd::Constant(1, -4.0),
                                Eigen::VectorXd::Constant(1, 4.0));
    EXPECT_NEAR(r.x[0], 0.4, 1e-5);
    const auto bad = minimize_box(f, Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, -4.0),
                                  Eigen::VectorXd::Constant(1, 4.0));
    EXPECT_FALSE(std::isfinite(bad.value));
}

}  // namespace
}  // namespace uqbench::opt
