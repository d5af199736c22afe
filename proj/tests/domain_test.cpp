#include <gtest/gtest.h>

#include <random>

#include "uqbench/designs.hpp"
#include "uqbench/domain.hpp"

namespace uqbench {
namespace {

TEST(Domain, ToStandardMapsBoundsAndMidpoint) {
    const InputSpace space({"a"}, {{0.0, 10.0}});
    EXPECT_DOUBLE_EQ(to_standard(space, std::vector{5.0})[0], 0.0);
    EXPECT_DOUBLE_EQ(to_standard(space, std::vector{10.0})[0], 1.0);
    EXPECT_DOUBLE_EQ(to_standard(space, std::vector{0.0})[0], -1.0);

    const InputSpace shifted({"b"}, {{-2.0, 4.0}});
    EXPECT_DOUBLE_EQ(to_standard(shifted, std::vector{1.0})[0], 0.0);
}

TEST(Domain, FromStandardInvertsExamples) {
    const InputSpace space({"a"}, {{0.0, 10.0}});
    EXPECT_DOUBLE_EQ(from_standard(space, std::vector{0.0})[0], 5.0);
    const InputSpace shifted({"b"}, {{-2.0, 4.0}});
    EXPECT_DOUBLE_EQ(from_standard(shifted, std::vector{1.0})[0], 4.0);
}

TEST(Domain, OutOfBoundsNamesTheDimension) {
    const InputSpace space({"alpha", "beta"}, {{0.0, 1.0}, {0.0, 1.0}});
    try {
        to_standard(space, std::vector{0.5, 1.5});
        FAIL() << "expected DomainError";
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("beta"), std::string::npos);
    }
}

TEST(Domain, InvalidSpacesRejected) {
    EXPECT_THROW(InputSpace({"a"}, {{1.0, 1.0}}), DomainError);
    EXPECT_THROW(InputSpace({"a"}, {{2.0, 1.0}}), DomainError);
    EXPECT_THROW(InputSpace({}, {}), DomainError);
    EXPECT_THROW(InputSpace({"a", "b"}, {{0.0, 1.0}}), DomainError);
    EXPECT_THROW(StandardPoint({1.5}), DomainError);
}

TEST(Domain, BoundaryPointsWithinToleranceAccepted) {
    const StandardPoint p({1.0 + 1e-13, -1.0 - 1e-13});
    EXPECT_EQ(p[0], 1.0);
    EXPECT_EQ(p[1], -1.0);
}

TEST(Domain, RoundTripIsIdentityProperty) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Bounds> bounds;
        std::vector<double> x;
        for (int j = 0; j < 4; ++j) {
            double a = u(rng);
            double b = u(rng);
            if (a > b) std::swap(a, b);
            bounds.push_back({a, b + 1e-3});
            std::uniform_real_distribution<double> in(a, b);
            x.push_back(in(rng));
        }
        const InputSpace space({}, bounds);
        const auto back = from_standard(space, to_standard(space, x));
        for (int j = 0; j < 4; ++j) EXPECT_NEAR(back[j], x[j], 1e-12 * std::max(1.0, std::abs(x[j]))) << j;

        std::vector<double> z{2 * 0.1 - 1, 0.3, -0.99, 0.999};
        const auto zz = to_standard(space, from_standard(space, z));
        for (int j = 0; j < 4; ++j) EXPECT_NEAR(zz[j], z[j], 1e-9);
    }
}

TEST(Domain, JointDensity) {
    EXPECT_DOUBLE_EQ(joint_density(std::vector{0.0}), 0.5);
    EXPECT_DOUBLE_EQ(joint_density(std::vector{0.0, 0.0}), 0.25);
    EXPECT_DOUBLE_EQ(joint_density(std::vector(4, 0.3)), 0.0625);
}

TEST(Domain, JointDensityIntegratesToOneByTensorQuadrature) {
    // Unnormalized GL weights are 2^n times the normalized ones.
    const auto grid = tensor_grid({3, 2, 4});
    double total = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) total += (*grid.weights)[i] * 8.0 * joint_density(grid.point(i));
    EXPECT_NEAR(total, 1.0, 1e-14);
}

}  // namespace
}  // namespace uqbench
