#include <gtest/gtest.h>

#include <set>

#include "oracles.hpp"
#include "uqbench/designs.hpp"

namespace uqbench {
namespace {

// Raw [0,1) coordinates of the Joe-Kuo sequence at selected indices and
// dimensions (1-based dims 1, 2, 3, 5, 100, 501, 1111), generated with an
// independent reference implementation (scipy.stats.qmc.Sobol, scramble=False).
struct SobolReference {
    std::uint64_t index;
    std::array<double, 7> u;
};
constexpr std::array<std::size_t, 7> kRefDims{0, 1, 2, 4, 99, 500, 1110};
constexpr std::array<SobolReference, 7> kSobolRef{{
    {1, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5}},
    {2, {0.75, 0.25, 0.25, 0.75, 0.75, 0.25, 0.75}},
    {3, {0.25, 0.75, 0.75, 0.25, 0.25, 0.75, 0.25}},
    {7, {0.125, 0.625, 0.375, 0.125, 0.625, 0.625, 0.625}},
    {100, {0.4140625, 0.2578125, 0.7734375, 0.8828125, 0.8828125, 0.1796875, 0.4609375}},
    {777, {0.6923828125, 0.9365234375, 0.1630859375, 0.6357421875, 0.5107421875, 0.8701171875, 0.5849609375}},
    {1023, {0.0009765625, 0.7529296875, 0.6123046875, 0.1865234375, 0.5302734375, 0.3818359375, 0.5888671875}},
}};

TEST(Sobol, MatchesReferenceDirectionNumbers) {
    const SobolSequence seq(1111);
    for (const auto& ref : kSobolRef) {
        const auto u = seq.unit_point(ref.index);
        for (std::size_t k = 0; k < kRefDims.size(); ++k) {
            EXPECT_EQ(u[kRefDims[k]], ref.u[k]) << "index " << ref.index << " dim " << kRefDims[k] + 1;
        }
    }
}

TEST(Sobol, RawFirstPointIsOriginAndIsSkipped) {
    const SobolSequence seq(3);
    for (double v : seq.unit_point(0)) EXPECT_EQ(v, 0.0);
    const auto d = sobol(4, 2, 0);
    EXPECT_EQ(d.points(0, 0), 0.0);  // raw index 1 is 0.5 -> standard 0
    EXPECT_EQ(d.points(0, 1), 0.0);
}

TEST(Sobol, PrefixProperty) {
    for (std::uint64_t seed : {0ull, 1ull, 12345ull}) {
        const auto big = sobol(8, 2, seed);
        const auto small = sobol(4, 2, seed);
        EXPECT_EQ(big.points.topRows(4), small.points);
        EXPECT_EQ(big.prefix(4).points, small.points);
    }
}

TEST(Sobol, PointsInCubeAndScramblingChangesPoints) {
    const auto raw = sobol(64, 5, 0);
    const auto scrambled = sobol(64, 5, 99);
    EXPECT_NO_THROW(validate(raw));
    EXPECT_NO_THROW(validate(scrambled));
    EXPECT_NE(raw.points, scrambled.points);
    EXPECT_EQ(scrambled.points, sobol(64, 5, 99).points);
}

TEST(Sobol, ScrambledSequenceKeepsStratification) {
    // Any 2^k consecutive-from-zero block of a (scrambled) Sobol sequence puts
    // one point in each of the 2^k elementary intervals of every coordinate.
    const SobolSequence seq(4, 2024);
    std::vector<std::set<std::uint32_t>> cells(4);
    for (std::uint64_t i = 0; i < 64; ++i) {
        const auto u = seq.unit_point(i);
        for (std::size_t d = 0; d < 4; ++d) cells[d].insert(static_cast<std::uint32_t>(u[d] * 64));
    }
    for (const auto& c : cells) EXPECT_EQ(c.size(), 64u);
}

TEST(Sobol, UnsupportedDimension) {
    EXPECT_THROW(SobolSequence(1112), SizeError);
    EXPECT_NO_THROW(SobolSequence(1111));
}

TEST(LatinHypercube, Stratification) {
    const auto d = latin_hypercube(2, 1, 5);
    const double a = std::min(d.points(0, 0), d.points(1, 0));
    const double b = std::max(d.points(0, 0), d.points(1, 0));
    EXPECT_GE(a, -1.0);
    EXPECT_LT(a, 0.0);
    EXPECT_GE(b, 0.0);
    EXPECT_LE(b, 1.0);
}

TEST(LatinHypercube, MarginalHistogramsAreAllOnes) {
    for (std::uint64_t seed : {1ull, 2ull, 77ull}) {
        const std::size_t m = 97;
        const auto d = latin_hypercube(m, 4, seed);
        for (std::size_t j = 0; j < 4; ++j) {
            std::vector<int> hist(m, 0);
            for (std::size_t i = 0; i < m; ++i) {
                const auto cell = static_cast<std::size_t>(std::floor((d.points(i, j) + 1.0) / 2.0 * m));
                ++hist[std::min(cell, m - 1)];
            }
            for (int h : hist) EXPECT_EQ(h, 1);
        }
    }
}

TEST(LatinHypercube, SeedControlsDesign) {
    EXPECT_EQ(latin_hypercube(20, 3, 1).points, latin_hypercube(20, 3, 1).points);
    EXPECT_NE(latin_hypercube(20, 3, 1).points, latin_hypercube(20, 3, 2).points);
}

TEST(GaussLegendre, SmallRules) {
    const auto r1 = gauss_legendre_1d(1);
    EXPECT_EQ(r1.nodes, std::vector{0.0});
    EXPECT_DOUBLE_EQ(r1.weights[0], 1.0);

    const auto r2 = gauss_legendre_1d(2);
    EXPECT_NEAR(r2.nodes[0], -0.5773502691896258, 1e-15);
    EXPECT_NEAR(r2.nodes[1], 0.5773502691896258, 1e-15);
    EXPECT_NEAR(r2.weights[0], 0.5, 1e-15);
    EXPECT_NEAR(r2.weights[1], 0.5, 1e-15);
    // Roots of P2 = (3x^2 - 1)/2 are +-1/sqrt(3).
    EXPECT_NEAR(r2.nodes[1], 1.0 / std::sqrt(3.0), 1e-15);
    double second = 0.0;
    for (int i = 0; i < 2; ++i) second += r2.weights[i] * r2.nodes[i] * r2.nodes[i];
    EXPECT_NEAR(second, 1.0 / 3.0, 1e-15);
}

TEST(GaussLegendre, ExactnessAndSymmetryUpToOrder64) {
    for (int k = 1; k <= 64; ++k) {
        const auto rule = gauss_legendre_1d(k);
        double wsum = 0.0;
        for (int i = 0; i < k; ++i) {
            EXPECT_GT(rule.weights[i], 0.0);
            EXPECT_NEAR(rule.nodes[i], -rule.nodes[k - 1 - i], 1e-15);
            EXPECT_NEAR(rule.weights[i], rule.weights[k - 1 - i], 1e-15);
            if (i > 0) {
                EXPECT_LT(rule.nodes[i - 1], rule.nodes[i]);
            }
            if (k <= 16) {
                EXPECT_NEAR(oracle::legendre_closed_form(k, rule.nodes[i]), 0.0, 1e-13);
            }
            wsum += rule.weights[i];
        }
        EXPECT_NEAR(wsum, 1.0, 1e-13);
        for (int d = 0; d <= std::min(2 * k - 1, 40); ++d) {
            double q = 0.0;
            for (int i = 0; i < k; ++i) q += rule.weights[i] * std::pow(rule.nodes[i], d);
            EXPECT_NEAR(q, oracle::uniform_moment(d), 1e-13) << "k=" << k << " d=" << d;
        }
    }
    EXPECT_THROW(gauss_legendre_1d(0), SizeError);
    EXPECT_THROW(gauss_legendre_1d(65), SizeError);
}

TEST(TensorGrid, SizesAndWeights) {
    const auto g = tensor_grid({4, 4, 4, 4});
    EXPECT_EQ(g.size(), 256u);
    EXPECT_NO_THROW(validate(g));

    const auto g2 = tensor_grid({2, 2});
    EXPECT_EQ(g2.size(), 4u);
    for (double w : *g2.weights) EXPECT_NEAR(w, 0.25, 1e-15);

    for (auto ks : std::vector<std::vector<int>>{{1}, {3, 5}, {2, 3, 4}, {7, 1, 2}}) {
        const auto g3 = tensor_grid(std::span<const int>(ks));
        double s = 0.0;
        for (double w : *g3.weights) s += w;
        EXPECT_NEAR(s, 1.0, 1e-14);
    }
}

TEST(TensorGrid, WeightsInvariantUnderPermutingSymmetricDimensions) {
    const auto g = tensor_grid({3, 3});
    // Swapping the coordinates of a point lands on another node with the same weight.
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (g.points(i, 0) == g.points(k, 1) && g.points(i, 1) == g.points(k, 0)) {
                EXPECT_DOUBLE_EQ((*g.weights)[i], (*g.weights)[k]);
            }
        }
    }
}

TEST(TensorGrid, CapEnforced) {
    EXPECT_THROW(tensor_grid({10, 10, 10}, 999), SizeError);
    EXPECT_NO_THROW(tensor_grid({10, 10, 10}, 1000));
    EXPECT_THROW(tensor_grid({64, 64, 64, 64}), SizeError);
}

TEST(DesignClasses, TableSizes) {
    EXPECT_EQ(design_class_size(4, 3, 1), 35u);
    EXPECT_EQ(design_class_size(5, 4, 2), 252u);
    EXPECT_EQ(design_class_size(5, 3, 3), 1024u);
    // Full rows for n = 4 and n = 5.
    const std::size_t n4[3][4] = {{5, 15, 35, 70}, {10, 30, 70, 140}, {16, 81, 256, 625}};
    const std::size_t n5[3][4] = {{6, 21, 56, 126}, {12, 42, 112, 252}, {32, 243, 1024, 3125}};
    for (int c = 1; c <= 3; ++c) {
        for (std::size_t p = 1; p <= 4; ++p) {
            EXPECT_EQ(design_class_size(4, p, c), n4[c - 1][p - 1]);
            EXPECT_EQ(design_class_size(5, p, c), n5[c - 1][p - 1]);
        }
    }
    EXPECT_THROW(design_class_size(2, 1, 4), ConfigError);
}

}  // namespace
}  // namespace uqbench
