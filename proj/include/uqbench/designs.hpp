#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "uqbench/detail/sobol_table.hpp"
#include "uqbench/errors.hpp"
#include "uqbench/random.hpp"

namespace uqbench {

using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class DesignKind { Sobol, LatinHypercube, TensorGrid };

inline const char* to_string(DesignKind kind) {
    switch (kind) {
        case DesignKind::Sobol: return "sobol";
        case DesignKind::LatinHypercube: return "lhs";
        case DesignKind::TensorGrid: return "grid";
    }
    return "unknown";
}

/// An m x n point set on the standard cube.
///
/// Tensor grids carry quadrature weights (summing to one, so weighted sums are
/// expectations under the uniform density) and the per-dimension node counts.
struct Design {
    PointMatrix points;
    DesignKind kind = DesignKind::Sobol;
    std::optional<std::vector<double>> weights;
    std::vector<int> grid_orders;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return static_cast<std::size_t>(points.rows()); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(points.cols()); }
    std::span<const double> point(std::size_t i) const {
        return {points.data() + i * dim(), dim()};
    }

    // First m rows. Only meaningful for sequence designs; weights are dropped.
    Design prefix(std::size_t m) const {
        if (m < 1 || m > size()) throw SizeError("prefix size " + std::to_string(m) + " out of range");
        Design out;
        out.points = points.topRows(static_cast<Eigen::Index>(m));
        out.kind = kind;
        out.seed = seed;
        return out;
    }
};

// Throws if the design breaks its invariants.
inline void validate(const Design& d) {
    if (d.size() < 1 || d.dim() < 1) throw SizeError("design must have at least one point and one dimension");
    for (Eigen::Index i = 0; i < d.points.size(); ++i) {
        const double z = d.points.data()[i];
        if (!std::isfinite(z) || std::abs(z) > 1.0 + 1e-12) throw DomainError("design point outside [-1,1]^n");
    }
    if (d.weights) {
        if (d.weights->size() != d.size()) throw SizeError("weight count does not match point count");
        double total = 0.0;
        for (double w : *d.weights) {
            if (!(w > 0.0)) throw DomainError("quadrature weights must be positive");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-12) throw DomainError("quadrature weights must sum to 1");
    }
}

// ---------------------------------------------------------------------------
// Sobol sequences
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint32_t reverse_bits(std::uint32_t x) noexcept {
    x = ((x >> 1) & 0x55555555u) | ((x & 0x55555555u) << 1);
    x = ((x >> 2) & 0x33333333u) | ((x & 0x33333333u) << 2);
    x = ((x >> 4) & 0x0f0f0f0fu) | ((x & 0x0f0f0f0fu) << 4);
    x = ((x >> 8) & 0x00ff00ffu) | ((x & 0x00ff00ffu) << 8);
    return (x >> 16) | (x << 16);
}

// Laine-Karras style hash; applied to bit-reversed values it acts as a
// nested uniform (Owen) scramble: each output bit depends only on the
// higher-order input bits.
inline std::uint32_t owen_scramble(std::uint32_t x, std::uint32_t seed) noexcept {
    x = reverse_bits(x);
    x += seed;
    x ^= x * 0x6c50b47cu;
    x ^= x * 0xb82f1e52u;
    x ^= x * 0xc7afe638u;
    x ^= x * 0x8d22f6e6u;
    return reverse_bits(x);
}

}  // namespace detail

/// Joe-Kuo Sobol sequence in up to 1111 dimensions, Gray-code ordered.
///
/// Index 0 is the all-zeros corner of the raw sequence. seed 0 gives the
/// unscrambled sequence; any other seed applies a per-dimension Owen scramble.
/// Points are a pure function of (index, dim, seed), so every prefix of the
/// sequence is itself the same sequence.
class SobolSequence {
public:
    static constexpr int kBits = 32;

    SobolSequence(std::size_t dim, std::uint64_t seed = 0) : dim_(dim), seed_(seed) {
        if (dim < 1) throw SizeError("Sobol dimension must be at least 1");
        if (dim > detail::kSobolMaxDim) {
            throw SizeError("Sobol dimension " + std::to_string(dim) + " exceeds the supported maximum of " +
                            std::to_string(detail::kSobolMaxDim));
        }
        directions_.resize(dim_ * kBits);
        for (std::size_t d = 0; d < dim_; ++d) init_dimension(d);
        if (seed_ != 0) {
            scramble_.resize(dim_);
            for (std::size_t d = 0; d < dim_; ++d) {
                scramble_[d] = static_cast<std::uint32_t>(split_seed(seed_, "sobol-scramble", d));
            }
        }
    }

    std::size_t dim() const noexcept { return dim_; }

    // Integer coordinates of point `index` (valid for index < 2^32).
    void integer_point(std::uint64_t index, std::span<std::uint32_t> out) const {
        const std::uint64_t gray = index ^ (index >> 1);
        for (std::size_t d = 0; d < dim_; ++d) {
            std::uint32_t x = 0;
            std::uint64_t g = gray;
            for (int b = 0; g != 0; ++b, g >>= 1) {
                if (g & 1u) x ^= directions_[d * kBits + static_cast<std::size_t>(b)];
            }
            out[d] = scramble_.empty() ? x : detail::owen_scramble(x, scramble_[d]);
        }
    }

    // Point `index` in [0,1)^n.
    std::vector<double> unit_point(std::uint64_t index) const {
        if (index >> kBits) throw SizeError("Sobol index exceeds 2^32");
        std::vector<std::uint32_t> ints(dim_);
        integer_point(index, ints);
        std::vector<double> u(dim_);
        for (std::size_t d = 0; d < dim_; ++d) u[d] = std::ldexp(static_cast<double>(ints[d]), -kBits);
        return u;
    }

private:
    void init_dimension(std::size_t d) {
        auto v = std::span(directions_).subspan(d * kBits, kBits);
        if (d == 0) {
            for (int j = 0; j < kBits; ++j) v[static_cast<std::size_t>(j)] = 1u << (kBits - 1 - j);
            return;
        }
        const auto& entry = detail::kSobolTable[d];
        const std::uint32_t poly = entry.poly;
        const int degree = std::bit_width(poly) - 1;
        std::array<std::uint64_t, kBits> m{};
        for (int j = 0; j < degree && j < kBits; ++j) m[static_cast<std::size_t>(j)] = entry.m[static_cast<std::size_t>(j)];
        // m_j = 2 a_1 m_{j-1} ^ 4 a_2 m_{j-2} ^ ... ^ 2^s m_{j-s} ^ m_{j-s}
        for (int j = degree; j < kBits; ++j) {
            std::uint64_t next = m[static_cast<std::size_t>(j - degree)];
            std::uint64_t pow2 = 1;
            for (int k = 0; k < degree; ++k) {
                pow2 <<= 1;
                if ((poly >> (degree - 1 - k)) & 1u) next ^= pow2 * m[static_cast<std::size_t>(j - k - 1)];
            }
            m[static_cast<std::size_t>(j)] = next;
        }
        for (int j = 0; j < kBits; ++j) {
            v[static_cast<std::size_t>(j)] = static_cast<std::uint32_t>(m[static_cast<std::size_t>(j)] << (kBits - 1 - j));
        }
    }

    std::size_t dim_;
    std::uint64_t seed_;
    std::vector<std::uint32_t> directions_;
    std::vector<std::uint32_t> scramble_;
};

/// First m points of the Sobol sequence on [-1,1]^n, starting at index 1
/// (the all-zeros corner at index 0 is skipped).
inline Design sobol(std::size_t m, std::size_t n, std::uint64_t seed = 0) {
    if (m < 1) throw SizeError("Sobol design needs m >= 1");
    SobolSequence seq(n, seed);
    Design d;
    d.kind = DesignKind::Sobol;
    d.seed = seed;
    d.points.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < m; ++i) {
        const auto u = seq.unit_point(i + 1);
        for (std::size_t j = 0; j < n; ++j) d.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 2.0 * u[j] - 1.0;
    }
    return d;
}

// ---------------------------------------------------------------------------
// Latin hypercube
// ---------------------------------------------------------------------------

/// Random Latin hypercube on [-1,1]^n: one point per stratum [i/m,(i+1)/m)
/// in every dimension, uniformly jittered within its cell.
inline Design latin_hypercube(std::size_t m, std::size_t n, std::uint64_t seed) {
    if (m < 1) throw SizeError("Latin hypercube needs m >= 1");
    if (n < 1) throw SizeError("Latin hypercube needs n >= 1");
    Engine rng = make_engine(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Design d;
    d.kind = DesignKind::LatinHypercube;
    d.seed = seed;
    d.points.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    std::vector<std::size_t> perm(m);
    const double md = static_cast<double>(m);
    for (std::size_t j = 0; j < n; ++j) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t i = 0; i < m; ++i) {
            // Offsets stay 1e-9 clear of the cell edges so the stratum survives rounding.
            const double offset = 1e-9 + (1.0 - 2e-9) * unif(rng);
            const double u = (static_cast<double>(perm[i]) + offset) / md;
            d.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 2.0 * u - 1.0;
        }
    }
    return d;
}

// ---------------------------------------------------------------------------
// Gauss-Legendre quadrature
// ---------------------------------------------------------------------------

/// k-point Gauss-Legendre rule on [-1,1] with weights normalized to sum to one
/// (the standard weights times the uniform density 1/2).
struct QuadratureRule1D {
    int order = 0;
    std::vector<double> nodes;    // strictly increasing
    std::vector<double> weights;  // positive, sum to 1
};

inline constexpr int kMaxGaussLegendreOrder = 64;

inline QuadratureRule1D gauss_legendre_1d(int k) {
    if (k < 1 || k > kMaxGaussLegendreOrder) {
        throw SizeError("Gauss-Legendre order " + std::to_string(k) + " outside [1, " +
                        std::to_string(kMaxGaussLegendreOrder) + "]");
    }
    QuadratureRule1D rule;
    rule.order = k;
    rule.nodes.assign(static_cast<std::size_t>(k), 0.0);
    rule.weights.assign(static_cast<std::size_t>(k), 0.0);
    const int half = (k + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Roots counted from the right; asymptotic (Tricomi) initial guess.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (k + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int j = 2; j <= k; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            // P_k'(x) = k (x P_k - P_{k-1}) / (x^2 - 1)
            dp = k * (x * p1 - p0) / (x * x - 1.0);
            const double step = p1 / dp;
            x -= step;
            if (std::abs(step) <= 1e-15) break;
        }
        // Final derivative at the converged root.
        double p0 = 1.0;
        double p1 = x;
        for (int j = 2; j <= k; ++j) {
            const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
            p0 = p1;
            p1 = p2;
        }
        dp = k * (x * p1 - p0) / (x * x - 1.0);
        const double w = 1.0 / ((1.0 - x * x) * dp * dp);  // standard weight / 2
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(k - 1 - i);
        rule.nodes[hi] = x;
        rule.nodes[lo] = -x;
        rule.weights[hi] = w;
        rule.weights[lo] = w;
    }
    if (k % 2 == 1) rule.nodes[static_cast<std::size_t>(k / 2)] = 0.0;
    return rule;
}

inline constexpr std::size_t kDefaultGridCap = 1'000'000;

/// Full tensor product of 1-D Gauss-Legendre rules. The first dimension
/// varies slowest.
inline Design tensor_grid(std::span<const int> k_per_dim, std::size_t cap = kDefaultGridCap) {
    if (k_per_dim.empty()) throw SizeError("tensor grid needs at least one dimension");
    double total = 1.0;
    for (int k : k_per_dim) {
        if (k < 1) throw SizeError("tensor grid node counts must be >= 1");
        total *= k;
    }
    if (total > static_cast<double>(cap)) {
        throw SizeError("tensor grid of " + std::to_string(static_cast<long long>(total)) +
                        " points exceeds the cap of " + std::to_string(cap));
    }
    const std::size_t n = k_per_dim.size();
    const auto m = static_cast<std::size_t>(total);
    std::vector<QuadratureRule1D> rules;
    rules.reserve(n);
    for (int k : k_per_dim) rules.push_back(gauss_legendre_1d(k));

    Design d;
    d.kind = DesignKind::TensorGrid;
    d.grid_orders.assign(k_per_dim.begin(), k_per_dim.end());
    d.points.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    std::vector<double> weights(m);
    std::vector<std::size_t> idx(n, 0);
    for (std::size_t i = 0; i < m; ++i) {
        double w = 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            d.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rules[j].nodes[idx[j]];
            w *= rules[j].weights[idx[j]];
        }
        weights[i] = w;
        for (std::size_t j = n; j-- > 0;) {
            if (++idx[j] < static_cast<std::size_t>(k_per_dim[j])) break;
            idx[j] = 0;
        }
    }
    d.weights = std::move(weights);
    return d;
}

inline Design tensor_grid(std::initializer_list<int> k_per_dim, std::size_t cap = kDefaultGridCap) {
    return tensor_grid(std::span<const int>(k_per_dim.begin(), k_per_dim.size()), cap);
}

// ---------------------------------------------------------------------------
// Design classes
// ---------------------------------------------------------------------------

inline std::size_t binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;  // exact: r * (n-k+i) is divisible by i at every step
    }
    return static_cast<std::size_t>(r);
}

inline std::size_t ipow(std::size_t base, std::size_t exp) {
    std::size_t r = 1;
    for (std::size_t i = 0; i < exp; ++i) r *= base;
    return r;
}

/// Design size for a class: 1 uniquely-determined Sobol (m = N total order),
/// 2 twice over-determined Sobol (m = 2N), 3 tensor grid (m = (p+1)^n).
inline std::size_t design_class_size(std::size_t n, std::size_t p, int design_class) {
    if (p < 1) throw ConfigError("design classes need truncation order p >= 1");
    switch (design_class) {
        case 1: return binomial(n + p, p);
        case 2: return 2 * binomial(n + p, p);
        case 3: return ipow(p + 1, n);
        default: throw ConfigError("design class must be 1, 2 or 3, got " + std::to_string(design_class));
    }
}

}  // namespace uqbench
