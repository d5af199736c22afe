// Independent reference computations used only by the tests. Nothing here
// calls into the library's numerical routines.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

inline double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// P_k(z) = 2^{-k} sum_j C(k,j)^2 (z-1)^{k-j} (z+1)^j
// Evaluated in long double; the alternating sum cancels badly for large k.
inline double legendre_closed_form(int k, double z) {
    long double s = 0.0L;
    const long double zl = z;
    for (int j = 0; j <= k; ++j) {
        const long double c = binom(k, j);
        s += c * c * std::pow(zl - 1.0L, k - j) * std::pow(zl + 1.0L, j);
    }
    return static_cast<double>(s / std::pow(2.0L, k));
}

// Composite Simpson on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

// E[Z^d] for Z uniform on [-1, 1].
inline double uniform_moment(int d) { return d % 2 ? 0.0 : 1.0 / (d + 1.0); }

// P(Z >= k) for standard normal Z.
inline double normal_tail(double k) { return 0.5 * std::erfc(k / std::numbers::sqrt2); }

// Welford one-pass population standard deviation.
inline double welford_sd(const std::vector<double>& v) {
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t n = 0;
    for (double x : v) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    return std::sqrt(m2 / static_cast<double>(n));
}

inline double toy(double z1, double z2) { return std::exp(-z1) * std::tanh(5.0 * z2); }

// Gauss-Legendre nodes and weights on [-1, 1], weights normalized to sum to one.
// Newton iteration on the three-term recurrence from Chebyshev starting guesses.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GaussRule gauss_legendre(int k) {
    GaussRule r;
    r.nodes.resize(static_cast<std::size_t>(k));
    r.weights.resize(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        long double x = std::cos(std::numbers::pi * (i + 0.75) / (k + 0.5));
        long double dp = 0.0L;
        for (int it = 0; it < 100; ++it) {
            long double p0 = 1.0L, p1 = x;
            for (int n = 2; n <= k; ++n) {
                const long double p2 = ((2.0L * n - 1.0L) * x * p1 - (n - 1.0L) * p0) / n;
                p0 = p1;
                p1 = p2;
            }
            if (k == 1) p0 = 1.0L;
            dp = k * (x * p1 - p0) / (x * x - 1.0L);
            const long double step = p1 / dp;
            x -= step;
            if (std::fabs(static_cast<double>(step)) < 1e-19) break;
        }
        r.nodes[static_cast<std::size_t>(k - 1 - i)] = static_cast<double>(x);
        r.weights[static_cast<std::size_t>(k - 1 - i)] = static_cast<double>(1.0L / ((1.0L - x * x) * dp * dp));
    }
    return r;
}

// Central difference of a scalar function.
template <class F>
double central_difference(F&& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Central difference of f at x along coordinate j.
template <class F, class Vec>
double central_difference(F&& f, Vec x, std::size_t j, double h) {
    Vec xp = x;
    Vec xm = x;
    xp[static_cast<long>(j)] += h;
    xm[static_cast<long>(j)] -= h;
    return (f(xp) - f(xm)) / (2.0 * h);
}

}  // namespace oracle
