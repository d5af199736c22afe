#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uqbench/errors.hpp"

namespace uqbench {

inline constexpr double kBoundaryTolerance = 1e-12;

/// A point on the standard cube [-1,1]^n.
///
/// Construction validates every coordinate; values within kBoundaryTolerance
/// outside the cube are clamped onto the boundary.
class StandardPoint {
public:
    StandardPoint() = default;
    explicit StandardPoint(std::vector<double> coords) : coords_(std::move(coords)) {
        for (std::size_t j = 0; j < coords_.size(); ++j) {
            double& z = coords_[j];
            if (!std::isfinite(z) || z < -1.0 - kBoundaryTolerance || z > 1.0 + kBoundaryTolerance) {
                throw DomainError("standard coordinate " + std::to_string(j + 1) + " = " +
                                  std::to_string(z) + " lies outside [-1,1]");
            }
            z = std::clamp(z, -1.0, 1.0);
        }
    }

    std::size_t size() const noexcept { return coords_.size(); }
    double operator[](std::size_t j) const { return coords_[j]; }
    std::span<const double> coords() const noexcept { return coords_; }
    operator std::span<const double>() const noexcept { return coords_; }

    friend bool operator==(const StandardPoint&, const StandardPoint&) = default;

private:
    std::vector<double> coords_;
};

struct Bounds {
    double lower = -1.0;
    double upper = 1.0;
};

/// Named input parameters with independent uniform marginals on [lower, upper].
class InputSpace {
public:
    InputSpace(std::vector<std::string> names, std::vector<Bounds> bounds)
        : names_(std::move(names)), bounds_(std::move(bounds)) {
        if (bounds_.empty()) throw DomainError("input space needs at least one dimension");
        if (names_.empty()) {
            for (std::size_t j = 0; j < bounds_.size(); ++j) names_.push_back("x" + std::to_string(j + 1));
        }
        if (names_.size() != bounds_.size()) {
            throw DomainError("input space has " + std::to_string(names_.size()) + " names but " +
                              std::to_string(bounds_.size()) + " bounds");
        }
        for (std::size_t j = 0; j < bounds_.size(); ++j) {
            const auto [a, b] = bounds_[j];
            if (!std::isfinite(a) || !std::isfinite(b) || !(a < b)) {
                throw DomainError("dimension '" + names_[j] + "' needs finite bounds with lower < upper");
            }
        }
    }

    // The standard cube itself, with names x1..xn.
    static InputSpace standard(std::size_t n) {
        return InputSpace({}, std::vector<Bounds>(n, Bounds{-1.0, 1.0}));
    }

    std::size_t dim() const noexcept { return bounds_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::vector<Bounds>& bounds() const noexcept { return bounds_; }

private:
    std::vector<std::string> names_;
    std::vector<Bounds> bounds_;
};

/// z_j = 2 (x_j - a_j) / (b_j - a_j) - 1
inline StandardPoint to_standard(const InputSpace& space, std::span<const double> native) {
    if (native.size() != space.dim()) {
        throw DomainError("point has " + std::to_string(native.size()) + " coordinates, space has " +
                          std::to_string(space.dim()));
    }
    std::vector<double> z(native.size());
    for (std::size_t j = 0; j < native.size(); ++j) {
        const auto [a, b] = space.bounds()[j];
        const double width = b - a;
        const double x = native[j];
        if (!std::isfinite(x) || x < a - kBoundaryTolerance * width || x > b + kBoundaryTolerance * width) {
            throw DomainError("coordinate for dimension '" + space.names()[j] + "' = " + std::to_string(x) +
                              " outside [" + std::to_string(a) + ", " + std::to_string(b) + "]");
        }
        z[j] = std::clamp(2.0 * (x - a) / width - 1.0, -1.0, 1.0);
    }
    return StandardPoint(std::move(z));
}

inline std::vector<double> from_standard(const InputSpace& space, std::span<const double> z) {
    if (z.size() != space.dim()) throw DomainError("standard point dimension does not match space");
    std::vector<double> x(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) {
        const auto [a, b] = space.bounds()[j];
        // Endpoints map exactly onto the bounds.
        if (z[j] == -1.0) {
            x[j] = a;
        } else if (z[j] == 1.0) {
            x[j] = b;
        } else {
            x[j] = a + 0.5 * (z[j] + 1.0) * (b - a);
        }
    }
    return x;
}

/// Uniform product density on the standard cube.
inline double joint_density(std::span<const double> z) { return std::ldexp(1.0, -static_cast<int>(z.size())); }

}  // namespace uqbench
