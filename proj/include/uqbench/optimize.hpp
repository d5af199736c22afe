#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace uqbench::opt {

// Objective value and gradient; a non-finite value marks an infeasible point.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct BoxOptions {
    int max_iterations = 200;
    double gradient_tolerance = 1e-6;   // projected-gradient infinity norm
    double value_tolerance = 1e-12;     // relative change in objective
    int max_backtracks = 40;
};

struct BoxResult {
    Eigen::VectorXd x;
    double value = std::numeric_limits<double>::infinity();
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

/// Minimizes f over the box [lower, upper] with a projected BFGS method:
/// variables pinned at a bound with the gradient pointing outward are held
/// fixed, the rest take a quasi-Newton step, and an Armijo backtracking search
/// runs along the projected path.
inline BoxResult minimize_box(const Objective& f, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                              const Eigen::VectorXd& upper, const BoxOptions& options = {}) {
    const Eigen::Index n = x0.size();
    auto project = [&](const Eigen::VectorXd& v) { return v.cwiseMax(lower).cwiseMin(upper).eval(); };

    BoxResult res;
    res.x = project(x0);
    Eigen::VectorXd g(n);
    res.value = f(res.x, g);
    ++res.evaluations;
    if (!std::isfinite(res.value)) return res;

    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd g_new(n);
    for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
        const Eigen::VectorXd pg = res.x - project(res.x - g);
        if (pg.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
            res.converged = true;
            break;
        }
        Eigen::Array<bool, Eigen::Dynamic, 1> free(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool at_lower = res.x[i] <= lower[i] && g[i] > 0.0;
            const bool at_upper = res.x[i] >= upper[i] && g[i] < 0.0;
            free[i] = !(at_lower || at_upper);
        }
        Eigen::VectorXd gf = free.select(g, 0.0);
        Eigen::VectorXd d = -(H * gf);
        d = free.select(d, 0.0);
        if (gf.dot(d) >= 0.0) {
            H.setIdentity();
            d = -gf;
        }

        double t = 1.0;
        Eigen::VectorXd x_new;
        double f_new = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int k = 0; k < options.max_backtracks; ++k, t *= 0.5) {
            x_new = project(res.x + t * d);
            f_new = f(x_new, g_new);
            ++res.evaluations;
            if (std::isfinite(f_new) && f_new <= res.value + 1e-4 * g.dot(x_new - res.x)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // No descent along the quasi-Newton path; one retry along steepest descent.
            if (H.isIdentity()) break;
            H.setIdentity();
            continue;
        }

        const Eigen::VectorXd s = x_new - res.x;
        const Eigen::VectorXd y = g_new - g;
        const double change = res.value - f_new;
        res.x = x_new;
        g = g_new;
        const double previous = res.value;
        res.value = f_new;

        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
            H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) + rho * s * s.transpose();
        }
        if (std::abs(change) <= options.value_tolerance * (1.0 + std::abs(previous))) {
            res.converged = true;
            break;
        }
    }
    return res;
}

}  // namespace uqbench::opt
