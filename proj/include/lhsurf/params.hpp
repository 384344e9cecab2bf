#pragma once

#include <cmath>
#include <stdexcept>

namespace lhsurf {

/// Solves c^2 + lambda*c = m for the positive root c = (-lambda + sqrt(lambda^2 + 4m))/2.
/// For lambda > 0 the subtraction cancels, so the conjugate form 2m/(lambda + sqrt(...))
/// is used instead.
inline double positive_radius_root(double lambda, double m) {
    const double disc = std::sqrt(lambda * lambda + 4.0 * m);
    if (lambda > 0.0) {
        return 2.0 * m / (lambda + disc);
    }
    return 0.5 * (-lambda + disc);
}

/// Problem parameters: ambient dimension n of the hypersurface and the constant
/// lambda of the defining equation H + <X, nu> = lambda, plus the derived
/// constants of the three special solutions (hyperplane, round sphere, cylinder).
struct Params {
    int n;
    double lambda;

    Params(int n_, double lambda_) : n(n_), lambda(lambda_) {
        if (n < 2) {
            throw std::invalid_argument("Params: dimension n must be >= 2");
        }
        if (!std::isfinite(lambda)) {
            throw std::invalid_argument("Params: lambda must be finite");
        }
    }

    /// Radius of the round-sphere solution centered at the origin.
    double sphere_radius() const { return positive_radius_root(lambda, static_cast<double>(n)); }

    /// Radius of the cylinder solution with axis through the origin.
    double cylinder_radius() const { return positive_radius_root(lambda, static_cast<double>(n - 1)); }

    /// Coefficient A(lambda) = sphere_radius * sqrt(lambda^2 + 4n) of the sphere-side
    /// linearized equation. Positive for every real lambda.
    double a_coefficient() const {
        return sphere_radius() * std::sqrt(lambda * lambda + 4.0 * n);
    }

    /// True iff lambda lies in the open window -2/sqrt(n+2) < lambda < 0 covered by
    /// the existence theorem for non-round convex profiles.
    bool in_theorem_range() const {
        return lambda > -2.0 / std::sqrt(static_cast<double>(n + 2)) && lambda < 0.0;
    }
};

} // namespace lhsurf
