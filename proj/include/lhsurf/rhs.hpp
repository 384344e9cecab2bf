#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "lhsurf/params.hpp"

namespace lhsurf {

/// Arc-length state of the profile curve in the half plane {(x, r): r >= 0}.
/// theta is the angle between the tangent and the x-axis, tracked as a
/// continuous real (never wrapped), so the tangent is (cos theta, sin theta).
struct ProfileState {
    double s = 0.0;
    double x = 0.0;
    double r = 0.0;
    double theta = 0.0;
};

/// Profile written as a graph x = f(r) over the r-axis.
struct GraphOverR {
    double r;
    double f;
    double fp; // f'(r)
};

/// Profile written in polar coordinates rho = rho(phi), rho = sqrt(x^2 + r^2),
/// phi = arctan(r/x) in (0, pi/2].
struct PolarState {
    double phi;
    double rho;
    double rhop; // rho'(phi)
};

struct ProfileDerivs {
    double dx;
    double dr;
    double dtheta;
};

namespace detail {

/// Unchecked arc-length right-hand side. Used by the integrator, whose trial
/// stages may momentarily evaluate at r <= 0; non-finite results there are
/// handled by step rejection, not exceptions.
inline ProfileDerivs profile_rhs_raw(const Params& p, double x, double r, double theta) noexcept {
    const double c = std::cos(theta);
    const double sn = std::sin(theta);
    return {c, sn, ((p.n - 1) / r - r) * c + x * sn + p.lambda};
}

} // namespace detail

/// Right-hand side of the arc-length system
///   x' = cos theta,  r' = sin theta,
///   theta' = ((n-1)/r - r) cos theta + x sin theta + lambda.
inline ProfileDerivs rhs_arclength(const Params& p, const ProfileState& st) {
    if (!(st.r > 0.0)) {
        throw std::domain_error("rhs_arclength: r must be positive (use a series start at the axis)");
    }
    return detail::profile_rhs_raw(p, st.x, st.r, st.theta);
}

/// f'' for the graph-over-r form:
///   f'' = (1 + f'^2) * [ (r - (n-1)/r) f' - f - lambda sqrt(1 + f'^2) ].
inline double rhs_graph_over_r(const Params& p, const GraphOverR& g) {
    if (!(g.r > 0.0)) {
        throw std::domain_error("rhs_graph_over_r: r must be positive");
    }
    const double q = 1.0 + g.fp * g.fp;
    return q * ((g.r - (p.n - 1) / g.r) * g.fp - g.f - p.lambda * std::sqrt(q));
}

/// u'' for the graph-over-x form:
///   u'' = (1 + u'^2) * [ x u' - u + (n-1)/u + lambda sqrt(1 + u'^2) ].
inline double rhs_graph_over_x(const Params& p, double x, double u, double up) {
    if (!(u > 0.0)) {
        throw std::domain_error("rhs_graph_over_x: u must be positive");
    }
    const double q = 1.0 + up * up;
    return q * (x * up - u + (p.n - 1) / u + p.lambda * std::sqrt(q));
}

/// rho'' for the polar form:
///   rho'' = (1/rho) { rho'^2 + (rho^2 + rho'^2) [ n - rho^2
///            - (n-1)(rho'/rho) cot phi - lambda sqrt(rho^2 + rho'^2) ] }.
inline double rhs_polar(const Params& p, const PolarState& st) {
    if (!(st.phi > 0.0) || !(st.rho > 0.0)) {
        throw std::domain_error("rhs_polar: requires phi > 0 and rho > 0");
    }
    const double m2 = st.rho * st.rho + st.rhop * st.rhop;
    const double cot = std::cos(st.phi) / std::sin(st.phi);
    const double bracket = p.n - st.rho * st.rho - (p.n - 1) * (st.rhop / st.rho) * cot
                           - p.lambda * std::sqrt(m2);
    return (st.rhop * st.rhop + m2 * bracket) / st.rho;
}

/// Rotational principal curvature, shared by the n-1 rotational directions.
inline double rotational_curvature(const ProfileState& st) {
    return -std::cos(st.theta) / st.r;
}

/// Mean curvature H = theta' - (n-1) cos theta / r under the inward normal
/// nu = (-r', x' alpha). Written as the same expression the curvature vector
/// sums to, so the identity H = sum kappa_i holds bitwise.
inline double mean_curvature(const Params& p, const ProfileState& st, double dtheta) {
    return dtheta + (p.n - 1) * (-std::cos(st.theta) / st.r);
}

/// Principal curvatures (kappa_1 = ... = kappa_{n-1} = -cos theta / r from the
/// rotational directions, kappa_n = theta' from the profile direction).
inline std::vector<double> principal_curvatures(const Params& p, const ProfileState& st, double dtheta) {
    if (!(st.r > 0.0)) {
        throw std::domain_error("principal_curvatures: r must be positive");
    }
    std::vector<double> k(static_cast<std::size_t>(p.n), rotational_curvature(st));
    k.back() = dtheta;
    return k;
}

/// Defect of the defining equation, H + <X, nu> - lambda, with
/// <X, nu> = -x sin theta + r cos theta. Identically zero when dtheta comes
/// from rhs_arclength at the same state.
inline double lambda_residual(const Params& p, const ProfileState& st, double dtheta) {
    if (!(st.r > 0.0)) {
        throw std::domain_error("lambda_residual: r must be positive");
    }
    const double position_term = -st.x * std::sin(st.theta) + st.r * std::cos(st.theta);
    return mean_curvature(p, st, dtheta) + position_term - p.lambda;
}

} // namespace lhsurf
