#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "lhsurf/integrator.hpp"
#include "lhsurf/params.hpp"
#include "lhsurf/rhs.hpp"

namespace lhsurf {

inline constexpr double kSeriesOffset = 1e-4; // Taylor-start offset from each singular point

struct LinearSample {
    double t;  // independent variable (r on the plane side, phi on the sphere side)
    double w;
    double wp; // dw/dt
};

/// Derivatives of the sphere-side solution w(xi) at the singular endpoint
/// xi = 1, obtained by matching the equation and its first two derivatives:
///   dw/dxi(1)   = A/n,
///   d2w/dxi2(1) = -(n - A) A / (n (n+2)),
///   d3w/dxi3(1) = (2n+2 - A)(n - A) A / (n (n+2) (n+4)).
struct EndpointDerivatives {
    double first;
    double second;
    double third;
};

inline EndpointDerivatives endpoint_derivatives(const Params& p) {
    const double A = p.a_coefficient();
    const double n = p.n;
    return {A / n, -(n - A) * A / (n * (n + 2.0)),
            (2.0 * n + 2.0 - A) * (n - A) * A / (n * (n + 2.0) * (n + 4.0))};
}

namespace detail {

/// Taylor coefficients of the plane-side solution in xi = r^2:
/// a_{k+1} = (2k - 1) a_k / (2 (k+1) (2k + n)), a_0 = 1. Entire function; a few
/// terms suffice near 0.
inline std::vector<double> plane_series_coeffs(int n, int terms) {
    std::vector<double> a(terms);
    a[0] = 1.0;
    for (int k = 0; k + 1 < terms; ++k) {
        a[k + 1] = (2.0 * k - 1.0) * a[k] / (2.0 * (k + 1.0) * (2.0 * k + n));
    }
    return a;
}

/// Taylor coefficients of the sphere-side solution in t = 1 - xi at the
/// singular endpoint xi = 1: b_{k+1} = (k(k-1) + nk - A) b_k / ((k+1)(2k + n)).
inline std::vector<double> sphere_series_coeffs(int n, double A, int terms) {
    std::vector<double> b(terms);
    b[0] = 1.0;
    for (int k = 0; k + 1 < terms; ++k) {
        b[k + 1] = (k * (k - 1.0) + static_cast<double>(n) * k - A) * b[k] /
                   ((k + 1.0) * (2.0 * k + n));
    }
    return b;
}

template <class F>
inline SegmentStore<2> drive_second_order(F&& rhs2, StateN<2> y0, double t0, double t1,
                                          const IntegratorConfig& cfg) {
    auto rhs = [&rhs2](double t, const StateN<2>& y) -> StateN<2> {
        return {y[1], rhs2(t, y[0], y[1])};
    };
    SegmentStore<2> store;
    StepStats stats;
    StateN<2> y = y0;
    double t = t0;
    const DriveOutcome out = drive_dopri5<2>(rhs, y, t, t1, cfg, stats,
                                             [&store](const DenseSegment<2>& seg, const StateN<2>&) {
                                                 store.segments.push_back(seg);
                                                 return true;
                                             });
    if (out != DriveOutcome::reached_end) {
        throw std::runtime_error("linearization: integration failed before reaching the endpoint");
    }
    return store;
}

} // namespace detail

/// Solution of the plane-side linearized equation
///   w'' = (r - (n-1)/r) w' - w,  w(0) = 1, w'(0) = 0,
/// integrated from a Taylor start at r = kSeriesOffset.
struct PlaneLinearization {
    double r_start = 0.0;
    double r_max = 0.0;
    std::vector<LinearSample> samples;
    SegmentStore<2> store;
    double w_at_sqrt_n = 0.0;
    double w_at_sqrt_2n = 0.0;
    double dwdxi_at_zero = 0.0;   // -1/(2n)
    double d2wdxi2_at_zero = 0.0; // -1/(4n(n+2))

    LinearSample at(double r) const {
        const StateN<2> y = store.eval(r);
        return {r, y[0], y[1]};
    }
};

inline PlaneLinearization solve_plane_linearization(const Params& p, double r_max,
                                                    const IntegratorConfig& cfg) {
    const double sq2n = std::sqrt(2.0 * p.n);
    if (!(r_max >= sq2n)) {
        throw std::invalid_argument("solve_plane_linearization: r_max must be >= sqrt(2n)");
    }
    cfg.validate();

    const auto a = detail::plane_series_coeffs(p.n, 8);
    const double r0 = kSeriesOffset;
    const double xi0 = r0 * r0;
    double w = 0.0, dwdxi = 0.0;
    for (int k = static_cast<int>(a.size()) - 1; k >= 0; --k) {
        w = w * xi0 + a[k];
        if (k >= 1) dwdxi = dwdxi * xi0 + k * a[k];
    }
    const StateN<2> y0{w, 2.0 * r0 * dwdxi}; // w'(r) = 2r dw/dxi

    auto rhs2 = [&p](double r, double wv, double wpv) {
        return (r - (p.n - 1) / r) * wpv - wv;
    };

    PlaneLinearization lin;
    lin.r_start = r0;
    lin.r_max = r_max;
    lin.store = detail::drive_second_order(rhs2, y0, r0, r_max, cfg);
    lin.samples.push_back({r0, y0[0], y0[1]});
    for (const DenseSegment<2>& seg : lin.store.segments) {
        const StateN<2> y = seg.eval(seg.s_end());
        lin.samples.push_back({seg.s_end(), y[0], y[1]});
    }
    lin.w_at_sqrt_n = lin.store.eval(std::sqrt(static_cast<double>(p.n)))[0];
    lin.w_at_sqrt_2n = lin.store.eval(sq2n)[0];
    lin.dwdxi_at_zero = -1.0 / (2.0 * p.n);
    lin.d2wdxi2_at_zero = -1.0 / (4.0 * p.n * (p.n + 2.0));
    return lin;
}

/// Solution of the sphere-side linearized equation
///   w'' = -(n-1) cot(phi) w' - A w,  w(0) = 1, w'(0) = 0,
/// integrated in phi from a Taylor start at phi = kSeriesOffset.
struct SphereLinearization {
    double phi_start = 0.0;
    std::vector<LinearSample> samples;
    SegmentStore<2> store;
    double w_pi_half = 0.0;
    double wp_pi_half = 0.0;
    double dwdxi_at_one = 0.0;  // A/n
    double dwdxi_at_zero = 0.0; // -w'(pi/2), via xi = cos phi

    LinearSample at(double phi) const {
        const StateN<2> y = store.eval(phi);
        return {phi, y[0], y[1]};
    }
};

inline SphereLinearization solve_sphere_linearization(const Params& p,
                                                      const IntegratorConfig& cfg) {
    cfg.validate();
    const double A = p.a_coefficient();
    const double n = p.n;

    // phi-series through O(phi^4): w = 1 + c2 phi^2 + c4 phi^4.
    const double c2 = -A / (2.0 * n);
    const double c4 = A * (3.0 * A - 2.0 * n + 2.0) / (24.0 * n * (n + 2.0));
    const double f0 = kSeriesOffset;
    const StateN<2> y0{1.0 + c2 * f0 * f0 + c4 * f0 * f0 * f0 * f0,
                       2.0 * c2 * f0 + 4.0 * c4 * f0 * f0 * f0};

    auto rhs2 = [&p, A](double phi, double wv, double wpv) {
        return -(p.n - 1) * (std::cos(phi) / std::sin(phi)) * wpv - A * wv;
    };

    SphereLinearization lin;
    lin.phi_start = f0;
    lin.store = detail::drive_second_order(rhs2, y0, f0, M_PI_2, cfg);
    lin.samples.push_back({f0, y0[0], y0[1]});
    for (const DenseSegment<2>& seg : lin.store.segments) {
        const StateN<2> y = seg.eval(seg.s_end());
        lin.samples.push_back({seg.s_end(), y[0], y[1]});
    }
    const StateN<2> yend = lin.store.eval(M_PI_2);
    lin.w_pi_half = yend[0];
    lin.wp_pi_half = yend[1];
    lin.dwdxi_at_one = A / n;
    lin.dwdxi_at_zero = -lin.wp_pi_half;
    return lin;
}

/// Nonlinear graph-over-r solve f(r) with f(0) = x0, f'(0) = 0, from the
/// axis Taylor start f = x0 - (x0 + lambda) r^2 / (2n).
inline SegmentStore<2> solve_graph_over_r(const Params& p, double x0, double r_max,
                                          const IntegratorConfig& cfg) {
    const double c2 = -(x0 + p.lambda) / (2.0 * p.n);
    const double r0 = kSeriesOffset;
    const StateN<2> y0{x0 + c2 * r0 * r0, 2.0 * c2 * r0};
    auto rhs2 = [&p](double r, double f, double fp) {
        return rhs_graph_over_r(p, GraphOverR{r, f, fp});
    };
    return detail::drive_second_order(rhs2, y0, r0, r_max, cfg);
}

/// Nonlinear polar solve rho(phi) with rho(0) = rho0, rho'(0) = 0, from the
/// cot-phi Taylor start rho = rho0 + rho0 (n - rho0^2 - lambda rho0) phi^2 / (2n).
inline SegmentStore<2> solve_polar(const Params& p, double rho0, const IntegratorConfig& cfg) {
    const double d2 = rho0 * (p.n - rho0 * rho0 - p.lambda * rho0) / (2.0 * p.n);
    const double f0 = kSeriesOffset;
    const StateN<2> y0{rho0 + d2 * f0 * f0, 2.0 * d2 * f0};
    auto rhs2 = [&p](double phi, double rho, double rhop) {
        return rhs_polar(p, PolarState{phi, rho, rhop});
    };
    return detail::drive_second_order(rhs2, y0, f0, M_PI_2, cfg);
}

enum class LinearizationSide { plane, sphere };

/// Central-difference validation of the linearization against the nonlinear
/// flow: max over a shared grid of |(sol(+eps) - sol(-eps))/(2 eps) - w|.
/// Expected O(eps^2) plus integration error.
inline double finite_difference_check(const Params& p, double epsilon, LinearizationSide side,
                                      const IntegratorConfig& cfg) {
    if (!(epsilon > 0.0)) {
        throw std::invalid_argument("finite_difference_check: epsilon must be positive");
    }
    constexpr int kGridPoints = 201;
    double dev = 0.0;
    if (side == LinearizationSide::plane) {
        const double r_max = std::sqrt(2.0 * p.n);
        const PlaneLinearization lin = solve_plane_linearization(p, r_max, cfg);
        const SegmentStore<2> plus = solve_graph_over_r(p, -p.lambda + epsilon, r_max, cfg);
        const SegmentStore<2> minus = solve_graph_over_r(p, -p.lambda - epsilon, r_max, cfg);
        for (int i = 0; i < kGridPoints; ++i) {
            const double r =
                kSeriesOffset + (r_max - kSeriesOffset) * i / (kGridPoints - 1);
            const double fd = (plus.eval(r)[0] - minus.eval(r)[0]) / (2.0 * epsilon);
            dev = std::max(dev, std::abs(fd - lin.store.eval(r)[0]));
        }
    } else {
        const double R = p.sphere_radius();
        const SphereLinearization lin = solve_sphere_linearization(p, cfg);
        const SegmentStore<2> plus = solve_polar(p, R + epsilon, cfg);
        const SegmentStore<2> minus = solve_polar(p, R - epsilon, cfg);
        for (int i = 0; i < kGridPoints; ++i) {
            const double phi =
                kSeriesOffset + (M_PI_2 - kSeriesOffset) * i / (kGridPoints - 1);
            const double fd = (plus.eval(phi)[0] - minus.eval(phi)[0]) / (2.0 * epsilon);
            dev = std::max(dev, std::abs(fd - lin.store.eval(phi)[0]));
        }
    }
    return dev;
}

} // namespace lhsurf
