#include <doctest.h>

#include <cmath>

#include "lhsurf/linearization.hpp"

#include "oracles.hpp"

using namespace lhsurf;

namespace {
const IntegratorConfig kCfg{};
}

TEST_CASE("plane side: endpoint signs for n = 2..8") {
    for (int n = 2; n <= 8; ++n) {
        Params p(n, -0.5); // the equation does not involve lambda
        const PlaneLinearization lin = solve_plane_linearization(p, std::sqrt(2.0 * n), kCfg);
        CAPTURE(n);
        CHECK(lin.w_at_sqrt_n > 0.0);
        CHECK(lin.w_at_sqrt_2n < 0.0);
    }
}

TEST_CASE("plane side agrees with the direct power series") {
    for (int n : {2, 3, 5}) {
        Params p(n, -1.0);
        const PlaneLinearization lin = solve_plane_linearization(p, std::sqrt(2.0 * n), kCfg);
        for (double r : {0.5, 1.0, std::sqrt(static_cast<double>(n)), std::sqrt(2.0 * n)}) {
            CHECK(lin.at(r).w == doctest::Approx(oracle::plane_w_series(n, r)).epsilon(1e-9));
        }
    }
}

TEST_CASE("plane side: monotone and concave in xi, with the xi = n identity") {
    Params p(2, -0.5);
    const int n = p.n;
    const PlaneLinearization lin = solve_plane_linearization(p, std::sqrt(2.0 * n), kCfg);

    for (const LinearSample& s : lin.samples) {
        if (s.t < 2.0 * kSeriesOffset) continue;
        const double w_xi = s.wp / (2.0 * s.t);
        CHECK(w_xi <= -1.0 / (2.0 * n) + 1e-10);
        // w_xixi from the equation: 4 xi w_xixi = 2(xi - n) w_xi - w
        const double xi = s.t * s.t;
        const double w_xixi = (2.0 * (xi - n) * w_xi - s.w) / (4.0 * xi);
        CHECK(w_xixi < 0.0);
    }

    // at xi = n the equation reduces to w = -4n * w_xixi, so w(sqrt(n)) > 0
    const LinearSample at_n = lin.at(std::sqrt(static_cast<double>(n)));
    const double w_xi_n = at_n.wp / (2.0 * at_n.t);
    const double w_xixi_n = (2.0 * (n - n) * w_xi_n - at_n.w) / (4.0 * n);
    CHECK(at_n.w == doctest::Approx(-4.0 * n * w_xixi_n).epsilon(1e-12));

    // reported initial xi-derivatives
    CHECK(lin.dwdxi_at_zero == doctest::Approx(-1.0 / (2.0 * n)).epsilon(1e-15));
    CHECK(lin.d2wdxi2_at_zero == doctest::Approx(-1.0 / (4.0 * n * (n + 2.0))).epsilon(1e-15));

    CHECK_THROWS_AS(solve_plane_linearization(p, 1.0, kCfg), std::invalid_argument);
}

TEST_CASE("plane side: initial xi-derivatives recovered from the computed samples") {
    for (int n : {2, 4, 8}) {
        Params p(n, -0.5);
        const PlaneLinearization lin = solve_plane_linearization(p, std::sqrt(2.0 * n), kCfg);
        // Richardson extrapolation of dw/dxi toward xi = 0 from two small xi
        auto dwdxi = [&](double r) { return lin.at(r).wp / (2.0 * r); };
        const double xi1 = 1e-3, xi2 = 2e-3;
        const double g1 = dwdxi(std::sqrt(xi1));
        const double g2 = dwdxi(std::sqrt(xi2));
        const double at0 = g1 + (g1 - g2) * xi1 / (xi2 - xi1);
        CHECK(at0 == doctest::Approx(-1.0 / (2.0 * n)).epsilon(1e-8));

        const double c1 = (g2 - g1) / (xi2 - xi1); // ~ d2w/dxi2 near 0
        CHECK(c1 == doctest::Approx(-1.0 / (4.0 * n * (n + 2.0))).epsilon(5e-3));
    }
}

TEST_CASE("sphere side: endpoint signs inside the theorem window") {
    for (auto [n, lambda] : {std::pair{2, -0.8}, {2, 0.0}, {3, -0.5}}) {
        Params p(n, lambda);
        const SphereLinearization lin = solve_sphere_linearization(p, kCfg);
        CAPTURE(n);
        CAPTURE(lambda);
        CHECK(lin.w_pi_half < 0.0);
        if (lambda < 0.0) CHECK(lin.wp_pi_half < 0.0);
    }
}

TEST_CASE("sphere side: boundary case A = 2n+2 has the exact quadratic solution") {
    // lambda = -2/sqrt(n+2): w(phi) = ((n+1) cos^2 phi - 1)/n.
    Params p(2, -1.0);
    CHECK(p.a_coefficient() == doctest::Approx(6.0).epsilon(1e-14));
    const SphereLinearization lin = solve_sphere_linearization(p, kCfg);
    for (double phi = 0.05; phi < M_PI_2; phi += 0.07) {
        const double c = std::cos(phi);
        const double exact = 0.5 * (3.0 * c * c - 1.0);
        const double exact_p = -3.0 * c * std::sin(phi);
        CHECK(lin.at(phi).w == doctest::Approx(exact).epsilon(1e-9));
        CHECK(lin.at(phi).wp == doctest::Approx(exact_p).epsilon(1e-9));
    }
    CHECK(lin.w_pi_half == doctest::Approx(-0.5).epsilon(1e-9));
    CHECK(std::abs(lin.wp_pi_half) <= 1e-8); // strict negativity degenerates exactly here
}

TEST_CASE("sphere side: xi-derivative signs at the far endpoint") {
    for (auto [n, lambda] : {std::pair{2, -0.8}, {3, -0.5}, {5, -0.2}}) {
        Params p(n, lambda);
        const double A = p.a_coefficient();
        const SphereLinearization lin = solve_sphere_linearization(p, kCfg);
        // chain rule at phi = pi/2 (xi = 0): w_xixi(0) = w''(pi/2) = -A w(pi/2),
        // w_xixixi(0) = (A - n) w'(pi/2).
        CHECK(lin.dwdxi_at_zero > 0.0);
        CHECK(-A * lin.w_pi_half > 0.0);
        CHECK((A - n) * lin.wp_pi_half < 0.0);
    }
}

TEST_CASE("endpoint derivatives: closed forms, recurrence oracle, sign window") {
    // n=2, lambda=0 has A = 4: (2, 1, -1/3)
    const EndpointDerivatives d0 = endpoint_derivatives(Params(2, 0.0));
    CHECK(d0.first == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(d0.second == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(d0.third == doctest::Approx(-1.0 / 3.0).epsilon(1e-14));

    for (auto [n, lambda] : {std::pair{2, -0.8}, {3, -0.5}, {6, -0.1}, {4, 0.3}}) {
        Params p(n, lambda);
        const EndpointDerivatives d = endpoint_derivatives(p);
        const auto r = oracle::sphere_endpoint_derivatives(n, p.a_coefficient());
        CHECK(d.first == doctest::Approx(r[0]).epsilon(1e-14));
        CHECK(d.second == doctest::Approx(r[1]).epsilon(1e-14));
        CHECK(d.third == doctest::Approx(r[2]).epsilon(1e-14));
    }

    // theorem window: n - A < 0 and 2n+2 - A > 0, so second > 0 and third < 0
    for (int n : {2, 5}) {
        Params p(n, -1.0 / std::sqrt(n + 2.0));
        const double A = p.a_coefficient();
        CHECK(n - A < 0.0);
        CHECK(2.0 * n + 2.0 - A > 0.0);
        const EndpointDerivatives d = endpoint_derivatives(p);
        CHECK(d.second > 0.0);
        CHECK(d.third < 0.0);
    }

    // boundary case: third derivative vanishes with 2n+2 - A
    const EndpointDerivatives db = endpoint_derivatives(Params(2, -1.0));
    CHECK(std::abs(db.third) <= 1e-13);
}

TEST_CASE("finite-difference consistency at eps = 1e-5") {
    for (int n : {2, 3}) {
        Params pp(n, -0.5);
        CHECK(finite_difference_check(pp, 1e-5, LinearizationSide::plane, kCfg) <= 1e-6);
        Params ps(n, 0.0);
        CHECK(finite_difference_check(ps, 1e-5, LinearizationSide::sphere, kCfg) <= 1e-6);
    }
}

TEST_CASE("finite-difference deviation shrinks ~4x when eps halves") {
    // Measured where the quadratic term dominates the integration noise; at
    // eps = 1e-5 the eps^2 term (~1e-10) is below the double-precision floor.
    Params p(2, -0.8);
    const double dp1 = finite_difference_check(p, 1e-2, LinearizationSide::plane, kCfg);
    const double dp2 = finite_difference_check(p, 5e-3, LinearizationSide::plane, kCfg);
    CHECK(dp1 / dp2 == doctest::Approx(4.0).epsilon(0.15));

    const double ds1 = finite_difference_check(p, 1e-2, LinearizationSide::sphere, kCfg);
    const double ds2 = finite_difference_check(p, 5e-3, LinearizationSide::sphere, kCfg);
    CHECK(ds1 / ds2 == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("nonlinear comparison solves hit their constant solutions exactly") {
    Params p(3, -0.4);
    // rho0 = sphere radius keeps the polar solve constant
    const SegmentStore<2> rho = solve_polar(p, p.sphere_radius(), kCfg);
    for (double phi = 0.01; phi <= M_PI_2; phi += 0.3) {
        CHECK(rho.eval(phi)[0] == doctest::Approx(p.sphere_radius()).epsilon(1e-12));
    }
    // f(0) = -lambda keeps the graph solve on the hyperplane
    const SegmentStore<2> f = solve_graph_over_r(p, -p.lambda, std::sqrt(2.0 * p.n), kCfg);
    for (double r = 0.01; r <= std::sqrt(2.0 * p.n); r += 0.3) {
        CHECK(f.eval(r)[0] == doctest::Approx(-p.lambda).epsilon(1e-12));
    }
}
