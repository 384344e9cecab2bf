#include <doctest.h>

#include <cmath>

#include "lhsurf/shooting.hpp"

#include "oracles.hpp"

using namespace lhsurf;

namespace {
const IntegratorConfig kCfg{};
}

TEST_CASE("sphere shot closes on the axis of symmetry") {
    Params p(2, -1.0);
    const ShotOutcome o = shoot(p, p.sphere_radius(), kCfg);
    CHECK(o.terminal == EventKind::turning_point);
    CHECK(o.quadrant == Quadrant::on_axis);
    CHECK(std::abs(o.x_star) <= 1e-9);
    CHECK(o.r_star == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("quadrant classification near the two ends, against the RK4 oracle") {
    Params p(2, -1.0);

    const ShotOutcome near_plane = shoot(p, 1.05, kCfg);
    CHECK(near_plane.quadrant == Quadrant::first);
    const oracle::Rk4Shot o1 = oracle::rk4_shoot(p, 1.05, 1e-5);
    REQUIRE(o1.ok);
    CHECK(o1.x_star > 0.0);
    CHECK(near_plane.x_star == doctest::Approx(o1.x_star).epsilon(1e-6));
    CHECK(near_plane.r_star == doctest::Approx(o1.r_star).epsilon(1e-6));

    const ShotOutcome near_sphere = shoot(p, 1.9, kCfg);
    CHECK(near_sphere.quadrant == Quadrant::second);
    const oracle::Rk4Shot o2 = oracle::rk4_shoot(p, 1.9, 1e-5);
    REQUIRE(o2.ok);
    CHECK(o2.x_star < 0.0);
    CHECK(near_sphere.x_star == doctest::Approx(o2.x_star).epsilon(1e-6));
}

TEST_CASE("shoot rejects nonpositive x0 and reports non-terminating shots") {
    Params p(2, -1.0);
    CHECK_THROWS_AS(shoot(p, 0.0, kCfg), std::domain_error);
    IntegratorConfig tiny = kCfg;
    tiny.max_arclength = 0.5; // too short for any event
    CHECK_THROWS_AS(shoot(p, 1.31, tiny), NonTerminatingShot);
    try {
        shoot(p, 1.31, tiny);
    } catch (const NonTerminatingShot& e) {
        CHECK(e.outcome.terminal == EventKind::max_length);
        CHECK(e.outcome.x0 == 1.31);
    }
}

TEST_CASE("scan argument validation") {
    Params p(2, -1.0);
    CHECK_THROWS_AS(scan_roots(p, 1.5, 1.2, 16, kCfg), std::invalid_argument);
    CHECK_THROWS_AS(scan_roots(p, 1.2, 1.5, 1, kCfg), std::invalid_argument);
    CHECK_THROWS_AS(scan_roots(p, -0.5, 1.5, 16, kCfg, 2), std::invalid_argument);
}

TEST_CASE("scan over (1.01, 1.99) for n=2, lambda=-1 brackets the known root once") {
    Params p(2, -1.0);
    const ScanResult scan = scan_roots(p, 1.01, 1.99, 64, kCfg, 2);
    REQUIRE(scan.outcomes.size() == 64);
    REQUIRE(scan.brackets.size() == 1);
    CHECK(scan.brackets[0].first < 1.31);
    CHECK(scan.brackets[0].second > 1.31);

    // deterministic regardless of execution order
    const ScanResult serial = scan_roots(p, 1.01, 1.99, 64, kCfg, 1);
    for (std::size_t i = 0; i < 64; ++i) {
        CHECK(serial.outcomes[i].x_star == scan.outcomes[i].x_star);
    }
}

TEST_CASE("scan for n=3, lambda=-1 finds the two documented roots") {
    Params p(3, -1.0);
    const ScanResult scan = scan_roots(p, 1.01, 2.29, 128, kCfg, 2);
    REQUIRE(scan.brackets.size() >= 2);
    double roots[2] = {0.0, 0.0};
    int found = 0;
    for (const auto& br : scan.brackets) {
        const RootResult root = find_root(p, br, kDefaultRootTol, kCfg);
        if (found < 2) roots[found++] = root.x_hat;
    }
    REQUIRE(found == 2);
    CHECK(std::abs(roots[0] - 1.57) <= 0.02);
    CHECK(std::abs(roots[1] - 1.69) <= 0.02);
}

TEST_CASE("scan for n=3, lambda=-0.9 brackets the documented root") {
    Params p(3, -0.9);
    const ScanResult scan = scan_roots(p, 0.909, 2.2, 96, kCfg, 2);
    REQUIRE(!scan.brackets.empty());
    const RootResult root = find_root(p, scan.brackets.front(), kDefaultRootTol, kCfg);
    CHECK(std::abs(root.x_hat - 1.11) <= 0.02);
}

TEST_CASE("find_root: figure-1 root with monotone bracket shrinkage") {
    Params p(2, -1.0);
    const ScanResult scan = scan_roots(p, 1.01, 1.99, 64, kCfg, 2);
    REQUIRE(!scan.brackets.empty());
    const auto br = scan.brackets.front();
    const RootResult root = find_root(p, br, kDefaultRootTol, kCfg);

    CHECK(std::abs(root.x_hat - 1.31) <= 0.02);
    CHECK(root.residual <= kDefaultRootTol);
    CHECK(root.x_hat > -p.lambda);
    CHECK(root.x_hat < p.sphere_radius());

    // final bracket width is the initial width halved once per iteration
    const double expect_width = (br.second - br.first) * std::pow(0.5, root.iterations);
    CHECK(root.bracket_hi - root.bracket_lo == doctest::Approx(expect_width).epsilon(1e-9));
    const int cap = static_cast<int>(std::ceil(std::log2((br.second - br.first) / 1e-12))) + 8;
    CHECK(root.iterations <= cap);
}

TEST_CASE("find_root: degenerate bracket with a root returns immediately") {
    Params p(2, -1.0);
    const double R = p.sphere_radius();
    const RootResult root = find_root(p, {R, R}, kDefaultRootTol, kCfg);
    CHECK(root.iterations == 0);
    CHECK(root.x_hat == R);
    CHECK(root.residual <= kDefaultRootTol);
}

TEST_CASE("find_root: sign-stable bracket is required") {
    Params p(2, -1.0);
    CHECK_THROWS_AS(find_root(p, {1.05, 1.10}, kDefaultRootTol, kCfg), BracketLost);
    CHECK_THROWS_AS(find_root(p, {1.05, 1.05}, kDefaultRootTol, kCfg), BracketLost);
}

TEST_CASE("regression: n=2, lambda=-0.5 root against the frozen RK4 oracle value") {
    // Oracle (fixed-step RK4, h=1e-5, bisection to |F| <= 1e-8):
    //   x_hat = 0.50410723475382091, r_hat = 4.1266823270002204, s_hat = 4.3358465918003972
    Params p(2, -0.5);
    const auto profs = solve_profiles(p, kCfg, {128, 2, kDefaultRootTol});
    REQUIRE(!profs.empty());
    const RootResult& root = profs.front().root;
    CHECK(std::abs(root.x_hat - 0.50410723475382091) <= 5e-4);
    CHECK(std::abs(root.r_hat - 4.1266823270002204) <= 5e-3);
    CHECK(std::abs(root.s_hat - 4.3358465918003972) <= 5e-3);
    CHECK(root.x_hat > 0.5);
    CHECK(root.x_hat < p.sphere_radius());
}

TEST_CASE("shooting map is locally Lipschitz away from brackets") {
    Params p(2, -1.0);
    for (double x0 : {1.10, 1.50, 1.85}) {
        const ShotOutcome a = shoot(p, x0, kCfg);
        const ShotOutcome b = shoot(p, x0 + 1e-6, kCfg);
        CHECK(std::abs(b.x_star - a.x_star) <= 1e-3);
    }
}

TEST_CASE("sign structure and root existence in the attainable theorem range") {
    // For lambda = -0.1 the near-plane positive zone of F sits at offsets
    // ~ e^{-O(1/lambda^2)} below -lambda, which double precision cannot
    // represent, so that column is not testable numerically.
    for (int n : {2, 3, 4, 5, 6}) {
        for (double lambda : {-0.3, -0.5 * 2.0 / std::sqrt(n + 2.0)}) {
            CAPTURE(n);
            CAPTURE(lambda);
            Params p(n, lambda);
            const double R = p.sphere_radius();

            // near the sphere: F < 0 (second quadrant)
            const ShotOutcome near_sphere = shoot(p, R * (1.0 - 1e-2), kCfg);
            CHECK(near_sphere.x_star < 0.0);

            const auto profs = solve_profiles(p, kCfg, {128, 2, kDefaultRootTol});
            REQUIRE(!profs.empty());
            const double x_hat = profs.front().root.x_hat;
            CHECK(x_hat > -lambda);
            CHECK(x_hat < R);

            // near the plane side of the located root F > 0
            IntegratorConfig tight = kCfg;
            tight.rel_tol = 1e-12;
            tight.abs_tol = 1e-14;
            const double eps_probe = (x_hat + lambda) * 0.25;
            const ShotOutcome near_plane = shoot(p, -lambda + eps_probe, tight);
            CHECK(near_plane.x_star > 0.0);
        }
    }
}

TEST_CASE("assembled closed profile: round sphere") {
    Params p(2, -1.0);
    const double R = p.sphere_radius();
    const RootResult root = find_root(p, {R, R}, kDefaultRootTol, kCfg);
    const HypersurfaceProfile prof = assemble_closed_profile(p, root, kCfg);

    CHECK(prof.samples.front().s == 0.0);
    CHECK(prof.samples.front().r == 0.0);
    CHECK(prof.samples.front().theta == doctest::Approx(M_PI_2));
    CHECK(prof.samples.back().s == doctest::Approx(2.0 * prof.s_hat));
    CHECK(prof.samples.back().r == 0.0);
    CHECK(prof.samples.back().theta == doctest::Approx(1.5 * M_PI));
    CHECK(prof.samples.back().x == doctest::Approx(-R).epsilon(1e-9));
    CHECK(prof.s_hat == doctest::Approx(M_PI * R / 2.0).epsilon(1e-8));
    for (const ProfileSample& s : prof.samples) {
        CHECK(std::hypot(s.x, s.r) == doctest::Approx(R).epsilon(1e-8));
    }
}

TEST_CASE("assembled junction is continuous and the mirror is exact") {
    Params p(2, -1.0);
    const ScanResult scan = scan_roots(p, 1.01, 1.99, 64, kCfg, 2);
    const RootResult root = find_root(p, scan.brackets.front(), kDefaultRootTol, kCfg);
    const HypersurfaceProfile prof = assemble_closed_profile(p, root, kCfg);

    // junction continuity across s_hat
    const std::size_t m = prof.samples.size();
    REQUIRE(m % 2 == 1); // pole + k + junction + k + pole
    const std::size_t j = m / 2;
    CHECK(prof.samples[j].s == doctest::Approx(prof.s_hat));
    CHECK(std::abs(prof.samples[j].theta - M_PI) <= kCfg.event_tol);
    CHECK(std::abs(prof.samples[j].x) <= 2.0 * kDefaultRootTol);

    // the two halves are exact mirrors sample-for-sample (the junction pairs
    // with itself, where |x| is the root residual)
    for (std::size_t i = 0; i < m; ++i) {
        const ProfileSample& a = prof.samples[i];
        const ProfileSample& b = prof.samples[m - 1 - i];
        CHECK(std::abs(a.x + b.x) <= 2.0 * kDefaultRootTol);
        CHECK(a.r == doctest::Approx(b.r).epsilon(1e-12));
        CHECK(a.kappa1 == doctest::Approx(b.kappa1).epsilon(1e-9));
        CHECK(a.kappan == doctest::Approx(b.kappan).epsilon(1e-9));
    }
}

TEST_CASE("verify_bounds: documented checks for n=2, lambda=-0.5") {
    Params p(2, -0.5);
    for (double eps : {1e-2, 1e-3, 1e-4}) {
        const BoundsReport rep = verify_bounds(p, eps, kCfg);
        CAPTURE(eps);
        CHECK(rep.lemma31_ok);
        CHECK(rep.r_star > rep.lemma31_bound);
        REQUIRE(rep.h_zero_radius.has_value());
        CHECK(rep.lemma32_in_window);
        CHECK(*rep.h_zero_radius >= std::sqrt(2.0));
        CHECK(*rep.h_zero_radius <= 2.0);
        CHECK(rep.lemma33_applicable);
        CHECK(rep.lemma33_ok);
        CHECK(rep.prop31_applicable);
        CHECK(rep.prop31_ok);
        CHECK(rep.x_star < -p.lambda);
    }
    // eps = 1e-3: the bound is sqrt(log(1e3/sqrt(pi)))
    const BoundsReport rep = verify_bounds(p, 1e-3, kCfg);
    CHECK(rep.lemma31_bound ==
          doctest::Approx(std::sqrt(std::log(1e3 / std::sqrt(M_PI)))).epsilon(1e-12));
}

TEST_CASE("verify_bounds: boundary and domain errors") {
    Params p(2, -0.5);
    const double eps_max = 1.0 / std::sqrt(M_PI);
    const BoundsReport rep = verify_bounds(p, eps_max, kCfg);
    CHECK(rep.lemma31_bound <= 2e-8); // log(1 +- ulp) under the square root
    CHECK(rep.lemma31_ok);            // r_star > 0 trivially
    CHECK_THROWS_AS(verify_bounds(p, eps_max * 1.0001, kCfg), std::domain_error);
    CHECK_THROWS_AS(verify_bounds(p, 0.0, kCfg), std::domain_error);
    CHECK_THROWS_AS(verify_bounds(Params(2, 0.25), 1e-3, kCfg), std::domain_error);
}
