#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "lhsurf/geometry.hpp"
#include "lhsurf/integrator.hpp"
#include "lhsurf/params.hpp"

namespace lhsurf {

inline constexpr double kDefaultRootTol = 1e-8;

enum class Quadrant { first, second, on_axis };

inline Quadrant classify_quadrant(double x_star, double tol = kDefaultRootTol) {
    if (std::abs(x_star) <= tol) return Quadrant::on_axis;
    return x_star > 0.0 ? Quadrant::first : Quadrant::second;
}

/// Result of one shot from the positive x-axis: the turning point
/// B = (x_star, r_star) where theta first reaches pi (or the state at the
/// terminal event when no turning point was reached).
struct ShotOutcome {
    double x0 = 0.0;
    double x_star = 0.0;
    double r_star = 0.0;
    double s_star = 0.0;
    Quadrant quadrant = Quadrant::on_axis;
    EventKind terminal = EventKind::step_failure;
};

struct NonTerminatingShot : std::runtime_error {
    ShotOutcome outcome;
    explicit NonTerminatingShot(const ShotOutcome& o)
        : std::runtime_error("shot from x0 = " + std::to_string(o.x0) +
                             (o.terminal == EventKind::max_length
                                  ? " exceeded max_arclength without an event"
                                  : " failed (step size underflow)")),
          outcome(o) {}
};

struct BracketLost : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AssemblyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline ShotOutcome outcome_from_trajectory(double x0, const Trajectory& traj) {
    const TrajectorySample& e = traj.event_state();
    return ShotOutcome{x0, e.x, e.r, e.s, classify_quadrant(e.x), traj.terminal};
}

/// Full trajectory of the shot S[x0]: start on the axis at (x0, 0, pi/2) and
/// integrate to the first turning point or axis return.
inline Trajectory shoot_trajectory(const Params& p, double x0, const IntegratorConfig& cfg) {
    if (!(x0 > 0.0)) {
        throw std::domain_error("shoot: x0 must be positive");
    }
    return integrate_until(p, start_on_axis(p, x0, cfg), cfg);
}

/// Shot outcome only. Throws NonTerminatingShot when the trajectory ends in
/// max_length or step_failure instead of a geometric event.
inline ShotOutcome shoot(const Params& p, double x0, const IntegratorConfig& cfg) {
    const Trajectory traj = shoot_trajectory(p, x0, cfg);
    const ShotOutcome out = outcome_from_trajectory(x0, traj);
    if (traj.terminal == EventKind::max_length || traj.terminal == EventKind::step_failure) {
        throw NonTerminatingShot(out);
    }
    return out;
}

struct ScanResult {
    std::vector<ShotOutcome> outcomes;                 // one per grid point, in grid order
    std::vector<std::pair<double, double>> brackets;   // consecutive x0 pairs with a sign change
};

/// Evaluates F(x0) = x_star over a uniform grid and returns every consecutive
/// pair where F changes sign or |F| dips below kDefaultRootTol. Shots that do
/// not reach a turning point are recorded but excluded from bracketing.
/// Grid shots are independent; jobs > 1 runs them on a small thread pool with
/// deterministic, index-ordered results.
inline ScanResult scan_roots(const Params& p, double lo, double hi, int grid_count,
                             const IntegratorConfig& cfg, int jobs = 1) {
    if (!(lo < hi) || grid_count < 2) {
        throw std::invalid_argument("scan_roots: need lo < hi and grid_count >= 2");
    }
    if (!(lo > 0.0)) {
        throw std::invalid_argument("scan_roots: shots start on the positive x-axis (lo > 0)");
    }
    cfg.validate();
    ScanResult res;
    res.outcomes.resize(grid_count);

    auto run_one = [&](int i) {
        const double x0 = lo + (hi - lo) * i / (grid_count - 1);
        try {
            res.outcomes[i] = shoot(p, x0, cfg);
        } catch (const NonTerminatingShot& e) {
            res.outcomes[i] = e.outcome;
        }
    };

    const int workers = std::min<int>(jobs, grid_count);
    if (workers <= 1) {
        for (int i = 0; i < grid_count; ++i) run_one(i);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (int i = next.fetch_add(1); i < grid_count; i = next.fetch_add(1)) run_one(i);
            });
        }
        for (std::thread& t : pool) t.join();
    }

    for (int i = 0; i + 1 < grid_count; ++i) {
        const ShotOutcome& a = res.outcomes[i];
        const ShotOutcome& b = res.outcomes[i + 1];
        if (a.terminal != EventKind::turning_point || b.terminal != EventKind::turning_point) {
            continue;
        }
        if (a.x_star * b.x_star < 0.0 || std::abs(a.x_star) <= kDefaultRootTol ||
            std::abs(b.x_star) <= kDefaultRootTol) {
            res.brackets.emplace_back(a.x0, b.x0);
        }
    }
    return res;
}

/// Root of the closure condition F(x_hat) = 0: the axis intercept whose
/// turning point lands on the r-axis.
struct RootResult {
    double x_hat = 0.0;
    double r_hat = 0.0;
    double s_hat = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    int iterations = 0;
    double residual = 0.0; // |x_star(x_hat)|
};

/// Bisection on F over a sign-changing bracket until |F| <= tol. The bracket
/// halves every iteration; if it collapses to the floating-point resolution of
/// x0 before |F| meets tol (integration noise floor near very flat roots), the
/// best midpoint is returned with its honest residual.
inline RootResult find_root(const Params& p, std::pair<double, double> bracket, double tol,
                            const IntegratorConfig& cfg) {
    double lo = bracket.first;
    double hi = bracket.second;
    if (!(tol > 0.0)) throw std::invalid_argument("find_root: tol must be positive");
    if (!(lo <= hi)) throw std::invalid_argument("find_root: need lo <= hi");

    auto eval = [&](double x0) -> ShotOutcome {
        try {
            const ShotOutcome o = shoot(p, x0, cfg);
            if (o.terminal != EventKind::turning_point) {
                throw BracketLost("find_root: shot at x0 = " + std::to_string(x0) +
                                  " ended without a turning point");
            }
            return o;
        } catch (const NonTerminatingShot& e) {
            throw BracketLost(std::string("find_root: ") + e.what());
        }
    };

    RootResult out;
    out.bracket_lo = lo;
    out.bracket_hi = hi;

    ShotOutcome olo = eval(lo);
    if (std::abs(olo.x_star) <= tol) {
        out.x_hat = lo;
        out.r_hat = olo.r_star;
        out.s_hat = olo.s_star;
        out.residual = std::abs(olo.x_star);
        return out;
    }
    if (lo == hi) {
        throw BracketLost("find_root: degenerate bracket without a root");
    }
    ShotOutcome ohi = eval(hi);
    if (std::abs(ohi.x_star) <= tol) {
        out.x_hat = hi;
        out.r_hat = ohi.r_star;
        out.s_hat = ohi.s_star;
        out.residual = std::abs(ohi.x_star);
        return out;
    }
    if (olo.x_star * ohi.x_star > 0.0) {
        throw BracketLost("find_root: F does not change sign over the bracket");
    }

    const double width_floor = 8.0 * std::numeric_limits<double>::epsilon() *
                               std::max({std::abs(lo), std::abs(hi), 1.0});
    const int max_iter =
        static_cast<int>(std::ceil(std::log2(std::max((hi - lo) / width_floor, 2.0)))) + 8;

    ShotOutcome best = std::abs(olo.x_star) < std::abs(ohi.x_star) ? olo : ohi;
    double flo = olo.x_star;
    for (int it = 1; it <= max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        out.iterations = it;
        const ShotOutcome om = eval(mid);
        if (std::abs(om.x_star) < std::abs(best.x_star)) best = om;
        // Keep the sign-respecting half; the bracket width halves every
        // iteration exactly, including the one that meets the tolerance.
        if (flo * om.x_star < 0.0) {
            hi = mid;
        } else {
            lo = mid;
            flo = om.x_star;
        }
        if (std::abs(om.x_star) <= tol) {
            out.x_hat = mid;
            out.r_hat = om.r_star;
            out.s_hat = om.s_star;
            out.residual = std::abs(om.x_star);
            out.bracket_lo = lo;
            out.bracket_hi = hi;
            return out;
        }
        if (hi - lo <= width_floor) break;
    }

    out.x_hat = best.x0;
    out.r_hat = best.r_star;
    out.s_hat = best.s_star;
    out.residual = std::abs(best.x_star);
    out.bracket_lo = lo;
    out.bracket_hi = hi;
    return out;
}

/// Builds the closed profile for a root: the shot trajectory on [0, s_hat]
/// concatenated with its mirror (x, r, theta) -> (-x, r, 2pi - theta) on
/// [s_hat, 2 s_hat], with exact pole samples at both ends.
inline HypersurfaceProfile assemble_closed_profile(const Params& p, const RootResult& root,
                                                   const IntegratorConfig& cfg) {
    const Trajectory traj = shoot_trajectory(p, root.x_hat, cfg);
    if (traj.terminal != EventKind::turning_point) {
        throw AssemblyError("assemble_closed_profile: shot did not reach a turning point");
    }
    const TrajectorySample& ev = traj.event_state();

    // The junction mismatch between the two halves is exactly 2|x_star|. The
    // allowance covers the integration tolerance plus the root residual; the
    // kDefaultRootTol floor absorbs re-evaluation differences when the same
    // root is re-integrated under a different step-size cap.
    const double scale = std::max({1.0, std::abs(ev.x), ev.r});
    const double allowance = 10.0 * (cfg.rel_tol * scale + cfg.abs_tol) +
                             4.0 * std::max(root.residual, kDefaultRootTol) +
                             8.0 * std::numeric_limits<double>::epsilon() * scale;
    if (2.0 * std::abs(ev.x) > allowance) {
        throw AssemblyError("assemble_closed_profile: junction mismatch " +
                            std::to_string(2.0 * std::abs(ev.x)) + " exceeds allowance " +
                            std::to_string(allowance));
    }

    const double s_hat = ev.s;
    HypersurfaceProfile prof{p};
    prof.x_hat = root.x_hat;
    prof.r_hat = ev.r;
    prof.s_hat = s_hat;

    const double pole_dtheta = (root.x_hat + p.lambda) / p.n;
    prof.samples.push_back(make_profile_sample(p, 0.0, root.x_hat, 0.0, M_PI_2, pole_dtheta));
    for (const TrajectorySample& t : traj.samples) {
        prof.samples.push_back(make_profile_sample(p, t.s, t.x, t.r, t.theta, t.dtheta));
    }
    // Mirror half, junction sample included once.
    for (auto it = traj.samples.rbegin() + 1; it != traj.samples.rend(); ++it) {
        prof.samples.push_back(make_profile_sample(p, 2.0 * s_hat - it->s, -it->x, it->r,
                                                   2.0 * M_PI - it->theta, it->dtheta));
    }
    prof.samples.push_back(
        make_profile_sample(p, 2.0 * s_hat, -root.x_hat, 0.0, 1.5 * M_PI, pole_dtheta));
    finalize_extrema(prof);
    return prof;
}

/// Quantitative near-plane bounds evaluated on the shot from x0 = -lambda + epsilon.
struct BoundsReport {
    double epsilon = 0.0;
    double x0 = 0.0;
    double r_star = 0.0;
    double x_star = 0.0;
    double lemma31_bound = 0.0; // sqrt(log(1/(sqrt(pi) eps)))
    bool lemma31_ok = false;
    std::optional<double> h_zero_radius; // first r with x(r) = -lambda
    bool lemma32_in_window = false;      // h-zero found in [sqrt(n), sqrt(2n)]
    bool lemma33_applicable = false;
    bool lemma33_ok = false;
    bool prop31_applicable = false;
    double prop31_x_lower = 0.0;
    bool prop31_ok = false;
};

/// Shoots from x0 = -lambda + epsilon and evaluates the stated inequality
/// conclusions on the computed trajectory:
///   r_star > sqrt(log(1/(sqrt(pi) eps)));
///   h = x + lambda crosses zero in [sqrt(n), sqrt(2n)];
///   h(r) > (30n/r) h'(r) on [r0, r_star)  (for the lemma's lambda range);
///   -(30n+4)/sqrt(log(1/(sqrt(pi) eps))) - lambda <= x_star < -lambda
///   (for the proposition's lambda range; applicability is reported, since the
///   guaranteed epsilon threshold ~ e^{-49n} is far below double precision).
inline BoundsReport verify_bounds(const Params& p, double epsilon, const IntegratorConfig& cfg) {
    const double sqrt_pi = std::sqrt(M_PI);
    if (!(epsilon > 0.0) || !(epsilon <= 1.0 / sqrt_pi)) {
        throw std::domain_error("verify_bounds: need 0 < epsilon <= 1/sqrt(pi)");
    }
    if (!(p.lambda <= 0.0)) {
        throw std::domain_error("verify_bounds: needs lambda <= 0");
    }

    BoundsReport rep;
    rep.epsilon = epsilon;
    rep.x0 = -p.lambda + epsilon;

    const Trajectory traj = shoot_trajectory(p, rep.x0, cfg);
    if (traj.terminal != EventKind::turning_point) {
        throw NonTerminatingShot(outcome_from_trajectory(rep.x0, traj));
    }
    const TrajectorySample& ev = traj.event_state();
    rep.r_star = ev.r;
    rep.x_star = ev.x;

    rep.lemma31_bound = std::sqrt(std::max(0.0, std::log(1.0 / (sqrt_pi * epsilon))));
    rep.lemma31_ok = rep.r_star > rep.lemma31_bound;

    // First zero of h = x + lambda, refined on the dense interpolant.
    for (std::size_t i = 0; i + 1 < traj.samples.size(); ++i) {
        const double h0 = traj.samples[i].x + p.lambda;
        const double h1 = traj.samples[i + 1].x + p.lambda;
        if (h0 > 0.0 && h1 <= 0.0) {
            double slo = traj.samples[i].s, shi = traj.samples[i + 1].s;
            for (int it = 0; it < 80; ++it) {
                const double sm = 0.5 * (slo + shi);
                const double hm = traj.store.eval(sm)[0] + p.lambda;
                if (hm > 0.0) {
                    slo = sm;
                } else {
                    shi = sm;
                }
            }
            rep.h_zero_radius = traj.store.eval(0.5 * (slo + shi))[1];
            break;
        }
    }
    const double sq_n = std::sqrt(static_cast<double>(p.n));
    const double sq_2n = std::sqrt(2.0 * p.n);
    rep.lemma32_in_window =
        rep.h_zero_radius && *rep.h_zero_radius >= sq_n && *rep.h_zero_radius <= sq_2n;

    rep.lemma33_applicable =
        p.lambda < 0.0 && p.lambda >= -(25.0 * p.n - 6.0) / (30.0 * sq_n) && rep.h_zero_radius.has_value();
    if (rep.lemma33_applicable) {
        rep.lemma33_ok = true;
        const double r0 = *rep.h_zero_radius;
        for (const TrajectorySample& t : traj.samples) {
            if (t.r < r0 || t.r >= rep.r_star) continue;
            const double h = t.x + p.lambda;
            const double hp = std::cos(t.theta) / std::sin(t.theta); // dx/dr along the shot
            if (!(h > (30.0 * p.n / t.r) * hp)) {
                rep.lemma33_ok = false;
                break;
            }
        }
    }

    rep.prop31_applicable =
        p.lambda < 0.0 &&
        p.lambda >= -std::min((23.0 * p.n + 4.0) / (28.0 * sq_n), (25.0 * p.n - 6.0) / (30.0 * sq_n));
    rep.prop31_x_lower = rep.lemma31_bound > 0.0
                             ? -(30.0 * p.n + 4.0) / rep.lemma31_bound - p.lambda
                             : -std::numeric_limits<double>::infinity();
    rep.prop31_ok = rep.x_star >= rep.prop31_x_lower && rep.x_star < -p.lambda;
    return rep;
}

/// One certified construction: the root, its closed profile, and the
/// convexity/embeddedness certificate.
struct ConstructedProfile {
    RootResult root;
    HypersurfaceProfile profile;
    Certificate certificate;
};

struct SolvePipelineConfig {
    int grid_count = 128;
    int jobs = 1;
    double root_tol = kDefaultRootTol;
};

namespace detail {

/// Near-plane fallback: the sign change of F guaranteed near x0 -> -lambda+ can
/// sit far below the uniform grid's lower offset (offsets down to ~1e-9 occur
/// for moderate lambda), so scan x0 = -lambda (1+g) on a log-spaced g grid with
/// tightened tolerances, which the flat near-plane stretch needs.
inline std::vector<std::pair<double, double>> near_plane_brackets(const Params& p,
                                                                  const IntegratorConfig& cfg,
                                                                  IntegratorConfig& used_cfg) {
    used_cfg = cfg;
    used_cfg.rel_tol = std::min(cfg.rel_tol, 1e-12);
    used_cfg.abs_tol = std::min(cfg.abs_tol, 1e-14);

    std::vector<std::pair<double, double>> brackets;
    if (!(p.lambda < 0.0)) return brackets;

    const int per_decade = 5;
    const double g_lo = 1e-11, g_hi = 3e-2;
    const int count = static_cast<int>(std::ceil(per_decade * std::log10(g_hi / g_lo))) + 1;

    double prev_x0 = 0.0, prev_f = 0.0;
    bool prev_ok = false;
    for (int i = 0; i < count; ++i) {
        const double g = g_lo * std::pow(g_hi / g_lo, static_cast<double>(i) / (count - 1));
        const double x0 = -p.lambda * (1.0 + g);
        if (x0 == -p.lambda) continue;
        bool ok = false;
        double f = 0.0;
        try {
            const ShotOutcome o = shoot(p, x0, used_cfg);
            ok = o.terminal == EventKind::turning_point;
            f = o.x_star;
        } catch (const NonTerminatingShot&) {
            ok = false;
        }
        if (ok && prev_ok && (prev_f * f < 0.0 || std::abs(prev_f) <= kDefaultRootTol)) {
            brackets.emplace_back(prev_x0, x0);
        }
        prev_x0 = x0;
        prev_f = f;
        prev_ok = ok;
    }
    return brackets;
}

} // namespace detail

/// Full construction pipeline: scan the open interval (-lambda, sphere_radius)
/// on the default uniform grid, fall back to the near-plane log grid when the
/// uniform scan yields no bracket, polish each bracket by bisection, assemble
/// the closed profile and certify it. When min curvature is marginal (< 1e-3)
/// the profile is re-integrated at 4x refinement before certification.
inline std::vector<ConstructedProfile> solve_profiles(const Params& p, const IntegratorConfig& cfg,
                                                      const SolvePipelineConfig& sp,
                                                      ScanResult* scan_out = nullptr) {
    const double R = p.sphere_radius();
    const double lo = std::max(-p.lambda * (1.0 + 1e-2), R * 1e-2);
    const double hi = R * (1.0 - 1e-2);

    ScanResult scan = scan_roots(p, lo, hi, sp.grid_count, cfg, sp.jobs);
    if (scan_out) *scan_out = scan;

    std::vector<std::pair<double, double>> brackets = scan.brackets;
    IntegratorConfig bracket_cfg = cfg;
    if (brackets.empty()) {
        brackets = detail::near_plane_brackets(p, cfg, bracket_cfg);
    }

    std::vector<ConstructedProfile> out;
    for (const auto& br : brackets) {
        RootResult root;
        try {
            root = find_root(p, br, sp.root_tol, bracket_cfg);
        } catch (const BracketLost&) {
            continue;
        }
        if (!out.empty() && std::abs(out.back().root.x_hat - root.x_hat) <=
                                1e-6 * std::max(1.0, std::abs(root.x_hat))) {
            continue;
        }
        try {
            HypersurfaceProfile prof = assemble_closed_profile(p, root, bracket_cfg);
            if (prof.min_curvature < 1e-3) {
                // Marginal convexity: re-integrate 4x denser and tighter so
                // grid gaps cannot hide a sign dip and theta noise stays below
                // the curvature scale of very flat near-plane profiles.
                IntegratorConfig fine = bracket_cfg;
                fine.max_step = bracket_cfg.max_step / 4.0;
                fine.rel_tol = std::max(bracket_cfg.rel_tol / 16.0, 1e-13);
                fine.abs_tol = std::max(bracket_cfg.abs_tol / 16.0, 1e-15);
                prof = assemble_closed_profile(p, root, fine);
            }
            out.push_back({root, prof, certify(prof)});
        } catch (const AssemblyError&) {
            continue;
        }
    }
    std::sort(out.begin(), out.end(),
              [](const ConstructedProfile& a, const ConstructedProfile& b) {
                  return a.root.x_hat < b.root.x_hat;
              });
    return out;
}

} // namespace lhsurf
