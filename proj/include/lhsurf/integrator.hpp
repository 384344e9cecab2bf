#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "lhsurf/params.hpp"
#include "lhsurf/rhs.hpp"

namespace lhsurf {

struct IntegratorConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = 0.05;
    double series_start_step = 1e-6; // offset s0 of the Taylor start at the axis
    double max_arclength = 100.0;
    double event_tol = 1e-12;

    void validate() const {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || !(max_step > 0.0) ||
            !(series_start_step > 0.0) || !(max_arclength > 0.0) || !(event_tol > 0.0)) {
            throw std::invalid_argument("IntegratorConfig: all fields must be positive");
        }
        if (series_start_step > max_step) {
            throw std::invalid_argument("IntegratorConfig: series_start_step must not exceed max_step");
        }
    }
};

template <int N>
using StateN = std::array<double, N>;

namespace detail {

template <int N>
inline bool all_finite(const StateN<N>& y) {
    for (double v : y) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

} // namespace detail

/// One accepted Dormand-Prince step together with its order-4 continuous
/// extension. eval() interpolates anywhere inside [s0, s0 + h].
template <int N>
struct DenseSegment {
    double s0 = 0.0;
    double h = 0.0;
    StateN<N> y0{}, ydiff{}, bspl{}, cspl{}, dspl{};

    StateN<N> eval(double s) const {
        const double t = (s - s0) / h;
        const double t1 = 1.0 - t;
        StateN<N> out;
        for (int i = 0; i < N; ++i) {
            out[i] = y0[i] + t * (ydiff[i] + t1 * (bspl[i] + t * (cspl[i] + t1 * dspl[i])));
        }
        return out;
    }

    double s_end() const { return s0 + h; }
};

struct StepStats {
    long accepted = 0;
    long rejected = 0;
};

enum class DriveOutcome { reached_end, step_failure, halted };

/// Adaptive Dormand-Prince 5(4) driver with dense output.
///
/// rhs:  StateN<N> rhs(double s, const StateN<N>& y). Non-finite stage values
///       are treated as a failed step and retried with a smaller h.
/// sink: bool sink(const DenseSegment<N>& seg, const StateN<N>& f_end) called
///       after every accepted step; return false to halt the drive.
template <int N, class RHS, class Sink>
DriveOutcome drive_dopri5(RHS&& rhs, StateN<N>& y, double& s, double s_end,
                          const IntegratorConfig& cfg, StepStats& stats, Sink&& sink) {
    // Butcher tableau of the Dormand-Prince 5(4) pair (FSAL).
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // b - bhat, error estimator weights.
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    // Dense-output weights.
    static constexpr double d1 = -12715105075.0 / 11282082432.0;
    static constexpr double d3 = 87487479700.0 / 32700410799.0;
    static constexpr double d4 = -10690763975.0 / 1880347072.0;
    static constexpr double d5 = 701980252875.0 / 199316789632.0;
    static constexpr double d6 = -1453857185.0 / 822651844.0;
    static constexpr double d7 = 69997945.0 / 29380423.0;

    const double span = s_end - s;
    if (!(span > 0.0)) return DriveOutcome::reached_end;

    StateN<N> k1 = rhs(s, y);
    if (!detail::all_finite<N>(k1)) return DriveOutcome::step_failure;

    auto sc_norm = [&](const StateN<N>& v, const StateN<N>& ya, const StateN<N>& yb) {
        double acc = 0.0;
        for (int i = 0; i < N; ++i) {
            const double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(ya[i]), std::abs(yb[i]));
            const double q = v[i] / sc;
            acc += q * q;
        }
        return std::sqrt(acc / N);
    };

    // Initial step size: curvature-probe heuristic, capped by max_step.
    double h;
    {
        const double d0 = sc_norm(y, y, y);
        const double dd1 = sc_norm(k1, y, y);
        double h0 = (d0 < 1e-5 || dd1 < 1e-5) ? 1e-6 : 0.01 * d0 / dd1;
        h0 = std::min(h0, cfg.max_step);
        StateN<N> y1;
        for (int i = 0; i < N; ++i) y1[i] = y[i] + h0 * k1[i];
        StateN<N> f1 = rhs(s + h0, y1);
        double h1 = cfg.max_step;
        if (detail::all_finite<N>(f1)) {
            StateN<N> df;
            for (int i = 0; i < N; ++i) df[i] = f1[i] - k1[i];
            const double d2 = sc_norm(df, y, y) / h0;
            const double dm = std::max(dd1, d2);
            h1 = (dm > 1e-15) ? std::pow(0.01 / dm, 0.2) : std::max(1e-6, h0 * 1e-3);
        }
        h = std::min({100.0 * h0, h1, cfg.max_step, span});
    }

    bool last_rejected = false;
    while (s < s_end) {
        if (h < 1e-14 * std::max(1.0, std::abs(s))) {
            return DriveOutcome::step_failure;
        }
        if (s + h > s_end) h = s_end - s;

        StateN<N> t, k2, k3, k4, k5, k6, k7, ynew;
        for (int i = 0; i < N; ++i) t[i] = y[i] + h * a21 * k1[i];
        k2 = rhs(s + c2 * h, t);
        for (int i = 0; i < N; ++i) t[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        k3 = rhs(s + c3 * h, t);
        for (int i = 0; i < N; ++i) t[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        k4 = rhs(s + c4 * h, t);
        for (int i = 0; i < N; ++i)
            t[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        k5 = rhs(s + c5 * h, t);
        for (int i = 0; i < N; ++i)
            t[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        k6 = rhs(s + h, t);
        for (int i = 0; i < N; ++i)
            ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        k7 = rhs(s + h, ynew);

        bool finite = detail::all_finite<N>(k2) && detail::all_finite<N>(k3) &&
                      detail::all_finite<N>(k4) && detail::all_finite<N>(k5) &&
                      detail::all_finite<N>(k6) && detail::all_finite<N>(k7) &&
                      detail::all_finite<N>(ynew);

        double err = std::numeric_limits<double>::infinity();
        if (finite) {
            StateN<N> ee;
            for (int i = 0; i < N; ++i)
                ee[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                             e7 * k7[i]);
            err = sc_norm(ee, y, ynew);
        }

        if (!(err <= 1.0)) {
            ++stats.rejected;
            last_rejected = true;
            const double fac = std::isfinite(err) ? std::max(0.1, 0.9 * std::pow(err, -0.2)) : 0.1;
            h *= fac;
            continue;
        }

        DenseSegment<N> seg;
        seg.s0 = s;
        seg.h = h;
        seg.y0 = y;
        for (int i = 0; i < N; ++i) {
            seg.ydiff[i] = ynew[i] - y[i];
            seg.bspl[i] = h * k1[i] - seg.ydiff[i];
            seg.cspl[i] = seg.ydiff[i] - h * k7[i] - seg.bspl[i];
            seg.dspl[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] +
                               d7 * k7[i]);
        }

        ++stats.accepted;
        s += h;
        y = ynew;
        k1 = k7; // FSAL

        double fac = 0.9 * std::pow(std::max(err, 1e-30), -0.2);
        fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
        last_rejected = false;
        h = std::min(fac * h, cfg.max_step);

        if (!sink(seg, k7)) return DriveOutcome::halted;
    }
    return DriveOutcome::reached_end;
}

/// Ordered dense segments of one drive; supports post-hoc interpolation.
template <int N>
struct SegmentStore {
    std::vector<DenseSegment<N>> segments;

    StateN<N> eval(double s) const {
        if (segments.empty()) throw std::logic_error("SegmentStore: empty");
        std::size_t lo = 0, hi = segments.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (segments[mid].s_end() < s)
                lo = mid + 1;
            else
                hi = mid;
        }
        return segments[lo].eval(s);
    }

    double s_begin() const { return segments.front().s0; }
    double s_end() const { return segments.back().s_end(); }
};

enum class EventKind { turning_point, axis_return, max_length, step_failure };

struct EventSet {
    bool turning_point = true;
    bool axis_return = true;
};

struct TrajectorySample {
    double s, x, r, theta, dtheta;
};

/// Densely sampled solution of the arc-length profile system, terminated at
/// the first triggered event. theta is continuous (not wrapped), so the first
/// crossing of pi is well defined.
struct Trajectory {
    std::vector<TrajectorySample> samples;
    SegmentStore<3> store; // interpolation over [samples.front().s, samples.back().s]
    EventKind terminal = EventKind::max_length;
    StepStats stats;

    const TrajectorySample& event_state() const { return samples.back(); }

    ProfileState state_at(double s) const {
        const StateN<3> y = store.eval(s);
        return ProfileState{s, y[0], y[1], y[2]};
    }
};

/// Series-expanded state at s = series_start_step for the initial-value problem
/// at the axis singularity, (x0, r=0, theta=pi/2). Truncation error O(s0^3).
inline ProfileState start_on_axis(const Params& p, double x0, const IntegratorConfig& cfg) {
    cfg.validate();
    const double s0 = cfg.series_start_step;
    const double c = (x0 + p.lambda) / p.n; // theta'(0); the frozen linear start
    return ProfileState{s0, x0 - 0.5 * c * s0 * s0, s0, M_PI_2 + c * s0};
}

/// Integrates the arc-length system from `start` until the first requested
/// event (theta = pi, r = 0), or max_arclength, or step-size underflow.
/// Events are located by sign bracketing plus bisection on the dense
/// interpolant to within event_tol of the defining equation.
inline Trajectory integrate_until(const Params& p, const ProfileState& start,
                                  const IntegratorConfig& cfg, const EventSet& events = {}) {
    cfg.validate();
    if (!(start.r > 0.0)) {
        throw std::domain_error("integrate_until: start.r must be positive (use start_on_axis)");
    }

    auto rhs = [&p](double, const StateN<3>& y) -> StateN<3> {
        const ProfileDerivs d = detail::profile_rhs_raw(p, y[0], y[1], y[2]);
        return {d.dx, d.dr, d.dtheta};
    };

    Trajectory traj;
    const ProfileDerivs d0 = detail::profile_rhs_raw(p, start.x, start.r, start.theta);
    traj.samples.push_back({start.s, start.x, start.r, start.theta, d0.dtheta});

    // The axis-return event cannot be integrated to r = 0 directly: the 1/r
    // term deflects any trajectory that is not exactly perpendicular, and
    // error control shrinks steps indefinitely on the way in. Instead the
    // event triggers when r falls through the series offset and the landing
    // state is projected onto the axis by the same expansion start_on_axis
    // uses (valid there because |cos theta| ~ r at that depth).
    const double r_detect = cfg.series_start_step;

    bool hit = false;
    EventKind hit_kind = EventKind::max_length;
    TrajectorySample hit_sample{};

    auto bisect = [&cfg](const DenseSegment<3>& seg, int comp, double offset, double g0) {
        double lo = seg.s0, hi = seg.s_end(), glo = g0;
        double sm = hi;
        for (int it = 0; it < 60; ++it) {
            sm = 0.5 * (lo + hi);
            const double gm = seg.eval(sm)[comp] - offset;
            if (std::abs(gm) <= cfg.event_tol) break;
            if (glo * gm <= 0.0) {
                hi = sm;
            } else {
                lo = sm;
                glo = gm;
            }
        }
        return sm;
    };

    auto sink = [&](const DenseSegment<3>& seg, const StateN<3>& f_end) -> bool {
        const double s1 = seg.s_end();
        const StateN<3> yend = seg.eval(s1);
        double best_s = std::numeric_limits<double>::infinity();

        if (events.turning_point) {
            const double g0 = seg.y0[2] - M_PI;
            const double g1 = yend[2] - M_PI;
            if (g0 * g1 < 0.0 || (g0 != 0.0 && g1 == 0.0)) {
                const double sm = bisect(seg, 2, M_PI, g0);
                if (sm < best_s) {
                    best_s = sm;
                    hit_kind = EventKind::turning_point;
                    const StateN<3> ye = seg.eval(sm);
                    const double dth = detail::profile_rhs_raw(p, ye[0], ye[1], ye[2]).dtheta;
                    hit_sample = {sm, ye[0], ye[1], ye[2], dth};
                }
            }
        }
        if (events.axis_return) {
            const double g0 = seg.y0[1] - r_detect;
            const double g1 = yend[1] - r_detect;
            if (g0 > 0.0 && g1 <= 0.0) { // falling through only
                const double sm = bisect(seg, 1, r_detect, g0);
                const StateN<3> ye = seg.eval(sm);
                if (std::abs(std::cos(ye[2])) <= 1e-3 && sm < best_s) {
                    // Project the near-perpendicular landing onto the axis.
                    const double delta = ye[1];
                    const double cc = (p.lambda - ye[0]) / p.n;
                    const double x_end = ye[0] - 0.5 * cc * delta * delta;
                    const double turns = std::round((ye[2] - 1.5 * M_PI) / (2.0 * M_PI));
                    const double theta_end = 1.5 * M_PI + 2.0 * M_PI * turns;
                    best_s = sm;
                    hit_kind = EventKind::axis_return;
                    hit_sample = {sm + delta, x_end, 0.0, theta_end, (p.lambda - x_end) / p.n};
                }
            }
        }

        traj.store.segments.push_back(seg);
        if (std::isfinite(best_s)) {
            hit = true;
            return false;
        }
        traj.samples.push_back({s1, yend[0], yend[1], yend[2], f_end[2]});
        return true;
    };

    StateN<3> y{start.x, start.r, start.theta};
    double s = start.s;
    const DriveOutcome out =
        drive_dopri5<3>(rhs, y, s, start.s + cfg.max_arclength, cfg, traj.stats, sink);

    if (hit) {
        traj.terminal = hit_kind;
        traj.samples.push_back(hit_sample);
    } else if (out == DriveOutcome::step_failure) {
        traj.terminal = EventKind::step_failure;
    } else {
        traj.terminal = EventKind::max_length;
    }
    return traj;
}

} // namespace lhsurf
