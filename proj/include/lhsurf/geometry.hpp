#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "lhsurf/integrator.hpp"
#include "lhsurf/params.hpp"
#include "lhsurf/rhs.hpp"

namespace lhsurf {

/// One profile sample with its pointwise certificates. kappa1 is the shared
/// rotational principal curvature, kappan the profile-direction one, residual
/// the defect of H + <X, nu> = lambda.
struct ProfileSample {
    double s, x, r, theta, dtheta;
    double kappa1, kappan, residual;
};

/// Closed profile curve on [0, 2*s_hat] whose revolution is the hypersurface:
/// starts at (x_hat, 0), runs to the r-axis crossing (0, r_hat) at s_hat and
/// continues as its own mirror down to (-x_hat, 0).
struct HypersurfaceProfile {
    Params params;
    double x_hat = 0.0;
    double r_hat = 0.0;
    double s_hat = 0.0;
    std::vector<ProfileSample> samples;
    double min_curvature = 0.0;
    double max_residual = 0.0;

    explicit HypersurfaceProfile(const Params& p) : params(p) {}
};

/// Pointwise certificates for a state. Axis samples (r = 0) are umbilic: every
/// principal curvature equals theta', and the residual limit is evaluated with
/// H = n theta' and <X, nu> = -x sin theta.
inline ProfileSample make_profile_sample(const Params& p, double s, double x, double r,
                                         double theta, double dtheta) {
    ProfileSample ps{s, x, r, theta, dtheta, 0.0, dtheta, 0.0};
    if (r > 0.0) {
        ps.kappa1 = -std::cos(theta) / r;
        ps.residual = lambda_residual(p, ProfileState{s, x, r, theta}, dtheta);
    } else {
        ps.kappa1 = dtheta;
        ps.residual = p.n * dtheta - x * std::sin(theta) - p.lambda;
    }
    return ps;
}

inline std::vector<ProfileSample> profile_samples_from_trajectory(const Params& p,
                                                                  const Trajectory& traj) {
    std::vector<ProfileSample> out;
    out.reserve(traj.samples.size());
    for (const TrajectorySample& t : traj.samples) {
        out.push_back(make_profile_sample(p, t.s, t.x, t.r, t.theta, t.dtheta));
    }
    return out;
}

inline void finalize_extrema(HypersurfaceProfile& prof) {
    double mc = std::numeric_limits<double>::infinity();
    double mr = 0.0;
    for (const ProfileSample& ps : prof.samples) {
        mc = std::min({mc, ps.kappa1, ps.kappan});
        mr = std::max(mr, std::abs(ps.residual));
    }
    prof.min_curvature = mc;
    prof.max_residual = mr;
}

namespace detail {

inline double orient(const std::array<double, 2>& a, const std::array<double, 2>& b,
                     const std::array<double, 2>& c) {
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
}

inline bool segments_intersect(const std::array<double, 2>& p1, const std::array<double, 2>& p2,
                               const std::array<double, 2>& q1, const std::array<double, 2>& q2) {
    const double d1 = orient(q1, q2, p1);
    const double d2 = orient(q1, q2, p2);
    const double d3 = orient(p1, p2, q1);
    const double d4 = orient(p1, p2, q2);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
        ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
        return true;
    }
    auto on_segment = [](const std::array<double, 2>& a, const std::array<double, 2>& b,
                         const std::array<double, 2>& c) {
        return std::min(a[0], b[0]) <= c[0] && c[0] <= std::max(a[0], b[0]) &&
               std::min(a[1], b[1]) <= c[1] && c[1] <= std::max(a[1], b[1]);
    };
    if (d1 == 0 && on_segment(q1, q2, p1)) return true;
    if (d2 == 0 && on_segment(q1, q2, p2)) return true;
    if (d3 == 0 && on_segment(p1, p2, q1)) return true;
    if (d4 == 0 && on_segment(p1, p2, q2)) return true;
    return false;
}

} // namespace detail

/// Segment sweep over the sampled polyline: true iff no two non-adjacent
/// segments intersect. Uses a uniform-grid broad phase keyed by segment
/// bounding boxes, so the expected cost is near linear.
inline bool profile_is_simple(const std::vector<ProfileSample>& samples) {
    const std::size_t m = samples.size();
    if (m < 2) return true;
    const std::size_t nseg = m - 1;

    double cell = 0.0;
    for (std::size_t i = 0; i < nseg; ++i) {
        cell = std::max(cell, std::hypot(samples[i + 1].x - samples[i].x,
                                         samples[i + 1].r - samples[i].r));
    }
    if (cell <= 0.0) return true;

    std::unordered_map<unsigned long long, std::vector<std::size_t>> grid;
    grid.reserve(2 * nseg);
    auto cells_of = [&](std::size_t i, auto&& fn) {
        const double x0 = std::min(samples[i].x, samples[i + 1].x);
        const double x1 = std::max(samples[i].x, samples[i + 1].x);
        const double y0 = std::min(samples[i].r, samples[i + 1].r);
        const double y1 = std::max(samples[i].r, samples[i + 1].r);
        for (long ix = static_cast<long>(std::floor(x0 / cell));
             ix <= static_cast<long>(std::floor(x1 / cell)); ++ix) {
            for (long iy = static_cast<long>(std::floor(y0 / cell));
                 iy <= static_cast<long>(std::floor(y1 / cell)); ++iy) {
                fn((static_cast<unsigned long long>(static_cast<unsigned long>(ix)) << 32) ^
                   static_cast<unsigned long>(iy));
            }
        }
    };

    for (std::size_t i = 0; i < nseg; ++i) {
        cells_of(i, [&](unsigned long long k) { grid[k].push_back(i); });
    }

    for (const auto& [k, bucket] : grid) {
        for (std::size_t a = 0; a < bucket.size(); ++a) {
            for (std::size_t b = a + 1; b < bucket.size(); ++b) {
                const std::size_t i = std::min(bucket[a], bucket[b]);
                const std::size_t j = std::max(bucket[a], bucket[b]);
                if (j - i <= 1) continue; // adjacent segments share a vertex
                if (detail::segments_intersect({samples[i].x, samples[i].r},
                                               {samples[i + 1].x, samples[i + 1].r},
                                               {samples[j].x, samples[j].r},
                                               {samples[j + 1].x, samples[j + 1].r})) {
                    return false;
                }
            }
        }
    }
    return true;
}

struct Certificate {
    bool convex = false;
    double min_curvature = 0.0;
    double max_residual = 0.0;
    bool simple = false;
};

/// Grid certification: convex iff every sampled principal curvature is
/// positive, simple iff the profile polyline has no self-intersection.
inline Certificate certify(const HypersurfaceProfile& prof) {
    Certificate c;
    c.min_curvature = prof.min_curvature;
    c.max_residual = prof.max_residual;
    c.convex = prof.min_curvature > 0.0;
    c.simple = profile_is_simple(prof.samples);
    return c;
}

struct TriMesh {
    std::vector<std::array<double, 3>> vertices;
    std::vector<std::array<int, 3>> faces;
};

/// Revolves an n = 2 profile into a watertight triangle mesh with outward
/// winding: rings over the interior samples plus fans at the two axis poles.
inline TriMesh revolve_mesh(const HypersurfaceProfile& prof, int resolution) {
    if (prof.params.n != 2) {
        throw std::invalid_argument("revolve_mesh: only n = 2 profiles revolve into 3-space");
    }
    if (resolution < 3) {
        throw std::invalid_argument("revolve_mesh: resolution must be >= 3");
    }
    if (prof.samples.size() < 3 || prof.samples.front().r != 0.0 || prof.samples.back().r != 0.0) {
        throw std::invalid_argument("revolve_mesh: profile must start and end on the axis");
    }

    TriMesh mesh;
    const int res = resolution;
    const std::size_t rings = prof.samples.size() - 2;

    mesh.vertices.push_back({prof.samples.front().x, 0.0, 0.0});
    for (std::size_t i = 1; i + 1 < prof.samples.size(); ++i) {
        const ProfileSample& ps = prof.samples[i];
        for (int j = 0; j < res; ++j) {
            const double a = 2.0 * M_PI * j / res;
            mesh.vertices.push_back({ps.x, ps.r * std::cos(a), ps.r * std::sin(a)});
        }
    }
    mesh.vertices.push_back({prof.samples.back().x, 0.0, 0.0});

    const int pole0 = 0;
    const int pole1 = static_cast<int>(mesh.vertices.size()) - 1;
    auto ring = [res](std::size_t i, int j) {
        return 1 + static_cast<int>(i) * res + (j % res);
    };

    for (int j = 0; j < res; ++j) {
        mesh.faces.push_back({pole0, ring(0, j), ring(0, j + 1)});
    }
    for (std::size_t i = 0; i + 1 < rings; ++i) {
        for (int j = 0; j < res; ++j) {
            mesh.faces.push_back({ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)});
            mesh.faces.push_back({ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)});
        }
    }
    for (int j = 0; j < res; ++j) {
        mesh.faces.push_back({ring(rings - 1, j + 1), ring(rings - 1, j), pole1});
    }
    return mesh;
}

} // namespace lhsurf
