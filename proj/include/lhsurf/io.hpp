#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lhsurf/geometry.hpp"
#include "lhsurf/linearization.hpp"
#include "lhsurf/shooting.hpp"

namespace lhsurf {

/// All floating point in data artifacts is serialized with 17 significant
/// digits, which round-trips IEEE doubles exactly.
inline std::string format_double17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline const char* quadrant_name(Quadrant q) {
    switch (q) {
        case Quadrant::first: return "first";
        case Quadrant::second: return "second";
        case Quadrant::on_axis: return "on_axis";
    }
    return "on_axis";
}

inline Quadrant quadrant_from_name(const std::string& s) {
    if (s == "first") return Quadrant::first;
    if (s == "second") return Quadrant::second;
    if (s == "on_axis") return Quadrant::on_axis;
    throw std::runtime_error("unknown quadrant: " + s);
}

inline const char* event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::turning_point: return "turning_point";
        case EventKind::axis_return: return "axis_return";
        case EventKind::max_length: return "max_length";
        case EventKind::step_failure: return "step_failure";
    }
    return "step_failure";
}

inline EventKind event_kind_from_name(const std::string& s) {
    if (s == "turning_point") return EventKind::turning_point;
    if (s == "axis_return") return EventKind::axis_return;
    if (s == "max_length") return EventKind::max_length;
    if (s == "step_failure") return EventKind::step_failure;
    throw std::runtime_error("unknown terminal kind: " + s);
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Profile CSV
// ---------------------------------------------------------------------------

inline void write_profile_csv(const std::vector<ProfileSample>& samples, std::ostream& out) {
    out << "s,x,r,theta,dtheta,kappa_1,kappa_n,residual\n";
    for (const ProfileSample& ps : samples) {
        out << format_double17(ps.s) << ',' << format_double17(ps.x) << ','
            << format_double17(ps.r) << ',' << format_double17(ps.theta) << ','
            << format_double17(ps.dtheta) << ',' << format_double17(ps.kappa1) << ','
            << format_double17(ps.kappan) << ',' << format_double17(ps.residual) << '\n';
    }
}

inline void write_profile_csv(const std::vector<ProfileSample>& samples, const std::string& path) {
    auto out = open_output(path);
    write_profile_csv(samples, out);
}

// ---------------------------------------------------------------------------
// Profile JSON (hand-written emitter to honor the 17-digit contract; parsing
// uses nlohmann::json)
// ---------------------------------------------------------------------------

inline void write_profile_json(const HypersurfaceProfile& prof, const Certificate& cert,
                               std::ostream& out) {
    const Params& p = prof.params;
    out << "{\n";
    out << "  \"params\": {\"n\": " << p.n << ", \"lambda\": " << format_double17(p.lambda)
        << "},\n";
    out << "  \"derived\": {\"sphere_radius\": " << format_double17(p.sphere_radius())
        << ", \"cylinder_radius\": " << format_double17(p.cylinder_radius())
        << ", \"a_coefficient\": " << format_double17(p.a_coefficient())
        << ", \"theorem_range\": " << (p.in_theorem_range() ? "true" : "false") << "},\n";
    out << "  \"x_hat\": " << format_double17(prof.x_hat) << ",\n";
    out << "  \"r_hat\": " << format_double17(prof.r_hat) << ",\n";
    out << "  \"s_hat\": " << format_double17(prof.s_hat) << ",\n";
    out << "  \"min_curvature\": " << format_double17(prof.min_curvature) << ",\n";
    out << "  \"max_residual\": " << format_double17(prof.max_residual) << ",\n";
    out << "  \"certificate\": {\"convex\": " << (cert.convex ? "true" : "false")
        << ", \"simple\": " << (cert.simple ? "true" : "false")
        << ", \"min_curvature\": " << format_double17(cert.min_curvature)
        << ", \"max_residual\": " << format_double17(cert.max_residual) << "},\n";
    out << "  \"sample_columns\": [\"s\", \"x\", \"r\", \"theta\", \"dtheta\", \"kappa_1\", "
           "\"kappa_n\", \"residual\"],\n";
    out << "  \"samples\": [\n";
    for (std::size_t i = 0; i < prof.samples.size(); ++i) {
        const ProfileSample& ps = prof.samples[i];
        out << "    [" << format_double17(ps.s) << ", " << format_double17(ps.x) << ", "
            << format_double17(ps.r) << ", " << format_double17(ps.theta) << ", "
            << format_double17(ps.dtheta) << ", " << format_double17(ps.kappa1) << ", "
            << format_double17(ps.kappan) << ", " << format_double17(ps.residual) << "]"
            << (i + 1 < prof.samples.size() ? "," : "") << "\n";
    }
    out << "  ]\n}\n";
}

inline void write_profile_json(const HypersurfaceProfile& prof, const Certificate& cert,
                               const std::string& path) {
    auto out = open_output(path);
    write_profile_json(prof, cert, out);
}

inline std::pair<HypersurfaceProfile, Certificate> read_profile_json(std::istream& in) {
    const nlohmann::json j = nlohmann::json::parse(in);
    Params p(j.at("params").at("n").get<int>(), j.at("params").at("lambda").get<double>());
    HypersurfaceProfile prof{p};
    prof.x_hat = j.at("x_hat").get<double>();
    prof.r_hat = j.at("r_hat").get<double>();
    prof.s_hat = j.at("s_hat").get<double>();
    prof.min_curvature = j.at("min_curvature").get<double>();
    prof.max_residual = j.at("max_residual").get<double>();
    for (const auto& row : j.at("samples")) {
        prof.samples.push_back({row.at(0).get<double>(), row.at(1).get<double>(),
                                row.at(2).get<double>(), row.at(3).get<double>(),
                                row.at(4).get<double>(), row.at(5).get<double>(),
                                row.at(6).get<double>(), row.at(7).get<double>()});
    }
    Certificate cert;
    cert.convex = j.at("certificate").at("convex").get<bool>();
    cert.simple = j.at("certificate").at("simple").get<bool>();
    cert.min_curvature = j.at("certificate").at("min_curvature").get<double>();
    cert.max_residual = j.at("certificate").at("max_residual").get<double>();
    return {prof, cert};
}

inline std::pair<HypersurfaceProfile, Certificate> read_profile_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open for reading: " + path);
    }
    return read_profile_json(in);
}

// ---------------------------------------------------------------------------
// Linearization CSV
// ---------------------------------------------------------------------------

inline void write_linearization_csv(const std::vector<LinearSample>& samples, std::ostream& out) {
    out << "t,w,wp\n";
    for (const LinearSample& ls : samples) {
        out << format_double17(ls.t) << ',' << format_double17(ls.w) << ','
            << format_double17(ls.wp) << '\n';
    }
}

inline void write_linearization_csv(const std::vector<LinearSample>& samples,
                                    const std::string& path) {
    auto out = open_output(path);
    write_linearization_csv(samples, out);
}

// ---------------------------------------------------------------------------
// OBJ mesh
// ---------------------------------------------------------------------------

inline void write_mesh_obj(const TriMesh& mesh, std::ostream& out) {
    for (const auto& v : mesh.vertices) {
        out << "v " << format_double17(v[0]) << ' ' << format_double17(v[1]) << ' '
            << format_double17(v[2]) << '\n';
    }
    for (const auto& f : mesh.faces) {
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    }
}

inline void write_mesh_obj(const TriMesh& mesh, const std::string& path) {
    auto out = open_output(path);
    write_mesh_obj(mesh, out);
}

// ---------------------------------------------------------------------------
// Scan results as JSON lines (one ShotOutcome per line; resumable store)
// ---------------------------------------------------------------------------

inline std::string scan_line(const ShotOutcome& o) {
    std::ostringstream os;
    os << "{\"x0\": " << format_double17(o.x0) << ", \"x_star\": " << format_double17(o.x_star)
       << ", \"r_star\": " << format_double17(o.r_star)
       << ", \"s_star\": " << format_double17(o.s_star) << ", \"quadrant\": \""
       << quadrant_name(o.quadrant) << "\", \"terminal\": \"" << event_kind_name(o.terminal)
       << "\"}";
    return os.str();
}

inline void write_scan_jsonl(const std::vector<ShotOutcome>& outcomes, const std::string& path) {
    auto out = open_output(path);
    for (const ShotOutcome& o : outcomes) {
        out << scan_line(o) << '\n';
    }
}

inline std::vector<ShotOutcome> read_scan_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open for reading: " + path);
    }
    std::vector<ShotOutcome> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const nlohmann::json j = nlohmann::json::parse(line);
        ShotOutcome o;
        o.x0 = j.at("x0").get<double>();
        o.x_star = j.at("x_star").get<double>();
        o.r_star = j.at("r_star").get<double>();
        o.s_star = j.at("s_star").get<double>();
        o.quadrant = quadrant_from_name(j.at("quadrant").get<std::string>());
        o.terminal = event_kind_from_name(j.at("terminal").get<std::string>());
        out.push_back(o);
    }
    return out;
}

} // namespace lhsurf
