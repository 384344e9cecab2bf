// Command-line front end: solve / trace / scan / linearize / verify / mesh.
//
// Machine-readable summaries go to stdout, diagnostics to stderr. Data
// artifacts are deterministic: fixed formatting, ordered output, no wall-clock
// content. Exit codes: 0 success, 2 no root found, 3 root found but not
// certified, 64 usage or validation error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "lhsurf/io.hpp"
#include "lhsurf/linearization.hpp"
#include "lhsurf/shooting.hpp"

using namespace lhsurf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNoRoot = 2;
constexpr int kExitNotCertified = 3;
constexpr int kExitUsage = 64;

struct CommonOpts {
    int n = 2;
    double lambda = -1.0;
    IntegratorConfig integ;
    std::string out_dir = ".";
    std::string format = "both"; // csv | json | both
    int jobs = 0;                // 0 = hardware concurrency (scan only)
    std::string config_path;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--n", o.n, "ambient dimension n (>= 2)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_option("--lambda", o.lambda, "constant lambda of H + <X,nu> = lambda")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_option("--rel-tol", o.integ.rel_tol, "integrator relative tolerance")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_option("--abs-tol", o.integ.abs_tol, "integrator absolute tolerance")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_option("--max-step", o.integ.max_step, "integrator maximum arc-length step")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_option("--max-arclength", o.integ.max_arclength, "arc-length budget per shot")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_option("--out", o.out_dir, "output directory")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_option("--format", o.format, "profile artifact format: csv, json or both")
        ->check(CLI::IsMember({"csv", "json", "both"}))
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_option("--jobs", o.jobs, "parallel shots for scans (0 = all cores)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->add_option("--config", o.config_path, "flat key=value config file (flags win)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

int effective_jobs(int jobs) {
    if (jobs > 0) return jobs;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

std::string join_path(const std::string& dir, const std::string& name) {
    if (dir.empty() || dir == ".") return name;
    return dir.back() == '/' ? dir + name : dir + "/" + name;
}

void warn_outside_theorem_range(const Params& p) {
    if (!p.in_theorem_range()) {
        std::cerr << "warning: lambda = " << format_double17(p.lambda)
                  << " is outside the theorem range (-2/sqrt(n+2), 0); results carry no existence "
                     "guarantee\n";
    }
}

// Config file support: lines "key = value" (or "key value"), '#' comments.
// Entries are injected as --key=value right after the subcommand token, so
// anything typed on the command line takes precedence via TakeLast.
std::vector<std::string> config_args(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw CLI::ValidationError("--config", "cannot open config file: " + path);
    }
    std::vector<std::string> args;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string key, eq, value;
        std::istringstream ls(line);
        if (!(ls >> key)) continue;
        ls >> eq;
        if (eq == "=") {
            ls >> value;
        } else {
            value = eq;
        }
        if (key.empty() || value.empty()) {
            throw CLI::ValidationError("--config", "malformed config line: " + line);
        }
        args.push_back("--" + key + "=" + value);
    }
    return args;
}

void write_summary_json(std::ostream& out, const Params& p,
                        const std::vector<ConstructedProfile>& profs) {
    out << "{\n";
    out << "  \"n\": " << p.n << ",\n";
    out << "  \"lambda\": " << format_double17(p.lambda) << ",\n";
    out << "  \"sphere_radius\": " << format_double17(p.sphere_radius()) << ",\n";
    out << "  \"theorem_range\": " << (p.in_theorem_range() ? "true" : "false") << ",\n";
    out << "  \"roots\": [\n";
    for (std::size_t i = 0; i < profs.size(); ++i) {
        const ConstructedProfile& c = profs[i];
        out << "    {\"x_hat\": " << format_double17(c.root.x_hat)
            << ", \"r_hat\": " << format_double17(c.profile.r_hat)
            << ", \"s_hat\": " << format_double17(c.profile.s_hat)
            << ", \"residual\": " << format_double17(c.root.residual)
            << ", \"iterations\": " << c.root.iterations
            << ", \"convex\": " << (c.certificate.convex ? "true" : "false")
            << ", \"simple\": " << (c.certificate.simple ? "true" : "false")
            << ", \"min_curvature\": " << format_double17(c.certificate.min_curvature)
            << ", \"max_residual\": " << format_double17(c.certificate.max_residual) << "}"
            << (i + 1 < profs.size() ? "," : "") << "\n";
    }
    out << "  ]\n}\n";
}

int cmd_solve(const CommonOpts& o) {
    Params p(o.n, o.lambda);
    o.integ.validate();
    warn_outside_theorem_range(p);

    SolvePipelineConfig sp;
    sp.jobs = effective_jobs(o.jobs);
    const std::vector<ConstructedProfile> profs = solve_profiles(p, o.integ, sp);

    if (profs.empty()) {
        std::cerr << "no closure root found in (-lambda, sphere_radius)\n";
        write_summary_json(std::cout, p, profs);
        return kExitNoRoot;
    }

    bool any_certified = false;
    for (std::size_t i = 0; i < profs.size(); ++i) {
        const ConstructedProfile& c = profs[i];
        const std::string stem = "profile_" + std::to_string(i + 1);
        if (o.format == "csv" || o.format == "both") {
            write_profile_csv(c.profile.samples, join_path(o.out_dir, stem + ".csv"));
        }
        if (o.format == "json" || o.format == "both") {
            write_profile_json(c.profile, c.certificate, join_path(o.out_dir, stem + ".json"));
        }
        if (c.certificate.convex && c.certificate.simple) any_certified = true;
    }

    {
        auto out = open_output(join_path(o.out_dir, "summary.json"));
        write_summary_json(out, p, profs);
    }
    write_summary_json(std::cout, p, profs);
    return any_certified ? kExitOk : kExitNotCertified;
}

int cmd_trace(const CommonOpts& o, double x0) {
    Params p(o.n, o.lambda);
    o.integ.validate();
    warn_outside_theorem_range(p);

    const Trajectory traj = shoot_trajectory(p, x0, o.integ);
    const ShotOutcome out = outcome_from_trajectory(x0, traj);

    // open trajectories export as sample CSV for every n
    write_profile_csv(profile_samples_from_trajectory(p, traj),
                      join_path(o.out_dir, "trace.csv"));

    std::cout << scan_line(out) << "\n";
    return kExitOk;
}

int cmd_scan(const CommonOpts& o, double lo, double hi, int count, bool resume) {
    Params p(o.n, o.lambda);
    o.integ.validate();
    warn_outside_theorem_range(p);

    const double R = p.sphere_radius();
    if (std::isnan(lo)) lo = std::max(-p.lambda * (1.0 + 1e-2), R * 1e-2);
    if (std::isnan(hi)) hi = R * (1.0 - 1e-2);
    if (!(lo < hi) || count < 2 || !(lo > 0.0)) {
        std::cerr << "scan: need 0 < lo < hi and count >= 2\n";
        return kExitUsage;
    }

    const std::string store_path = join_path(o.out_dir, "scan.jsonl");
    std::map<double, ShotOutcome> done;
    if (resume) {
        std::ifstream probe(store_path);
        if (probe.good()) {
            for (const ShotOutcome& s : read_scan_jsonl(store_path)) {
                done.emplace(s.x0, s);
            }
        }
    }

    std::vector<ShotOutcome> outcomes(count);
    std::vector<int> missing;
    for (int i = 0; i < count; ++i) {
        const double x0 = lo + (hi - lo) * i / (count - 1);
        const auto it = done.find(x0);
        if (it != done.end()) {
            outcomes[i] = it->second;
        } else {
            missing.push_back(i);
        }
    }

    std::cerr << "scan: " << missing.size() << " of " << count << " grid points to compute\n";
    if (!missing.empty()) {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t k = next.fetch_add(1); k < missing.size(); k = next.fetch_add(1)) {
                const int i = missing[k];
                const double x0 = lo + (hi - lo) * i / (count - 1);
                try {
                    outcomes[i] = shoot(p, x0, o.integ);
                } catch (const NonTerminatingShot& e) {
                    outcomes[i] = e.outcome;
                }
            }
        };
        const int workers = std::min<int>(effective_jobs(o.jobs), static_cast<int>(missing.size()));
        if (workers <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
            for (std::thread& t : pool) t.join();
        }
    }

    write_scan_jsonl(outcomes, store_path);

    // stdout: brackets found on the grid
    std::cout << "{\"brackets\": [";
    bool first = true;
    for (int i = 0; i + 1 < count; ++i) {
        const ShotOutcome& a = outcomes[i];
        const ShotOutcome& b = outcomes[i + 1];
        if (a.terminal != EventKind::turning_point || b.terminal != EventKind::turning_point) {
            continue;
        }
        if (a.x_star * b.x_star < 0.0 || std::abs(a.x_star) <= kDefaultRootTol ||
            std::abs(b.x_star) <= kDefaultRootTol) {
            std::cout << (first ? "" : ", ") << "[" << format_double17(a.x0) << ", "
                      << format_double17(b.x0) << "]";
            first = false;
        }
    }
    std::cout << "]}\n";
    return kExitOk;
}

int cmd_linearize(const CommonOpts& o, const std::string& side) {
    Params p(o.n, o.lambda);
    o.integ.validate();

    if (side == "plane") {
        const PlaneLinearization lin =
            solve_plane_linearization(p, std::sqrt(2.0 * p.n), o.integ);
        write_linearization_csv(lin.samples, join_path(o.out_dir, "linearize_plane.csv"));
        std::cout << "w(sqrt(n)) > 0: " << (lin.w_at_sqrt_n > 0.0 ? "PASS" : "FAIL") << "\n";
        std::cout << "w(sqrt(2n)) < 0: " << (lin.w_at_sqrt_2n < 0.0 ? "PASS" : "FAIL") << "\n";
        std::cout << "w(sqrt(n)) = " << format_double17(lin.w_at_sqrt_n) << "\n";
        std::cout << "w(sqrt(2n)) = " << format_double17(lin.w_at_sqrt_2n) << "\n";
        return (lin.w_at_sqrt_n > 0.0 && lin.w_at_sqrt_2n < 0.0) ? kExitOk : kExitNotCertified;
    }

    const SphereLinearization lin = solve_sphere_linearization(p, o.integ);
    write_linearization_csv(lin.samples, join_path(o.out_dir, "linearize_sphere.csv"));
    std::cout << "w(pi/2) < 0: " << (lin.w_pi_half < 0.0 ? "PASS" : "FAIL") << "\n";
    std::cout << "w'(pi/2) < 0: " << (lin.wp_pi_half < 0.0 ? "PASS" : "FAIL") << "\n";
    std::cout << "w(pi/2) = " << format_double17(lin.w_pi_half) << "\n";
    std::cout << "w'(pi/2) = " << format_double17(lin.wp_pi_half) << "\n";
    if (!p.in_theorem_range()) {
        std::cerr << "note: the endpoint sign guarantee needs -2/sqrt(n+2) < lambda <= 0\n";
    }
    return (lin.w_pi_half < 0.0 && lin.wp_pi_half < 0.0) ? kExitOk : kExitNotCertified;
}

int cmd_verify(const CommonOpts& o, double epsilon) {
    Params p(o.n, o.lambda);
    o.integ.validate();

    const BoundsReport rep = verify_bounds(p, epsilon, o.integ);
    std::ostringstream os;
    os << "{\n";
    os << "  \"epsilon\": " << format_double17(rep.epsilon) << ",\n";
    os << "  \"x0\": " << format_double17(rep.x0) << ",\n";
    os << "  \"r_star\": " << format_double17(rep.r_star) << ",\n";
    os << "  \"x_star\": " << format_double17(rep.x_star) << ",\n";
    os << "  \"lemma31_bound\": " << format_double17(rep.lemma31_bound) << ",\n";
    os << "  \"lemma31_ok\": " << (rep.lemma31_ok ? "true" : "false") << ",\n";
    os << "  \"h_zero_radius\": "
       << (rep.h_zero_radius ? format_double17(*rep.h_zero_radius) : "null") << ",\n";
    os << "  \"lemma32_in_window\": " << (rep.lemma32_in_window ? "true" : "false") << ",\n";
    os << "  \"lemma33_applicable\": " << (rep.lemma33_applicable ? "true" : "false") << ",\n";
    os << "  \"lemma33_ok\": " << (rep.lemma33_ok ? "true" : "false") << ",\n";
    os << "  \"prop31_applicable\": " << (rep.prop31_applicable ? "true" : "false") << ",\n";
    os << "  \"prop31_x_lower\": " << format_double17(rep.prop31_x_lower) << ",\n";
    os << "  \"prop31_ok\": " << (rep.prop31_ok ? "true" : "false") << "\n";
    os << "}\n";

    auto out = open_output(join_path(o.out_dir, "verify.json"));
    out << os.str();
    std::cout << os.str();
    return kExitOk;
}

int cmd_mesh(const CommonOpts& o, const std::string& input, int resolution) {
    Params p(o.n, o.lambda);
    o.integ.validate();
    if (p.n != 2) {
        std::cerr << "mesh: revolved 3-space meshes need n = 2 (profile CSV/JSON stays available "
                     "for all n)\n";
        return kExitUsage;
    }

    std::vector<std::pair<HypersurfaceProfile, Certificate>> profiles;
    if (!input.empty()) {
        profiles.push_back(read_profile_json(input));
    } else {
        SolvePipelineConfig sp;
        sp.jobs = effective_jobs(o.jobs);
        for (const ConstructedProfile& c : solve_profiles(p, o.integ, sp)) {
            profiles.emplace_back(c.profile, c.certificate);
        }
        if (profiles.empty()) {
            std::cerr << "mesh: no closure root found\n";
            return kExitNoRoot;
        }
    }

    for (std::size_t i = 0; i < profiles.size(); ++i) {
        const TriMesh mesh = revolve_mesh(profiles[i].first, resolution);
        const std::string name = "mesh_" + std::to_string(i + 1) + ".obj";
        write_mesh_obj(mesh, join_path(o.out_dir, name));
        std::cout << "{\"file\": \"" << name << "\", \"vertices\": " << mesh.vertices.size()
                  << ", \"faces\": " << mesh.faces.size() << "}\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"shooting solver for rotationally symmetric lambda-hypersurfaces"};
    app.require_subcommand(1);

    CommonOpts solve_o, trace_o, scan_o, lin_o, verify_o, mesh_o;
    double trace_x0 = 1.0;
    double scan_lo = std::nan(""), scan_hi = std::nan("");
    int scan_count = 128;
    bool scan_resume = false;
    std::string lin_side = "sphere";
    double verify_eps = 1e-3;
    std::string mesh_input;
    int mesh_resolution = 64;

    CLI::App* solve = app.add_subcommand("solve", "find, certify and export closed profiles");
    add_common(solve, solve_o);

    CLI::App* trace = app.add_subcommand("trace", "integrate one shot and export it");
    add_common(trace, trace_o);
    trace->add_option("--x0", trace_x0, "axis intercept of the shot")
        ->required()
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    CLI::App* scan = app.add_subcommand("scan", "evaluate the shooting map over a grid");
    add_common(scan, scan_o);
    scan->add_option("--lo", scan_lo, "grid lower end (default: -lambda (1+1e-2))")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    scan->add_option("--hi", scan_hi, "grid upper end (default: sphere_radius (1-1e-2))")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    scan->add_option("--count", scan_count, "grid point count")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    scan->add_flag("--resume", scan_resume, "reuse results already in scan.jsonl");

    CLI::App* lin = app.add_subcommand("linearize", "solve a linearized equation and certify signs");
    add_common(lin, lin_o);
    lin->add_option("--side", lin_side, "plane or sphere")
        ->check(CLI::IsMember({"plane", "sphere"}))
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    CLI::App* verify = app.add_subcommand("verify", "evaluate the near-plane quantitative bounds");
    add_common(verify, verify_o);
    verify->add_option("--epsilon", verify_eps, "offset of x0 = -lambda + epsilon")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    CLI::App* mesh = app.add_subcommand("mesh", "revolve a profile into an OBJ triangle mesh");
    add_common(mesh, mesh_o);
    mesh->add_option("--input", mesh_input, "profile JSON from a previous solve")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    mesh->add_option("--resolution", mesh_resolution, "azimuthal resolution (>= 3)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    // Two-phase parse: peel --config off first, then reparse with the config
    // entries injected right after the subcommand so explicit flags win.
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        std::string config_path;
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (args[i] == "--config" && i + 1 < args.size()) {
                config_path = args[i + 1];
            } else if (args[i].rfind("--config=", 0) == 0) {
                config_path = args[i].substr(9);
            }
        }
        if (!config_path.empty()) {
            const std::vector<std::string> extra = config_args(config_path);
            const std::set<std::string> subnames{"solve", "trace", "scan",
                                                 "linearize", "verify", "mesh"};
            std::vector<std::string> merged;
            bool injected = false;
            for (const std::string& a : args) {
                merged.push_back(a);
                if (!injected && subnames.count(a)) {
                    merged.insert(merged.end(), extra.begin(), extra.end());
                    injected = true;
                }
            }
            if (!injected) {
                throw CLI::ValidationError("--config", "config requires a subcommand");
            }
            args = std::move(merged);
        }

        std::vector<const char*> cargv;
        cargv.push_back(argv[0]);
        for (const std::string& a : args) cargv.push_back(a.c_str());
        app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage; // help exits clean, bad usage exits 64
    }

    try {
        if (solve->parsed()) return cmd_solve(solve_o);
        if (trace->parsed()) return cmd_trace(trace_o, trace_x0);
        if (scan->parsed()) return cmd_scan(scan_o, scan_lo, scan_hi, scan_count, scan_resume);
        if (lin->parsed()) return cmd_linearize(lin_o, lin_side);
        if (verify->parsed()) return cmd_verify(verify_o, verify_eps);
        if (mesh->parsed()) return cmd_mesh(mesh_o, mesh_input, mesh_resolution);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitUsage;
}
