#include "finsler/acceptance.hpp"
#include "finsler/control.hpp"
#include "finsler/geodesic.hpp"
#include "finsler/jacobi.hpp"
#include "finsler/scene.hpp"
#include "finsler/submersion.hpp"
#include "finsler/svg.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace {

using nlohmann::json;
using namespace finsler;

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Vec parse_vec(const std::string& text, const char* field) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            vals.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ConfigError(std::string(field) + ": expected comma-separated numbers, got '" +
                              text + "'");
        }
    }
    if (vals.empty()) throw ConfigError(std::string(field) + ": empty vector");
    return Eigen::Map<const Vec>(vals.data(), static_cast<long>(vals.size()));
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

/// Config-file fallback: a key applies only when the flag was not given.
template <typename T>
void fallback(const CLI::App& cmd, const json& cfg, const std::string& key, T& var) {
    const CLI::Option* opt = cmd.get_option_no_throw("--" + key);
    if (opt && opt->count() > 0) return;
    if (!cfg.contains(key)) return;
    try {
        var = cfg.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: field '" + key + "' has the wrong type");
    }
}

int default_threads() {
    if (const char* env = std::getenv("FINSLER_REACH_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

GridWindow parse_window(const std::string& text) {
    const Vec w = parse_vec(text, "window");
    if (w.size() != 4 || w[0] >= w[1] || w[2] >= w[3])
        throw ConfigError("window: expected x0,x1,y0,y1 with x0 < x1, y0 < y1");
    return {w[0], w[1], w[2], w[3]};
}

void write_file(const std::string& path, const std::function<void(std::ostream&)>& emit) {
    std::ofstream out(path);
    if (!out) throw ConfigError("out: cannot open " + path + " for writing");
    emit(out);
}

// ---- subcommand drivers --------------------------------------------------

struct GeodesicArgs {
    std::string scenario = "euclidean", x0, v0, out, svg;
    double T = 1.0, step = 1e-3;
    int dim = 2;
    bool zermelo = false;
};

int run_geodesic(const GeodesicArgs& a) {
    const Scene sc = scenario(a.scenario, a.dim);
    if (a.x0.empty() || a.v0.empty()) throw ConfigError("x0/v0: required");
    const Vec x0 = parse_vec(a.x0, "x0");
    const Vec v0 = parse_vec(a.v0, "v0");
    if (x0.size() != sc.dim || v0.size() != sc.dim)
        throw ConfigError("x0/v0: dimension mismatch with scenario");
    if (a.step <= 0.0) throw ConfigError("step: must be positive");
    const Trajectory traj = a.zermelo ? zermelo_geodesic(sc, {x0, v0}, a.T, a.step)
                                      : integrate_geodesic(sc, {x0, v0}, a.T, a.step);
    const double len = curve_length(sc, traj);
    if (!a.out.empty()) write_file(a.out, [&](std::ostream& os) { write_trajectory_csv(os, traj); });
    if (!a.svg.empty())
        write_file(a.svg, [&](std::ostream& os) { write_trajectory_svg(os, traj); });
    std::cout << "geodesic " << a.scenario << ": " << traj.size() << " samples, length "
              << len << (traj.truncated ? " (truncated at chart exit)" : "");
    if (!a.out.empty()) std::cout << " -> " << a.out;
    if (!a.svg.empty()) std::cout << ", " << a.svg;
    std::cout << "\n";
    return 0;
}

struct ReachArgs {
    std::string scenario = "cone_r2", q0 = "0,0", window = "-2,2,-0.25,2.75", out, svg;
    double horizon = 6.0, res = 0.05, step = 1e-2;
    int letters = 4, threads = 0;
    long samples = 10000;
    std::uint64_t seed = 1;
};

int run_reach(const ReachArgs& a, bool orbit) {
    const Scene sc = scenario(a.scenario);
    const ControlSystem sys = make_control_system(sc);
    ReachParams p;
    p.horizon = a.horizon;
    p.max_letters = a.letters;
    p.samples = a.samples;
    p.window = parse_window(a.window);
    p.resolution = a.res;
    p.seed = a.seed;
    p.step = a.step;
    p.threads = a.threads > 0 ? a.threads : default_threads();
    if (p.horizon <= 0.0) throw ConfigError("horizon: must be positive");
    if (p.resolution <= 0.0) throw ConfigError("res: must be positive");
    if (p.max_letters < 1) throw ConfigError("letters: must be at least 1");
    if (p.samples < 0) throw ConfigError("samples: must be nonnegative");
    const Vec q0 = parse_vec(a.q0, "q0");
    if (q0.size() != sc.dim) throw ConfigError("q0: dimension mismatch with scenario");
    const ReachGrid grid = orbit ? orbit_set(sys, q0, p) : attainable_set(sys, q0, p);
    if (!a.out.empty()) write_file(a.out, [&](std::ostream& os) { write_grid_csv(os, grid); });
    if (!a.svg.empty()) {
        std::vector<SvgOverlay> overlays;
        if (a.scenario == "cone_r2") overlays.push_back(cone_boundary_overlay(p.window));
        write_file(a.svg, [&](std::ostream& os) { write_grid_svg(os, grid, overlays); });
    }
    std::cout << (orbit ? "orbit" : "reach") << " " << a.scenario << ": "
              << grid.occupied_cells() << "/" << (grid.nx() * grid.ny())
              << " cells occupied (" << grid.occupied_fraction() << ")";
    if (!a.out.empty()) std::cout << " -> " << a.out;
    if (!a.svg.empty()) std::cout << ", " << a.svg;
    std::cout << "\n";
    return 0;
}

struct LieArgs {
    std::string scenario = "cone_r2", point = "0,0";
    int depth = 2;
};

int run_lierank(const LieArgs& a) {
    const Scene sc = scenario(a.scenario);
    const ControlSystem sys = make_control_system(sc);
    if (a.depth < 1) throw ConfigError("depth: must be at least 1");
    const Vec x = parse_vec(a.point, "point");
    if (x.size() != sc.dim) throw ConfigError("point: dimension mismatch with scenario");
    std::vector<VectorField> fields;
    for (const Generator& g : sys.generators)
        fields.push_back([g](const Vec& p) { return g.eval(p); });
    const int rank = lie_rank(fields, x, a.depth);
    std::cout << "lierank " << a.scenario << " at (" << a.point << "), depth " << a.depth
              << ": rank " << rank << "\n";
    return 0;
}

struct JacobiArgs {
    std::string triple = "flat", file, J0, out;
    int n = 2;
    double grid_step = 1e-3;
    bool analyze = false;
};

int run_jacobi(const JacobiArgs& a) {
    TripleConfig cfg;
    if (!a.file.empty()) {
        std::ifstream in(a.file);
        if (!in) throw ConfigError("file: cannot open " + a.file);
        std::stringstream ss;
        ss << in.rdbuf();
        cfg = parse_triple_json(ss.str());
    } else {
        cfg.triple = catalog_triple(a.triple, a.n);
    }
    if (a.grid_step <= 0.0) throw ConfigError("grid-step: must be positive");

    std::cout << "jacobi triple '" << cfg.triple.name << "' rank " << cfg.triple.n
              << " on [" << cfg.triple.t0 << ", " << cfg.triple.t1 << "]";
    if (!a.J0.empty()) {
        const Vec J0 = parse_vec(a.J0, "J0");
        if (J0.size() != 2 * cfg.triple.n)
            throw ConfigError("J0: expected a 2n-vector for rank n");
        const JacobiField field = solve_jacobi(cfg.triple, J0, a.grid_step);
        if (!a.out.empty())
            write_file(a.out, [&](std::ostream& os) { write_field_csv(os, field); });
        std::cout << "; field |J(t1)| = " << field.value(cfg.triple.t1).norm();
        if (!a.out.empty()) std::cout << " -> " << a.out;
    }
    std::cout << "\n";

    if (a.analyze && !cfg.basis.empty()) {
        const Subspace S = make_subspace(cfg.triple, cfg.basis, a.grid_step);
        const SubspaceClass cls = classify_subspace(S);
        std::cout << "  subspace dim " << S.dim() << ": "
                  << (cls.lagrangian ? "Lagrangian" : cls.isotropic ? "isotropic" : "generic")
                  << " (max |omega| = " << cls.max_omega << ")\n";
        const auto singulars = singular_instants(S, 1e-2, 1e-7);
        std::cout << "  singular instants (" << singulars.size() << "):";
        for (double t : singulars) std::cout << " " << t;
        std::cout << "\n";
        if (cls.lagrangian) {
            const RiccatiReport rep = trace_riccati_check(cfg.triple, S);
            std::cout << "  trace-Riccati: " << (rep.applicable ? "applicable" : "not applicable")
                      << ", max |tr S| = " << rep.max_trace_S << ", max |S| = "
                      << rep.max_norm_S << "\n";
            if (rep.r_psd) {
                const WilkingDecomposition w = wilking_decompose(cfg.triple, S);
                std::cout << "  splitting dims (" << w.null_span.dim() << ", "
                          << w.parallel_span.dim() << "), reconstruction error "
                          << w.reconstruction_error << "\n";
            }
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Randers/Zermelo geometry toolkit: geodesics, reachable sets, Jacobi calculus"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file; flags win on conflict")
        ->expected(1);

    GeodesicArgs ga;
    CLI::App* geo = app.add_subcommand("geodesic", "integrate a geodesic and emit CSV/SVG");
    geo->add_option("--scenario", ga.scenario);
    geo->add_option("--dim", ga.dim);
    geo->add_option("--x0", ga.x0);
    geo->add_option("--v0", ga.v0);
    geo->add_option("--T", ga.T);
    geo->add_option("--step", ga.step);
    geo->add_option("--out", ga.out);
    geo->add_option("--svg", ga.svg);
    geo->add_flag("--zermelo", ga.zermelo, "use the straight-line fast path (Killing wind)");

    ReachArgs ra;
    auto add_reach_opts = [&ra](CLI::App* cmd) {
        cmd->add_option("--scenario", ra.scenario);
        cmd->add_option("--q0", ra.q0);
        cmd->add_option("--horizon", ra.horizon);
        cmd->add_option("--letters", ra.letters);
        cmd->add_option("--samples", ra.samples);
        cmd->add_option("--window", ra.window);
        cmd->add_option("--res", ra.res);
        cmd->add_option("--seed", ra.seed);
        cmd->add_option("--step", ra.step);
        cmd->add_option("--threads", ra.threads);
        cmd->add_option("--out", ra.out);
        cmd->add_option("--svg", ra.svg);
    };
    CLI::App* reach = app.add_subcommand("reach", "attainable-set occupancy grid");
    add_reach_opts(reach);
    CLI::App* orbit = app.add_subcommand("orbit", "orbit occupancy grid (signed times)");
    add_reach_opts(orbit);

    LieArgs la;
    CLI::App* lie = app.add_subcommand("lierank", "bracket-generated rank at a point");
    lie->add_option("--scenario", la.scenario);
    lie->add_option("--point", la.point);
    lie->add_option("--depth", la.depth);

    JacobiArgs ja;
    CLI::App* jac = app.add_subcommand("jacobi", "solve/analyze Jacobi triples");
    jac->add_option("--triple", ja.triple);
    jac->add_option("--n", ja.n);
    jac->add_option("--file", ja.file);
    jac->add_option("--J0", ja.J0);
    jac->add_option("--grid-step", ja.grid_step);
    jac->add_option("--out", ja.out);
    jac->add_flag("--analyze", ja.analyze);

    std::string suite = "paper";
    int check_threads = 0;
    CLI::App* check = app.add_subcommand("check", "run the reproduction suite");
    check->add_option("--suite", suite);
    check->add_option("--threads", check_threads);

    CLI::App* list = app.add_subcommand("scenario-list", "list registered scenarios");
    // Let `finsler <cmd> --config f.json` reach the global --config option.
    for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        const json cfg = load_config(config_path);
        if (geo->parsed()) {
            fallback(*geo, cfg, "scenario", ga.scenario);
            fallback(*geo, cfg, "dim", ga.dim);
            fallback(*geo, cfg, "x0", ga.x0);
            fallback(*geo, cfg, "v0", ga.v0);
            fallback(*geo, cfg, "T", ga.T);
            fallback(*geo, cfg, "step", ga.step);
            fallback(*geo, cfg, "out", ga.out);
            fallback(*geo, cfg, "svg", ga.svg);
            fallback(*geo, cfg, "zermelo", ga.zermelo);
            return run_geodesic(ga);
        }
        if (reach->parsed() || orbit->parsed()) {
            CLI::App* cmd = reach->parsed() ? reach : orbit;
            fallback(*cmd, cfg, "scenario", ra.scenario);
            fallback(*cmd, cfg, "q0", ra.q0);
            fallback(*cmd, cfg, "horizon", ra.horizon);
            fallback(*cmd, cfg, "letters", ra.letters);
            fallback(*cmd, cfg, "samples", ra.samples);
            fallback(*cmd, cfg, "window", ra.window);
            fallback(*cmd, cfg, "res", ra.res);
            fallback(*cmd, cfg, "seed", ra.seed);
            fallback(*cmd, cfg, "step", ra.step);
            fallback(*cmd, cfg, "threads", ra.threads);
            fallback(*cmd, cfg, "out", ra.out);
            fallback(*cmd, cfg, "svg", ra.svg);
            return run_reach(ra, orbit->parsed());
        }
        if (lie->parsed()) {
            fallback(*lie, cfg, "scenario", la.scenario);
            fallback(*lie, cfg, "point", la.point);
            fallback(*lie, cfg, "depth", la.depth);
            return run_lierank(la);
        }
        if (jac->parsed()) {
            fallback(*jac, cfg, "triple", ja.triple);
            fallback(*jac, cfg, "n", ja.n);
            fallback(*jac, cfg, "file", ja.file);
            fallback(*jac, cfg, "J0", ja.J0);
            fallback(*jac, cfg, "grid-step", ja.grid_step);
            fallback(*jac, cfg, "out", ja.out);
            fallback(*jac, cfg, "analyze", ja.analyze);
            return run_jacobi(ja);
        }
        if (check->parsed()) {
            fallback(*check, cfg, "suite", suite);
            fallback(*check, cfg, "threads", check_threads);
            if (suite != "paper") throw ConfigError("suite: unknown suite '" + suite + "'");
            const int threads = check_threads > 0 ? check_threads : default_threads();
            return run_paper_suite(std::cout, threads) ? 0 : 1;
        }
        if (list->parsed()) {
            for (const std::string& name : scenario_names()) std::cout << name << "\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::domain_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return 0;
}
