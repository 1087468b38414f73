#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "platevem/errors.hpp"
#include "platevem/experiments.hpp"

#ifndef PLATEVEM_GIT_DESCRIBE
#define PLATEVEM_GIT_DESCRIBE "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace platevem;

namespace {

// Bad config file contents; reported as a usage error.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ------------------------------------------------------------------ config

// Keys allowed in each section of the config file.
const std::map<std::string, std::set<std::string>> kConfigSchema{
    {"mesh", {"family", "n", "seed", "levels", "coarsest", "lloyd", "amplitude"}},
    {"physics", {"delta", "sigma", "P", "S", "load_amplitude"}},
    {"time", {"dt", "T", "scheme", "dt_policy"}},
    {"output", {"dir"}},
};

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    if (!root.is_object()) throw ConfigError("config " + path + ": top level must be an object");
    for (const auto& [section, body] : root.items()) {
        const auto it = kConfigSchema.find(section);
        if (it == kConfigSchema.end()) throw ConfigError("config: unknown section \"" + section + "\"");
        if (!body.is_object()) throw ConfigError("config: section \"" + section + "\" must be an object");
        for (const auto& [key, value] : body.items())
            if (!it->second.contains(key))
                throw ConfigError("config: unknown key \"" + section + "." + key + "\"");
    }
    return root;
}

// Resolves one setting: command-line flag, then config file, then default.
template <class T>
T pick(const std::optional<T>& flag, const json& config, const char* section, const char* key, T fallback) {
    if (flag) return *flag;
    if (config.contains(section) && config.at(section).contains(key)) {
        const json& v = config.at(section).at(key);
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) throw ConfigError("");
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer()) throw ConfigError("");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw ConfigError("");
            }
            return v.get<T>();
        } catch (const std::exception&) {
            throw ConfigError(std::string("config: \"") + section + "." + key + "\" has the wrong type");
        }
    }
    return fallback;
}

// ---------------------------------------------------------------- manifest

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

class RunManifest {
public:
    RunManifest(std::string command, int argc, char** argv)
        : started_(std::chrono::steady_clock::now()), timestamp_(utc_timestamp()) {
        doc_["command"] = std::move(command);
        doc_["argv"] = std::vector<std::string>(argv, argv + argc);
        doc_["git_describe"] = PLATEVEM_GIT_DESCRIBE;
        doc_["started_at"] = timestamp_;
        doc_["parameters"] = json::object();
        doc_["outputs"] = json::array();
    }

    json& parameters() { return doc_["parameters"]; }
    json& results() { return doc_["results"]; }
    void add_output(const fs::path& p) { doc_["outputs"].push_back(p.filename().string()); }

    void write(const fs::path& dir) {
        doc_["wall_time_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
        std::ofstream out(dir / "run-manifest.json");
        if (!out) throw Error("cannot write " + (dir / "run-manifest.json").string());
        out << doc_.dump(2) << '\n';
    }

private:
    std::chrono::steady_clock::time_point started_;
    std::string timestamp_;
    json doc_;
};

fs::path prepare_dir(const std::string& dir) {
    fs::path p(dir);
    fs::create_directories(p);
    return p;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    return out;
}

json newton_json(const NewtonConfig& c) {
    return {{"abs_tol", c.abs_tol}, {"rel_tol", c.rel_tol}, {"max_iterations", c.max_iterations}};
}

void print_notes(const PhysicalParams& p) {
    for (const auto& note : p.validate()) std::cerr << "note: " << note << '\n';
}

// ---------------------------------------------------------------- commands

struct CommonOptions {
    std::string config_path;
    bool quiet = false;
    json config = json::object();
};

void write_vtk(const PolygonalMesh& mesh, std::ostream& out) {
    out << "# vtk DataFile Version 3.0\nplate mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << std::setprecision(17);
    out << "POINTS " << mesh.num_vertices() << " double\n";
    for (const Point& p : mesh.vertices()) out << p.x() << ' ' << p.y() << " 0\n";
    std::size_t total = 0;
    for (const Cell& c : mesh.cells()) total += c.vertices.size() + 1;
    out << "CELLS " << mesh.num_cells() << ' ' << total << '\n';
    for (const Cell& c : mesh.cells()) {
        out << c.vertices.size();
        for (int v : c.vertices) out << ' ' << v;
        out << '\n';
    }
    out << "CELL_TYPES " << mesh.num_cells() << '\n';
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) out << "7\n";  // VTK_POLYGON
}

struct MeshGenerateArgs {
    std::optional<std::string> family;
    std::optional<int> n;
    std::optional<std::uint64_t> seed;
    std::optional<int> lloyd;
    std::optional<double> amplitude;
    std::string domain = "unit";
    std::string output;
};

int cmd_mesh_generate(const MeshGenerateArgs& a, const CommonOptions& common) {
    const json& cfg = common.config;
    const MeshFamily family = mesh_family_from_string(pick(a.family, cfg, "mesh", "family", std::string("square")));
    const int n = pick(a.n, cfg, "mesh", "n", 8);
    const auto seed = pick<std::uint64_t>(a.seed, cfg, "mesh", "seed", 1);
    const int lloyd = pick(a.lloyd, cfg, "mesh", "lloyd", 10);
    const double amplitude = pick(a.amplitude, cfg, "mesh", "amplitude", 0.2);
    if (n < 1) throw InvalidArgument("--n must be positive");

    Rect bounds{0.0, 0.0, 1.0, 1.0};
    BoundaryTagger tagger = clamped_boundary();
    if (a.domain == "bridge") {
        const double ell = std::numbers::pi / 150.0;
        bounds = Rect{0.0, -ell, std::numbers::pi, ell};
        tagger = bridge_boundary();
    } else if (a.domain != "unit") {
        throw InvalidArgument("--domain must be unit or bridge");
    }

    PolygonalMesh mesh;
    switch (family) {
        case MeshFamily::Square: mesh = generate_square_grid(n, bounds, tagger); break;
        case MeshFamily::Distorted: mesh = generate_distorted_grid(n, bounds, amplitude, seed, tagger); break;
        case MeshFamily::Voronoi: mesh = generate_voronoi(n, bounds, lloyd, seed, tagger); break;
        case MeshFamily::NonConvex: mesh = generate_nonconvex_grid(n, bounds, tagger); break;
        case MeshFamily::RegularPolygon: mesh = generate_regular_polygon_grid(n, bounds, tagger); break;
    }
    write_mesh(mesh, a.output);
    if (!common.quiet)
        std::cout << "wrote " << a.output << ": " << mesh.num_vertices() << " vertices, " << mesh.num_cells()
                  << " cells, h = " << mesh.mesh_size() << '\n';
    return 0;
}

int cmd_mesh_validate(const std::string& path, double gamma, bool strict) {
    std::vector<std::string> warnings;
    PolygonalMesh mesh;
    try {
        mesh = read_mesh(path, &warnings);
    } catch (const ParseError& e) {
        std::cerr << path << ": " << e.what() << '\n';
        return 1;
    } catch (const Error& e) {
        std::cerr << path << ": " << e.what() << '\n';
        return 1;
    }
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    const RegularityReport r = check_regularity(mesh, gamma);
    std::size_t boundary = 0;
    for (const Edge& e : mesh.edges()) boundary += e.on_boundary() ? 1 : 0;
    std::cout << path << ": valid\n"
              << "  vertices " << mesh.num_vertices() << ", cells " << mesh.num_cells() << ", edges "
              << mesh.edges().size() << " (" << boundary << " on the boundary)\n"
              << "  h = " << mesh.mesh_size() << '\n'
              << "  min edge/h_E = " << r.min_edge_ratio << ", min star radius/h_E = " << r.min_star_radius_ratio
              << " -> " << (r.passes ? "regular" : "NOT regular") << " for gamma = " << gamma << '\n';
    return strict && !r.passes ? 1 : 0;
}

int cmd_mesh_convert(const std::string& input, const std::string& output, std::string format) {
    const PolygonalMesh mesh = read_mesh(input);
    if (format.empty()) format = fs::path(output).extension() == ".vtk" ? "vtk" : "json";
    if (format == "json") {
        write_mesh(mesh, output);
    } else if (format == "vtk") {
        std::ofstream out = open_output(output);
        write_vtk(mesh, out);
    } else {
        throw InvalidArgument("--format must be json or vtk");
    }
    return 0;
}

// Options shared by the manufactured-solution commands.
struct Example1Args {
    std::optional<std::string> family;
    std::optional<int> levels;
    std::optional<int> coarsest;
    std::optional<std::string> dt_policy;
    std::optional<double> dt;
    std::optional<double> T;
    std::optional<double> sigma;
    std::optional<double> delta;
    std::optional<double> P;
    std::optional<double> S;
    std::optional<std::string> scheme;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    double condition_dt = 0.1;
    bool no_condition = false;
    bool serial = false;
};

Example1Config resolve_example1(const Example1Args& a, const CommonOptions& common) {
    const json& cfg = common.config;
    Example1Config c;
    c.family = mesh_family_from_string(pick(a.family, cfg, "mesh", "family", std::string("square")));
    const int levels = pick(a.levels, cfg, "mesh", "levels", 4);
    const int coarsest = pick(a.coarsest, cfg, "mesh", "coarsest", 4);
    if (levels < 2) throw InvalidArgument("--levels must be at least 2");
    if (coarsest < 1) throw InvalidArgument("--coarsest must be positive");
    c.levels.clear();
    for (int i = 0, n = coarsest; i < levels; ++i, n *= 2) c.levels.push_back(n);
    c.dt_policy = dt_policy_from_string(pick(a.dt_policy, cfg, "time", "dt_policy", std::string("h2")));
    c.dt = pick(a.dt, cfg, "time", "dt", c.dt);
    c.T = pick(a.T, cfg, "time", "T", c.T);
    c.sigma = pick(a.sigma, cfg, "physics", "sigma", c.sigma);
    c.delta = pick(a.delta, cfg, "physics", "delta", c.delta);
    c.P = pick(a.P, cfg, "physics", "P", c.P);
    c.S = pick(a.S, cfg, "physics", "S", c.S);
    c.scheme = scheme_from_string(pick(a.scheme, cfg, "time", "scheme", std::string("nonlinear")));
    c.seed = pick<std::uint64_t>(a.seed, cfg, "mesh", "seed", c.seed);
    c.estimate_condition = !a.no_condition;
    c.condition_dt = a.condition_dt;
    c.parallel = !a.serial;
    if (!(c.T > 0.0) || !(c.dt > 0.0)) throw InvalidArgument("dt and T must be positive");
    PhysicalParams p;
    p.sigma = c.sigma;
    p.P = c.P;
    p.S = c.S;
    print_notes(p);
    if (!common.quiet) c.progress = [](const std::string& msg) { std::cerr << "  " << msg << '\n'; };
    return c;
}

json example1_json(const Example1Config& c) {
    return {{"family", to_string(c.family)},
            {"levels", c.levels},
            {"dt_policy", c.dt_policy == DtPolicy::H2 ? "h2" : "fixed"},
            {"dt", c.dt},
            {"T", c.T},
            {"sigma", c.sigma},
            {"delta", c.delta},
            {"P", c.P},
            {"S", c.S},
            {"scheme", to_string(c.scheme)},
            {"seed", c.seed},
            {"estimate_condition", c.estimate_condition},
            {"condition_dt", c.condition_dt},
            {"newton", newton_json(c.newton)}};
}

std::string output_dir(const std::optional<std::string>& flag, const CommonOptions& common) {
    return pick(flag, common.config, "output", "dir", std::string("."));
}

void print_convergence(const std::vector<ConvergenceRow>& rows) {
    std::cout << std::setw(10) << "h" << std::setw(8) << "ndof" << std::setw(13) << "err_h2" << std::setw(13)
              << "err_rel" << std::setw(8) << "eoc" << std::setw(7) << "newton" << std::setw(12) << "cond" << '\n';
    for (const auto& r : rows) {
        std::cout << std::setw(10) << std::setprecision(4) << r.h << std::setw(8) << r.ndof << std::setw(13)
                  << std::setprecision(5) << r.err_h2 << std::setw(13) << r.err_rel << std::setw(8)
                  << std::setprecision(3) << r.eoc << std::setw(7) << r.newton_max << std::setw(12)
                  << std::setprecision(4) << r.cond_estimate << '\n';
    }
}

json convergence_json(const std::vector<ConvergenceRow>& rows) {
    json out = json::array();
    for (const auto& r : rows)
        out.push_back({{"h", r.h},
                       {"ndof", r.ndof},
                       {"err_h2", r.err_h2},
                       {"eoc", std::isnan(r.eoc) ? json(nullptr) : json(r.eoc)},
                       {"dt", r.dt},
                       {"steps", r.steps}});
    return out;
}

int cmd_example1(const Example1Args& a, const CommonOptions& common, RunManifest& manifest) {
    const Example1Config c = resolve_example1(a, common);
    manifest.parameters().update(example1_json(c));
    const fs::path dir = prepare_dir(output_dir(a.out, common));
    const auto rows = run_example1(c);
    const fs::path csv = dir / "convergence.csv";
    {
        std::ofstream out = open_output(csv);
        write_convergence_csv(rows, out);
    }
    manifest.add_output(csv);
    manifest.results() = convergence_json(rows);
    manifest.write(dir);
    if (!common.quiet) print_convergence(rows);
    return 0;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw InvalidArgument("not a number: \"" + item + "\"");
        out.push_back(v);
    }
    return out;
}

struct ConvergenceArgs {
    Example1Args base;
    std::string kind = "space";
    std::string families = "square,voronoi";
    int n = 32;
    std::string dts = "0.1,0.05,0.025,0.0125";
    double dt_ref = 1.0 / 640.0;
};

int cmd_convergence(const ConvergenceArgs& a, const CommonOptions& common, RunManifest& manifest) {
    Example1Config c = resolve_example1(a.base, common);
    const fs::path dir = prepare_dir(output_dir(a.base.out, common));
    json params = example1_json(c);
    params["kind"] = a.kind;
    if (a.kind == "space") {
        std::vector<std::string> families;
        std::stringstream ss(a.families);
        for (std::string f; std::getline(ss, f, ',');) families.push_back(f);
        for (const auto& f : families) mesh_family_from_string(f);  // fail before running anything
        params["families"] = families;
        manifest.parameters().update(params);
        for (const auto& f : families) {
            c.family = mesh_family_from_string(f);
            if (!common.quiet) std::cout << "family " << f << '\n';
            const auto rows = run_example1(c);
            const fs::path csv = dir / ("convergence_" + f + ".csv");
            std::ofstream out = open_output(csv);
            write_convergence_csv(rows, out);
            manifest.add_output(csv);
            manifest.results()[f] = convergence_json(rows);
            if (!common.quiet) print_convergence(rows);
        }
    } else if (a.kind == "time") {
        const std::vector<double> dts = parse_list(a.dts);
        params["n"] = a.n;
        params["dts"] = dts;
        params["dt_reference"] = a.dt_ref;
        manifest.parameters().update(params);
        const auto rows = run_temporal_study(c, a.n, dts, a.dt_ref);
        const fs::path csv = dir / "temporal.csv";
        std::ofstream out = open_output(csv);
        write_temporal_csv(rows, out);
        manifest.add_output(csv);
        if (!common.quiet) {
            std::cout << std::setw(12) << "dt" << std::setw(14) << "err_m" << std::setw(8) << "eoc" << '\n';
            for (const auto& r : rows)
                std::cout << std::setw(12) << r.dt << std::setw(14) << r.err_m << std::setw(8) << r.eoc << '\n';
        }
    } else {
        throw InvalidArgument("--kind must be space or time");
    }
    manifest.write(dir);
    return 0;
}

struct Example2Args {
    std::optional<int> n;
    std::optional<double> dt;
    std::optional<double> T;
    std::optional<std::string> scheme;
    std::optional<double> sigma;
    std::optional<double> delta;
    std::optional<double> P;
    std::optional<double> S;
    std::optional<double> amplitude;
    std::optional<std::string> out;
    bool no_damping = false;
    bool trajectory = false;
};

int cmd_example2(const Example2Args& a, const CommonOptions& common, RunManifest& manifest) {
    const json& cfg = common.config;
    Example2Config c;
    c.n = pick(a.n, cfg, "mesh", "n", c.n);
    c.dt = pick(a.dt, cfg, "time", "dt", c.dt);
    c.T = pick(a.T, cfg, "time", "T", c.T);
    c.scheme = scheme_from_string(pick(a.scheme, cfg, "time", "scheme", std::string("nonlinear")));
    c.sigma = pick(a.sigma, cfg, "physics", "sigma", c.sigma);
    c.delta = pick(a.delta, cfg, "physics", "delta", c.delta);
    c.P = pick(a.P, cfg, "physics", "P", c.P);
    c.S = pick(a.S, cfg, "physics", "S", c.S);
    c.load_amplitude = pick(a.amplitude, cfg, "physics", "load_amplitude", c.load_amplitude);
    c.damping = !a.no_damping && c.delta != 0.0;
    if (c.n < 1) throw InvalidArgument("--n must be positive");
    if (!(c.T > 0.0) || !(c.dt > 0.0)) throw InvalidArgument("dt and T must be positive");
    PhysicalParams p;
    p.sigma = c.sigma;
    p.P = c.P;
    p.S = c.S;
    print_notes(p);

    manifest.parameters().update({{"n", c.n},
                             {"dt", c.dt},
                             {"T", c.T},
                             {"scheme", to_string(c.scheme)},
                             {"sigma", c.sigma},
                             {"delta", c.damping ? c.delta : 0.0},
                             {"P", c.P},
                             {"S", c.S},
                             {"load_amplitude", c.load_amplitude},
                             {"newton", newton_json(c.newton)}});
    const fs::path dir = prepare_dir(output_dir(a.out, common));
    const int total = static_cast<int>(std::lround(c.T / c.dt));
    if (!common.quiet)
        c.on_step = [total](const TrajectoryRecord& r) {
            if (r.step % std::max(1, total / 10) == 0)
                std::cerr << "  step " << r.step << "/" << total << "  t = " << r.time << "  E = " << r.energy
                          << '\n';
        };
    const Example2Result res = run_example2(c);
    const auto& rec = res.simulation.records;

    const fs::path csv = dir / "energy.csv";
    {
        std::ofstream out = open_output(csv);
        write_energy_csv(rec, out);
    }
    manifest.add_output(csv);
    if (a.trajectory) {
        const fs::path tr = dir / "trajectory.csv";
        std::ofstream out = open_output(tr);
        write_trajectory_csv(rec, out);
        manifest.add_output(tr);
    }
    const double e1 = rec.front().energy;
    const double eT = rec.back().energy;
    int newton_max = 0;
    for (const auto& r : rec) newton_max = std::max(newton_max, r.newton_iters);
    manifest.results() = {{"ndof", res.system->size()},
                          {"steps", rec.size()},
                          {"energy_first", e1},
                          {"energy_final", eT},
                          {"energy_ratio", eT / e1},
                          {"newton_max", newton_max}};
    manifest.write(dir);
    if (!common.quiet)
        std::cout << "ndof " << res.system->size() << ", steps " << rec.size() << ", E(t1) = " << e1
                  << ", E(T) = " << eT << ", ratio = " << eT / e1 << '\n';
    return 0;
}

struct JacobianArgs {
    std::string problem = "example1";
    std::optional<std::string> family;
    std::optional<int> n;
    std::optional<double> dt;
    std::optional<double> sigma;
    std::optional<double> P;
    std::optional<double> S;
    std::optional<std::string> out;
    std::string coo;
    bool no_condition = false;
};

int cmd_report_jacobian(const JacobianArgs& a, const CommonOptions& common, RunManifest& manifest) {
    const json& cfg = common.config;
    const int n = pick(a.n, cfg, "mesh", "n", 16);
    const double dt = pick(a.dt, cfg, "time", "dt", 0.01);
    if (n < 1) throw InvalidArgument("--n must be positive");
    if (!(dt > 0.0)) throw InvalidArgument("--dt must be positive");

    std::shared_ptr<const GlobalSystem> system;
    PhysicalParams params;
    Eigen::VectorXd eta;
    json record;
    if (a.problem == "example1") {
        const MeshFamily family = mesh_family_from_string(pick(a.family, cfg, "mesh", "family", std::string("square")));
        params.sigma = pick(a.sigma, cfg, "physics", "sigma", 0.3);
        params.P = pick(a.P, cfg, "physics", "P", 1e-3);
        params.S = pick(a.S, cfg, "physics", "S", 1e-5);
        params.delta = PhysicalParams::constant(1.0);
        const PolygonalMesh mesh = make_family_mesh(family, n, Rect{0.0, 0.0, 1.0, 1.0}, clamped_boundary());
        system = std::make_shared<const GlobalSystem>(assemble(mesh, ProblemKind::Clamped, params.sigma, params.delta));
        // State: the interpolant of the manufactured solution at its peak.
        const ManufacturedSolution ms;
        eta = interpolate(
            *system, [&ms](double x, double y) { return ms.u(x, y, 0.5); },
            [&ms](double x, double y) { return ms.grad(x, y, 0.5); });
        record["family"] = to_string(family);
    } else if (a.problem == "example2") {
        params.sigma = pick(a.sigma, cfg, "physics", "sigma", 0.2);
        params.P = pick(a.P, cfg, "physics", "P", 1e-3);
        params.S = pick(a.S, cfg, "physics", "S", 1e-5);
        const double ell = std::numbers::pi / 150.0;
        const PolygonalMesh mesh = generate_square_grid(n, Rect{0.0, -ell, std::numbers::pi, ell}, bridge_boundary());
        params.delta = bridge_damping(mesh.mesh_size(), std::numbers::pi, ell);
        system =
            std::make_shared<const GlobalSystem>(assemble(mesh, ProblemKind::BridgeMixed, params.sigma, params.delta));
        eta = solve_stationary(*system, [](double x, double) { return 50.0 * std::sin(2.0 * x); });
    } else {
        throw InvalidArgument("--problem must be example1 or example2");
    }
    print_notes(params);
    manifest.parameters().update({{"problem", a.problem}, {"n", n},         {"dt", dt},
                             {"sigma", params.sigma}, {"P", params.P}, {"S", params.S}});

    const JacobianReport r = report_jacobian(system, params, eta, dt, !a.no_condition);
    record.update({{"n_free", r.n},
                   {"nnz_j1", r.nnz_j1},
                   {"nnz_bordered", r.nnz_bordered},
                   {"nnz_full", r.nnz_full},
                   {"ratio", r.ratio},
                   {"density_j1", r.density_j1},
                   {"cond_estimate", std::isnan(r.cond_estimate) ? json(nullptr) : json(r.cond_estimate)}});
    const fs::path dir = prepare_dir(output_dir(a.out, common));
    const fs::path file = dir / "jacobian.json";
    {
        std::ofstream out = open_output(file);
        out << record.dump(2) << '\n';
    }
    manifest.add_output(file);
    if (!a.coo.empty()) {
        TimeStepper stepper(system, params, dt);
        write_matrix_coo(stepper.jacobian(eta, axial_energy(*system, eta)).J1, a.coo);
    }
    manifest.results() = record;
    manifest.write(dir);
    if (!common.quiet) std::cout << record.dump(2) << '\n';
    return 0;
}

template <class T>
CLI::Option* opt(CLI::App* app, const std::string& name, std::optional<T>& target, const std::string& help) {
    return app->add_option(name, target, help);
}

void add_example1_options(CLI::App* sub, Example1Args& a) {
    opt(sub, "--mesh,--family", a.family, "mesh family: square, distorted, voronoi, nonconvex, regular");
    opt(sub, "--levels", a.levels, "number of refinement levels (default 4)");
    opt(sub, "--coarsest", a.coarsest, "cells per side on the coarsest level (default 4)");
    opt(sub, "--dt-policy", a.dt_policy, "h2 (dt = h^2) or fixed");
    opt(sub, "--dt", a.dt, "time step for --dt-policy fixed");
    opt(sub, "--T", a.T, "final time");
    opt(sub, "--sigma", a.sigma, "Poisson ratio");
    opt(sub, "--delta", a.delta, "damping coefficient");
    opt(sub, "--P", a.P, "pre-stressing");
    opt(sub, "--S", a.S, "nonlocal stiffness");
    opt(sub, "--scheme", a.scheme, "nonlinear or linearized");
    opt(sub, "--seed", a.seed, "mesh seed");
    opt(sub, "--out", a.out, "output directory");
    sub->add_option("--condition-dt", a.condition_dt, "time step of the Jacobian whose condition is estimated")
        ->capture_default_str();
    sub->add_flag("--no-condition", a.no_condition, "skip the condition estimate");
    sub->add_flag("--serial", a.serial, "run the levels one after another");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Virtual element solver for the nonlocal dynamic plate equation"};
    app.require_subcommand(1);
    CommonOptions common;
    app.add_option("--config", common.config_path, "JSON config file with sections mesh, physics, time, output")
        ->check(CLI::ExistingFile);
    app.add_flag("-q,--quiet", common.quiet, "only print errors");

    CLI::App* mesh = app.add_subcommand("mesh", "generate, validate or convert meshes");
    mesh->require_subcommand(1);
    MeshGenerateArgs gen;
    CLI::App* generate = mesh->add_subcommand("generate", "write a generated mesh as JSON");
    opt(generate, "--family", gen.family, "square, distorted, voronoi, nonconvex, regular");
    opt(generate, "--n", gen.n, "cells per side (number of seeds for voronoi)");
    opt(generate, "--seed", gen.seed, "random seed");
    opt(generate, "--lloyd", gen.lloyd, "Lloyd iterations for voronoi (default 10)");
    opt(generate, "--amplitude", gen.amplitude, "vertex perturbation for distorted (default 0.2)");
    generate->add_option("--domain", gen.domain, "unit (clamped unit square) or bridge")->capture_default_str();
    generate->add_option("-o,--output", gen.output, "output file")->required();

    std::string validate_path;
    double gamma = 0.05;
    bool strict = false;
    CLI::App* validate = mesh->add_subcommand("validate", "check a mesh file");
    validate->add_option("file", validate_path, "mesh JSON")->required();
    validate->add_option("--gamma", gamma, "regularity threshold")->capture_default_str();
    validate->add_flag("--strict", strict, "fail when the regularity check fails");

    std::string convert_in, convert_out, convert_format;
    CLI::App* convert = mesh->add_subcommand("convert", "rewrite a mesh as canonical JSON or legacy VTK");
    convert->add_option("input", convert_in, "mesh JSON")->required();
    convert->add_option("-o,--output", convert_out, "output file")->required();
    convert->add_option("--format", convert_format, "json or vtk (default: from the extension)");

    Example1Args ex1;
    CLI::App* example1 = app.add_subcommand("example1", "spatial convergence for the manufactured clamped plate");
    add_example1_options(example1, ex1);

    ConvergenceArgs conv;
    CLI::App* convergence = app.add_subcommand("convergence", "convergence studies over mesh families or time steps");
    add_example1_options(convergence, conv.base);
    convergence->add_option("--kind", conv.kind, "space or time")->capture_default_str();
    convergence->add_option("--families", conv.families, "comma separated families (space)")->capture_default_str();
    convergence->add_option("--n", conv.n, "cells per side (time)")->capture_default_str();
    convergence->add_option("--dts", conv.dts, "comma separated time steps (time)")->capture_default_str();
    convergence->add_option("--dt-ref", conv.dt_ref, "reference time step (time)")->capture_default_str();

    Example2Args ex2;
    CLI::App* example2 = app.add_subcommand("example2", "energy decay of the damped bridge");
    opt(example2, "--n", ex2.n, "cells per side (default 16)");
    opt(example2, "--dt", ex2.dt, "time step (default 0.001)");
    opt(example2, "--T", ex2.T, "final time (default 5)");
    opt(example2, "--scheme", ex2.scheme, "nonlinear or linearized");
    opt(example2, "--sigma", ex2.sigma, "Poisson ratio (default 0.2)");
    opt(example2, "--delta", ex2.delta, "damping on the boundary strip (default 1)");
    opt(example2, "--P", ex2.P, "pre-stressing");
    opt(example2, "--S", ex2.S, "nonlocal stiffness");
    opt(example2, "--amplitude", ex2.amplitude, "amplitude of the initial load 50 sin(2x)");
    opt(example2, "--out", ex2.out, "output directory");
    example2->add_flag("--no-damping", ex2.no_damping, "run without damping");
    example2->add_flag("--trajectory", ex2.trajectory, "also write trajectory.csv");

    JacobianArgs jac;
    CLI::App* report = app.add_subcommand("report-jacobian", "sparsity and conditioning of the Newton matrix");
    report->add_option("--problem", jac.problem, "example1 or example2")->capture_default_str();
    opt(report, "--family", jac.family, "mesh family (example1)");
    opt(report, "--n", jac.n, "cells per side (default 16)");
    opt(report, "--dt", jac.dt, "time step (default 0.01)");
    opt(report, "--sigma", jac.sigma, "Poisson ratio");
    opt(report, "--P", jac.P, "pre-stressing");
    opt(report, "--S", jac.S, "nonlocal stiffness");
    opt(report, "--out", jac.out, "output directory");
    report->add_option("--coo", jac.coo, "also write J1 as a COO text file");
    report->add_flag("--no-condition", jac.no_condition, "skip the condition estimate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (!common.config_path.empty()) common.config = load_config(common.config_path);
        if (*mesh) {
            if (*generate) return cmd_mesh_generate(gen, common);
            if (*validate) return cmd_mesh_validate(validate_path, gamma, strict);
            return cmd_mesh_convert(convert_in, convert_out, convert_format);
        }
        const std::string name = app.get_subcommands().front()->get_name();
        RunManifest manifest(name, argc, argv);
        if (!common.config_path.empty()) manifest.parameters()["config_file"] = common.config_path;
        if (*example1) return cmd_example1(ex1, common, manifest);
        if (*convergence) return cmd_convergence(conv, common, manifest);
        if (*example2) return cmd_example2(ex2, common, manifest);
        return cmd_report_jacobian(jac, common, manifest);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const StepFailure& e) {
        std::cerr << "numerical failure at step " << e.step() << " (residual " << e.residual_norm()
                  << "): " << e.what() << '\n';
        return 1;
    } catch (const ElementKernelError& e) {
        std::cerr << "numerical failure in cell " << e.cell() << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
