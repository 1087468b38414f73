#include "platevem/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>

#include "platevem/csv.hpp"
#include "platevem/errors.hpp"

namespace platevem {

namespace {

constexpr double kPi = std::numbers::pi;

double X0(double s) { return (s - s * s) * (s - s * s); }
double X1(double s) { return 2.0 * (s - s * s) * (1.0 - 2.0 * s); }
double X2(double s) { return 2.0 - 12.0 * s + 12.0 * s * s; }
constexpr double X4 = 24.0;

}  // namespace

double ManufacturedSolution::u(double x, double y, double t) const {
    return std::sin(kPi * t) * X0(x) * X0(y);
}

double ManufacturedSolution::u_t(double x, double y, double t) const {
    return kPi * std::cos(kPi * t) * X0(x) * X0(y);
}

double ManufacturedSolution::u_tt(double x, double y, double t) const {
    return -kPi * kPi * std::sin(kPi * t) * X0(x) * X0(y);
}

Eigen::Vector2d ManufacturedSolution::grad(double x, double y, double t) const {
    const double s = std::sin(kPi * t);
    return {s * X1(x) * X0(y), s * X0(x) * X1(y)};
}

Eigen::Vector2d ManufacturedSolution::grad_t(double x, double y, double t) const {
    const double c = kPi * std::cos(kPi * t);
    return {c * X1(x) * X0(y), c * X0(x) * X1(y)};
}

Eigen::Vector3d ManufacturedSolution::hessian(double x, double y, double t) const {
    const double s = std::sin(kPi * t);
    return {s * X2(x) * X0(y), s * X1(x) * X1(y), s * X0(x) * X2(y)};
}

double ManufacturedSolution::bilaplacian(double x, double y, double t) const {
    return std::sin(kPi * t) * (X4 * X0(y) + 2.0 * X2(x) * X2(y) + X0(x) * X4);
}

double ManufacturedSolution::nonlocal_integral(double t) const {
    const double s = std::sin(kPi * t);
    return s * s * kDxSquaredIntegral;
}

double ManufacturedSolution::forcing(double x, double y, double t) const {
    return u_tt(x, y, t) + delta * u_t(x, y, t) + bilaplacian(x, y, t) +
           (P - S * nonlocal_integral(t)) * hessian(x, y, t)(0);
}

double error_h2(const GlobalSystem& system, const HessianFunction& exact_hessian, const Eigen::VectorXd& eta) {
    if (eta.size() != system.size()) throw InvalidArgument("error_h2: vector length does not match the system");
    double sum = 0.0;
    for (std::size_t c = 0; c < system.elements.size(); ++c) {
        const ElementData& el = system.elements[c];
        const Eigen::VectorXd coef = el.proj.pi_delta * local_dofs(system, static_cast<int>(c), eta);
        const double h2 = el.geom.diameter * el.geom.diameter;
        const Eigen::Vector3d ph(2.0 * coef(3) / h2, coef(4) / h2, 2.0 * coef(5) / h2);
        // Exact Hessians are not polynomial in general, so use a richer rule
        // than the one for the discrete forms.
        const QuadratureRule rule = polygon_quadrature(el.geom.vertices, 12);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const Point& x = rule.points[q];
            sum += rule.weights[q] * (exact_hessian(x.x(), x.y()) - ph).squaredNorm();
        }
    }
    return std::sqrt(sum);
}

double error_rel(const GlobalSystem& system, const Eigen::VectorXd& exact_dofs, const Eigen::VectorXd& eta) {
    const double denom = exact_dofs.dot(system.A * exact_dofs);
    if (!(denom > 0.0)) throw EvaluationError("relative error undefined: A_h(u, u) = 0");
    const Eigen::VectorXd e = exact_dofs - eta;
    return e.dot(system.A * e) / denom;
}

DtPolicy dt_policy_from_string(const std::string& name) {
    if (name == "h2") return DtPolicy::H2;
    if (name == "fixed") return DtPolicy::Fixed;
    throw InvalidArgument("unknown time step policy \"" + name + "\"");
}

double fit_time_step(double T, double target) {
    if (!(T > 0.0) || !(target > 0.0)) throw InvalidArgument("T and the time step must be positive");
    const double N = std::max(2.0, std::ceil(T / target - 1e-9));
    return T / N;
}

ConvergenceRow run_example1_level(const Example1Config& config, int n, Eigen::VectorXd* final_eta) {
    const ManufacturedSolution ms{config.delta, config.P, config.S};
    const PolygonalMesh mesh = make_family_mesh(config.family, n, Rect{0.0, 0.0, 1.0, 1.0}, clamped_boundary(),
                                                config.seed);
    auto system = std::make_shared<const GlobalSystem>(
        assemble(mesh, ProblemKind::Clamped, config.sigma, PhysicalParams::constant(config.delta)));

    ConvergenceRow row;
    row.h = mesh.mesh_size();
    row.ndof = system->size();
    row.dt = fit_time_step(config.T, config.dt_policy == DtPolicy::H2 ? row.h * row.h : config.dt);
    row.steps = static_cast<int>(std::lround(config.T / row.dt));

    PhysicalParams params;
    params.sigma = config.sigma;
    params.P = config.P;
    params.S = config.S;
    params.delta = PhysicalParams::constant(config.delta);
    params.load = [ms](double x, double y, double t) { return ms.forcing(x, y, t); };

    const auto [U0, U1] = initial_values(
        *system, [](double, double) { return 0.0; }, [](double, double) { return Eigen::Vector2d::Zero(); },
        [&ms](double x, double y) { return ms.u_t(x, y, 0.0); },
        [&ms](double x, double y) { return ms.grad_t(x, y, 0.0); }, row.dt);

    SimulationOptions opts;
    opts.scheme = config.scheme;
    opts.newton = config.newton;
    const SimulationResult sim = run_simulation(system, params, U0, U1, row.dt, config.T, opts);
    const TimeState& last = sim.final_state;
    const double T = last.time();

    row.err_h2 = error_h2(*system, [&ms, T](double x, double y) { return ms.hessian(x, y, T); }, last.eta);
    const Eigen::VectorXd exact = interpolate(
        *system, [&ms, T](double x, double y) { return ms.u(x, y, T); },
        [&ms, T](double x, double y) { return ms.grad(x, y, T); });
    row.err_rel = error_rel(*system, exact, last.eta);
    for (const auto& r : sim.records) row.newton_max = std::max(row.newton_max, r.newton_iters);
    if (config.estimate_condition) {
        TimeStepper stepper(system, params, config.condition_dt > 0.0 ? config.condition_dt : row.dt);
        row.cond_estimate = stepper.condition_estimate(last.eta, axial_energy(*system, last.eta));
    }
    if (final_eta) *final_eta = last.eta;
    return row;
}

std::vector<ConvergenceRow> run_example1(const Example1Config& config) {
    if (config.levels.size() < 2) throw InvalidArgument("a convergence study needs at least two levels");
    std::mutex progress_mutex;
    Example1Config c = config;
    if (config.progress)
        c.progress = [&](const std::string& msg) {
            std::lock_guard lock(progress_mutex);
            config.progress(msg);
        };
    auto run_level = [&c](int n) {
        if (c.progress) c.progress("level n = " + std::to_string(n));
        return run_example1_level(c, n);
    };
    std::vector<ConvergenceRow> rows;
    if (config.parallel) {
        std::vector<std::future<ConvergenceRow>> jobs;
        for (int n : config.levels) jobs.push_back(std::async(std::launch::async, run_level, n));
        for (auto& j : jobs) rows.push_back(j.get());
    } else {
        for (int n : config.levels) rows.push_back(run_level(n));
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const ConvergenceRow& prev = rows[i - 1];
        ConvergenceRow& row = rows[i];
        if (!(row.h < prev.h)) throw InvalidArgument("refinement levels must decrease the mesh size");
        row.eoc = std::log(prev.err_h2 / row.err_h2) / std::log(prev.h / row.h);
    }
    return rows;
}

void write_convergence_csv(const std::vector<ConvergenceRow>& rows, std::ostream& out) {
    CsvWriter w(out, {"h", "ndof", "err_h2", "err_rel", "eoc", "newton_max", "cond_estimate"});
    for (const auto& r : rows) {
        const CsvWriter::Field eoc = std::isnan(r.eoc) ? CsvWriter::Field{std::string{}} : CsvWriter::Field{r.eoc};
        const CsvWriter::Field cond =
            std::isnan(r.cond_estimate) ? CsvWriter::Field{std::string{}} : CsvWriter::Field{r.cond_estimate};
        w.row({r.h, static_cast<long long>(r.ndof), r.err_h2, r.err_rel, eoc, static_cast<long long>(r.newton_max),
               cond});
    }
}

std::vector<TemporalRow> run_temporal_study(const Example1Config& config, int n, const std::vector<double>& dts,
                                            double dt_reference) {
    if (dts.empty()) throw InvalidArgument("temporal study needs at least one time step");
    std::mutex progress_mutex;
    auto solve_with = [&](double dt) {
        Example1Config c = config;
        c.dt_policy = DtPolicy::Fixed;
        c.estimate_condition = false;
        c.dt = dt;
        if (config.progress) {
            std::lock_guard lock(progress_mutex);
            config.progress("dt = " + std::to_string(dt));
        }
        c.progress = nullptr;
        Eigen::VectorXd eta;
        const ConvergenceRow r = run_example1_level(c, n, &eta);
        if (std::abs(r.dt - dt) > 1e-12 * dt) throw InvalidArgument("T must be a multiple of every time step");
        return eta;
    };
    std::vector<double> all{dt_reference};
    all.insert(all.end(), dts.begin(), dts.end());
    std::vector<Eigen::VectorXd> etas;
    if (config.parallel) {
        std::vector<std::future<Eigen::VectorXd>> jobs;
        for (double dt : all) jobs.push_back(std::async(std::launch::async, solve_with, dt));
        for (auto& j : jobs) etas.push_back(j.get());
    } else {
        for (double dt : all) etas.push_back(solve_with(dt));
    }

    const PolygonalMesh mesh = make_family_mesh(config.family, n, Rect{0.0, 0.0, 1.0, 1.0}, clamped_boundary(),
                                                config.seed);
    const GlobalSystem system =
        assemble(mesh, ProblemKind::Clamped, config.sigma, PhysicalParams::constant(config.delta));
    std::vector<TemporalRow> rows;
    for (std::size_t i = 0; i < dts.size(); ++i) {
        const Eigen::VectorXd d = etas[i + 1] - etas[0];
        TemporalRow row{dts[i], std::sqrt(d.dot(system.M * d))};
        if (!rows.empty()) row.eoc = std::log(rows.back().err_m / row.err_m) / std::log(rows.back().dt / row.dt);
        rows.push_back(row);
    }
    return rows;
}

void write_temporal_csv(const std::vector<TemporalRow>& rows, std::ostream& out) {
    CsvWriter w(out, {"dt", "err_m", "eoc"});
    for (const auto& r : rows) {
        const CsvWriter::Field eoc = std::isnan(r.eoc) ? CsvWriter::Field{std::string{}} : CsvWriter::Field{r.eoc};
        w.row({r.dt, r.err_m, eoc});
    }
}

SpaceFunction bridge_damping(double h, double length, double half_width) {
    return [=](double x, double y) {
        const bool ends = x < 10.0 * h || x > length - 10.0 * h;
        const bool sides = std::abs(y) > half_width - 5.0 * h;
        return ends || sides ? 1.0 : 0.0;
    };
}

Example2Result run_example2(const Example2Config& config) {
    const double ell = kPi / 150.0;
    const Rect bounds{0.0, -ell, kPi, ell};
    const PolygonalMesh mesh = generate_square_grid(config.n, bounds, bridge_boundary());
    const double h = mesh.mesh_size();

    Example2Result out;
    out.params.sigma = config.sigma;
    out.params.P = config.P;
    out.params.S = config.S;
    if (config.damping) {
        const SpaceFunction strip = bridge_damping(h, kPi, ell);
        const double value = config.delta;
        out.params.delta = [strip, value](double x, double y) { return value * strip(x, y); };
    } else {
        out.params.delta = PhysicalParams::constant(0.0);
    }
    out.system = std::make_shared<const GlobalSystem>(
        assemble(mesh, ProblemKind::BridgeMixed, config.sigma, out.params.delta));

    const double amp = config.load_amplitude;
    out.initial = solve_stationary(*out.system, [amp](double x, double) { return amp * std::sin(2.0 * x); });

    SimulationOptions opts;
    opts.scheme = config.scheme;
    opts.newton = config.newton;
    if (config.on_step) opts.on_step = [&config](const TimeState&, const TrajectoryRecord& r) { config.on_step(r); };
    out.simulation = run_simulation(out.system, out.params, out.initial, out.initial, config.dt, config.T, opts);
    return out;
}

void write_energy_csv(const std::vector<TrajectoryRecord>& records, std::ostream& out) {
    CsvWriter w(out, {"step", "time", "energy", "xi", "newton_iters"});
    for (const auto& r : records)
        w.row({static_cast<long long>(r.step), r.time, r.energy, r.xi, static_cast<long long>(r.newton_iters)});
}

JacobianReport jacobian_structure(const SparseMatrix& J1, const Eigen::VectorXd& J2, const Eigen::VectorXd& J3) {
    JacobianReport rep;
    rep.n = static_cast<int>(J1.rows());
    std::vector<char> in2(static_cast<std::size_t>(J2.size())), in3(static_cast<std::size_t>(J3.size()));
    long long n2 = 0, n3 = 0;
    for (Eigen::Index i = 0; i < J2.size(); ++i) n2 += (in2[static_cast<std::size_t>(i)] = J2(i) != 0.0);
    for (Eigen::Index i = 0; i < J3.size(); ++i) n3 += (in3[static_cast<std::size_t>(i)] = J3(i) != 0.0);
    long long overlap = 0;
    for (Eigen::Index j = 0; j < J1.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(J1, j); it; ++it) {
            if (it.value() == 0.0) continue;
            ++rep.nnz_j1;
            if (in2[static_cast<std::size_t>(it.row())] && in3[static_cast<std::size_t>(it.col())]) ++overlap;
        }
    rep.nnz_bordered = rep.nnz_j1 + n2 + n3 + 1;
    rep.nnz_full = rep.nnz_j1 + n2 * n3 - overlap;
    rep.ratio = rep.nnz_full > 0 ? static_cast<double>(rep.nnz_bordered) / static_cast<double>(rep.nnz_full) : 0.0;
    rep.density_j1 = rep.n > 0 ? static_cast<double>(rep.nnz_j1) / (static_cast<double>(rep.n) * rep.n) : 0.0;
    return rep;
}

JacobianReport report_jacobian(std::shared_ptr<const GlobalSystem> system, const PhysicalParams& params,
                               const Eigen::VectorXd& eta, double dt, bool estimate_condition) {
    TimeStepper stepper(system, params, dt);
    const double xi = axial_energy(*system, eta);
    const BorderedJacobian J = stepper.jacobian(eta, xi);
    JacobianReport rep = jacobian_structure(J.J1, J.J2, J.J3);
    if (estimate_condition) rep.cond_estimate = stepper.condition_estimate(eta, xi);
    return rep;
}

}  // namespace platevem
