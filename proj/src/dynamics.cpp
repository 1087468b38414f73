#include "platevem/dynamics.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "platevem/csv.hpp"
#include "platevem/errors.hpp"

namespace platevem {

std::vector<std::string> PhysicalParams::validate() const {
    if (!(sigma > 0.0 && sigma < 1.0)) throw InvalidArgument("sigma must lie in (0, 1)");
    if (!(S >= 0.0)) throw InvalidArgument("S must be non-negative");
    if (!std::isfinite(P)) throw InvalidArgument("P must be finite");
    std::vector<std::string> notes;
    if (P <= 0.0) notes.push_back("P <= 0 lies outside the pre-stressing range covered by the existence theory");
    if (S == 0.0) notes.push_back("S = 0: the nonlocal term vanishes and uniqueness bounds do not apply");
    if (P > 0.0 || S > 0.0)
        notes.push_back("the admissible windows for P and S depend on the first buckling eigenvalue, "
                        "which is not computed; stability is not guaranteed a priori");
    return notes;
}

void NewtonConfig::validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw InvalidArgument("Newton tolerances must be positive");
    if (max_iterations < 1) throw InvalidArgument("Newton needs max_iterations >= 1");
}

Scheme scheme_from_string(const std::string& name) {
    if (name == "nonlinear" || name == "implicit") return Scheme::Nonlinear;
    if (name == "linearized" || name == "linear") return Scheme::Linearized;
    throw InvalidArgument("unknown scheme \"" + name + "\"");
}

std::string to_string(Scheme scheme) {
    return scheme == Scheme::Nonlinear ? "nonlinear" : "linearized";
}

void TimeState::advance(Eigen::VectorXd next, double next_xi) {
    eta_nm2 = std::move(eta_nm1);
    eta_nm1 = std::move(eta);
    eta = std::move(next);
    xi = next_xi;
    ++n;
}

double Residual::norm() const {
    return std::sqrt(eta.squaredNorm() + xi * xi);
}

double axial_energy(const GlobalSystem& system, const Eigen::VectorXd& eta) {
    return eta.dot(system.Ax * eta);
}

TimeStepper::TimeStepper(std::shared_ptr<const GlobalSystem> system, PhysicalParams params,
                         double dt, NewtonConfig config)
    : system_(std::move(system)), params_(std::move(params)), dt_(dt), config_(config) {
    if (!system_) throw InvalidArgument("time stepper needs a system");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("time step must be positive");
    params_.validate();
    config_.validate();
    lhs_mass_ = system_->M + (0.5 * dt_) * system_->Mdelta;
    base_ = lhs_mass_ + (dt_ * dt_) * system_->A + 0.0 * system_->Ax;
}

Eigen::VectorXd TimeStepper::load(double t) const {
    if (!params_.load) return Eigen::VectorXd::Zero(system_->size());
    return assemble_load(*system_, params_.load, t);
}

Residual TimeStepper::residual(const TimeState& state, const Eigen::VectorXd& eta, double xi,
                               const Eigen::VectorXd& load) const {
    const GlobalSystem& s = *system_;
    const auto n = s.size();
    if (eta.size() != n || state.eta.size() != n || state.eta_nm1.size() != n || load.size() != n)
        throw InvalidArgument("residual: vector length does not match the system");
    const double dt2 = dt_ * dt_;
    const Eigen::VectorXd ax_eta = s.Ax * eta;
    Residual r;
    r.eta = lhs_mass_ * eta + dt2 * (s.A * eta) + dt2 * (params_.S * xi - params_.P) * ax_eta - dt2 * load -
            2.0 * (s.M * state.eta) + s.M * state.eta_nm1 - (0.5 * dt_) * (s.Mdelta * state.eta_nm1);
    r.xi = eta.dot(ax_eta) - xi;
    return r;
}

Residual TimeStepper::residual(const TimeState& state, const Eigen::VectorXd& eta, double xi) const {
    return residual(state, eta, xi, load((state.n + 1) * dt_));
}

BorderedJacobian TimeStepper::jacobian(const Eigen::VectorXd& eta, double xi) const {
    const double dt2 = dt_ * dt_;
    BorderedJacobian J;
    J.J1 = base_ + (dt2 * (params_.S * xi - params_.P)) * system_->Ax;
    const Eigen::VectorXd ax_eta = system_->Ax * eta;
    J.J2 = (dt2 * params_.S) * ax_eta;
    J.J3 = 2.0 * ax_eta;
    J.J4 = -1.0;
    return J;
}

void TimeStepper::factor(const SparseMatrix& J1) {
    if (!analyzed_) {
        ldlt_.analyzePattern(J1);
        analyzed_ = true;
    }
    ldlt_.factorize(J1);
    if (ldlt_.info() != Eigen::Success) throw SolverError("factorization of J1 failed");
    const auto& d = ldlt_.vectorD();
    if (d.size() > 0) {
        const double dmax = d.cwiseAbs().maxCoeff();
        if (!(d.cwiseAbs().minCoeff() > 1e-14 * dmax)) throw SolverError("J1 is numerically singular");
    }
}

Eigen::VectorXd TimeStepper::solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd x = ldlt_.solve(b);
    if (ldlt_.info() != Eigen::Success || !x.allFinite()) throw SolverError("sparse solve failed");
    return x;
}

NewtonResult TimeStepper::newton_step(const TimeState& state) {
    const int step = state.n + 1;
    const Eigen::VectorXd F = load(step * dt_);
    NewtonResult out;
    out.eta = state.eta;
    out.xi = axial_energy(*system_, out.eta);
    Residual r = residual(state, out.eta, out.xi, F);
    double rn = r.norm();
    out.history.push_back(rn);
    const double tol = config_.abs_tol + config_.rel_tol * rn;
    while (rn > tol) {
        if (out.iterations == config_.max_iterations)
            throw StepFailure("Newton did not converge in " + std::to_string(config_.max_iterations) +
                                  " iterations",
                              step, rn);
        const BorderedJacobian J = jacobian(out.eta, out.xi);
        try {
            factor(J.J1);
            const Eigen::VectorXd w1 = solve(-r.eta);
            const Eigen::VectorXd w2 = solve(J.J2);
            const double schur = J.J4 - J.J3.dot(w2);
            if (!(std::abs(schur) > 0.0)) throw SolverError("bordered Schur complement vanished");
            const double dxi = (-r.xi - J.J3.dot(w1)) / schur;
            out.eta += w1 - dxi * w2;
        } catch (const SolverError& e) {
            throw StepFailure(e.what(), step, rn);
        }
        // The scalar equation is quadratic in eta only; resolving it exactly
        // keeps xi consistent and makes each iterate the full-Jacobian Newton
        // iterate.
        out.xi = axial_energy(*system_, out.eta);
        r = residual(state, out.eta, out.xi, F);
        rn = r.norm();
        ++out.iterations;
        out.history.push_back(rn);
        if (!std::isfinite(rn)) throw StepFailure("residual is not finite", step, rn);
    }
    out.residual_norm = rn;
    return out;
}

Eigen::VectorXd TimeStepper::linearized_step(const TimeState& state) {
    const GlobalSystem& s = *system_;
    const int step = state.n + 1;
    const double dt2 = dt_ * dt_;
    const double C = params_.S * axial_energy(s, state.eta_nm1) - params_.P;
    const SparseMatrix lhs = base_ + (dt2 * C) * s.Ax;
    const Eigen::VectorXd rhs = dt2 * load(step * dt_) + 2.0 * (s.M * state.eta) - s.M * state.eta_nm1 +
                                (0.5 * dt_) * (s.Mdelta * state.eta_nm1);
    try {
        factor(lhs);
        return solve(rhs);
    } catch (const SolverError& e) {
        throw StepFailure(e.what(), step, std::numeric_limits<double>::quiet_NaN());
    }
}

double TimeStepper::condition_estimate(const Eigen::VectorXd& eta, double xi) {
    const BorderedJacobian J = jacobian(eta, xi);
    factor(J.J1);
    const Eigen::Index n = J.J1.rows();
    auto bordered_solve = [this, &J, n](const Eigen::VectorXd& b, const Eigen::VectorXd& col,
                                        const Eigen::VectorXd& row) {
        const Eigen::VectorXd w1 = solve(b.head(n));
        const Eigen::VectorXd w2 = solve(col);
        const double schur = J.J4 - row.dot(w2);
        Eigen::VectorXd x(n + 1);
        x(n) = (b(n) - row.dot(w1)) / schur;
        x.head(n) = w1 - x(n) * w2;
        return x;
    };
    OperatorPair op;
    op.size = n + 1;
    op.apply = [&J, n](const Eigen::VectorXd& x) {
        Eigen::VectorXd y(n + 1);
        y.head(n) = J.J1 * x.head(n) + J.J2 * x(n);
        y(n) = J.J3.dot(x.head(n)) + J.J4 * x(n);
        return y;
    };
    op.apply_transpose = [&J, n](const Eigen::VectorXd& x) {
        Eigen::VectorXd y(n + 1);
        y.head(n) = J.J1.transpose() * x.head(n) + J.J3 * x(n);
        y(n) = J.J2.dot(x.head(n)) + J.J4 * x(n);
        return y;
    };
    op.solve = [&](const Eigen::VectorXd& b) { return bordered_solve(b, J.J2, J.J3); };
    op.solve_transpose = [&](const Eigen::VectorXd& b) { return bordered_solve(b, J.J3, J.J2); };
    return estimate_condition(op);
}

double compute_energy(const GlobalSystem& system, const PhysicalParams& params,
                      const Eigen::VectorXd& eta_n, const Eigen::VectorXd& eta_nm1, double dt) {
    const Eigen::VectorXd v = (eta_n - eta_nm1) / dt;
    const double xi = axial_energy(system, eta_n);
    return 0.5 * v.dot(system.M * v) + 0.5 * eta_n.dot(system.A * eta_n) - 0.5 * params.P * xi +
           0.25 * params.S * xi * xi;
}

Eigen::VectorXd solve_stationary(const GlobalSystem& system, const SpaceFunction& g0) {
    const Eigen::VectorXd F =
        assemble_load(system, [&g0](double x, double y, double) { return g0(x, y); }, 0.0);
    if (F.size() == 0) return F;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(system.A);
    if (ldlt.info() != Eigen::Success) throw SolverError("stiffness factorization failed");
    const auto& d = ldlt.vectorD();
    if (!(d.minCoeff() > 1e-13 * d.maxCoeff()))
        throw SolverError("stiffness matrix is singular: boundary conditions do not fix rigid motions");
    Eigen::VectorXd eta = ldlt.solve(F);
    if (!eta.allFinite()) throw SolverError("stationary solve produced non-finite values");
    return eta;
}

SimulationResult run_simulation(std::shared_ptr<const GlobalSystem> system, const PhysicalParams& params,
                                const Eigen::VectorXd& eta0, const Eigen::VectorXd& eta1, double dt,
                                double T, const SimulationOptions& options) {
    if (!(dt > 0.0) || !(T > 0.0)) throw InvalidArgument("dt and T must be positive");
    const double steps_real = T / dt;
    const int N = static_cast<int>(std::lround(steps_real));
    if (std::abs(N - steps_real) > 1e-8 * steps_real) throw InvalidArgument("T must be a multiple of dt");
    if (N < 2) throw InvalidArgument("at least two time steps are required");
    if (eta0.size() != system->size() || eta1.size() != system->size())
        throw InvalidArgument("initial vectors do not match the system");

    TimeStepper stepper(system, params, dt, options.newton);
    SimulationResult result;
    TimeState& state = result.final_state;
    state.dt = dt;
    state.eta_nm2 = eta0;
    state.eta_nm1 = eta0;
    state.eta = eta1;
    state.xi = axial_energy(*system, eta1);
    state.n = 1;
    if (options.keep_states) {
        result.states.push_back(eta0);
        result.states.push_back(eta1);
    }
    auto record = [&](int iters, double res) {
        TrajectoryRecord rec{state.n, state.time(), iters, state.xi,
                             compute_energy(*system, params, state.eta, state.eta_nm1, dt), res};
        result.records.push_back(rec);
        if (options.on_step) options.on_step(state, rec);
    };
    record(0, 0.0);
    for (int k = 2; k <= N; ++k) {
        if (options.scheme == Scheme::Nonlinear) {
            NewtonResult nr = stepper.newton_step(state);
            state.advance(std::move(nr.eta), nr.xi);
            record(nr.iterations, nr.residual_norm);
        } else {
            Eigen::VectorXd next = stepper.linearized_step(state);
            const double xi = axial_energy(*system, next);
            // Defect of the linearized solution in the fully implicit equations.
            const double defect = stepper.residual(state, next, xi).norm();
            state.advance(std::move(next), xi);
            record(0, defect);
        }
        if (options.keep_states) result.states.push_back(state.eta);
    }
    return result;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> initial_values(const GlobalSystem& system,
                                                           const SpaceFunction& u0,
                                                           const GradientFunction& grad_u0,
                                                           const SpaceFunction& w0,
                                                           const GradientFunction& grad_w0, double dt) {
    Eigen::VectorXd U0 = interpolate(system, u0, grad_u0);
    Eigen::VectorXd U1 = U0 + dt * interpolate(system, w0, grad_w0);
    return {std::move(U0), std::move(U1)};
}

void write_trajectory_csv(const std::vector<TrajectoryRecord>& records, std::ostream& out) {
    CsvWriter w(out, {"step", "time", "newton_iters", "xi", "energy", "residual_norm"});
    for (const auto& r : records)
        w.row({static_cast<long long>(r.step), r.time, static_cast<long long>(r.newton_iters), r.xi, r.energy,
               r.residual_norm});
}

}  // namespace platevem
