#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "platevem/assembly.hpp"
#include "platevem/dynamics.hpp"
#include "platevem/mesh.hpp"

namespace platevem {

/// u = sin(pi t) X(x) X(y) with X(s) = (s - s^2)^2 on the unit square, and
/// the forcing that makes it solve the damped nonlocal plate equation.
struct ManufacturedSolution {
    double delta = 1.0;
    double P = 1e-3;
    double S = 1e-5;

    /// Integral of (D_x u)^2 over the unit square divided by sin^2(pi t).
    static constexpr double kDxSquaredIntegral = (2.0 / 105.0) * (1.0 / 630.0);

    double u(double x, double y, double t) const;
    double u_t(double x, double y, double t) const;
    double u_tt(double x, double y, double t) const;
    Eigen::Vector2d grad(double x, double y, double t) const;
    Eigen::Vector2d grad_t(double x, double y, double t) const;
    /// (u_xx, u_xy, u_yy)
    Eigen::Vector3d hessian(double x, double y, double t) const;
    double bilaplacian(double x, double y, double t) const;
    double nonlocal_integral(double t) const;
    double forcing(double x, double y, double t) const;
};

using HessianFunction = std::function<Eigen::Vector3d(double x, double y)>;

/// (sum_E |u - Pi^{k,Delta} U|_{2,E}^2)^{1/2} with the seminorm summing the
/// squares of D_xx, D_xy and D_yy once each.
double error_h2(const GlobalSystem& system, const HessianFunction& exact_hessian, const Eigen::VectorXd& eta);

/// A_h(u - U, u - U) / A_h(u, u) with u given by its interpolant.
double error_rel(const GlobalSystem& system, const Eigen::VectorXd& exact_dofs, const Eigen::VectorXd& eta);

enum class DtPolicy { H2, Fixed };
DtPolicy dt_policy_from_string(const std::string& name);

struct Example1Config {
    MeshFamily family = MeshFamily::Square;
    std::vector<int> levels{4, 8, 16, 32};
    DtPolicy dt_policy = DtPolicy::H2;
    double dt = 0.01;  // used by DtPolicy::Fixed
    double T = 0.5;
    double sigma = 0.3;
    double delta = 1.0;
    double P = 1e-3;
    double S = 1e-5;
    Scheme scheme = Scheme::Nonlinear;
    NewtonConfig newton;
    std::uint64_t seed = 1;
    bool estimate_condition = true;
    /// Time step of the Jacobian whose condition is estimated; <= 0 uses the
    /// run's own time step.
    double condition_dt = 0.0;
    /// Levels run concurrently; `progress` is then called under a lock.
    bool parallel = true;
    std::function<void(const std::string&)> progress;
};

struct ConvergenceRow {
    double h = 0.0;
    int ndof = 0;
    double err_h2 = 0.0;
    double err_rel = 0.0;
    double eoc = std::numeric_limits<double>::quiet_NaN();
    int newton_max = 0;
    double cond_estimate = std::numeric_limits<double>::quiet_NaN();
    double dt = 0.0;
    int steps = 0;
};

/// Time step for a run of length T: the largest T / N not above target.
double fit_time_step(double T, double target);

/// Runs one refinement level of the manufactured clamped plate.
ConvergenceRow run_example1_level(const Example1Config& config, int n, Eigen::VectorXd* final_eta = nullptr);

std::vector<ConvergenceRow> run_example1(const Example1Config& config);

void write_convergence_csv(const std::vector<ConvergenceRow>& rows, std::ostream& out);

struct TemporalRow {
    double dt = 0.0;
    double err_m = 0.0;  // M-weighted distance to the reference solution
    double eoc = std::numeric_limits<double>::quiet_NaN();
};

/// Time-step study of the manufactured problem on one mesh: every dt in
/// `dts` is compared at T with the solution for `dt_reference`.
std::vector<TemporalRow> run_temporal_study(const Example1Config& config, int n, const std::vector<double>& dts,
                                            double dt_reference);

void write_temporal_csv(const std::vector<TemporalRow>& rows, std::ostream& out);

struct Example2Config {
    int n = 16;
    double dt = 1e-3;
    double T = 5.0;
    Scheme scheme = Scheme::Nonlinear;
    double sigma = 0.2;
    double P = 1e-3;
    double S = 1e-5;
    bool damping = true;
    double delta = 1.0;  // value of the damping on the strip
    double load_amplitude = 50.0;
    NewtonConfig newton;
    std::function<void(const TrajectoryRecord&)> on_step;
};

struct Example2Result {
    std::shared_ptr<const GlobalSystem> system;
    PhysicalParams params;
    Eigen::VectorXd initial;
    SimulationResult simulation;
};

/// Damping on the frame {x < 10h or x > pi - 10h} or {|y| > l - 5h}.
SpaceFunction bridge_damping(double h, double length, double half_width);

Example2Result run_example2(const Example2Config& config);

void write_energy_csv(const std::vector<TrajectoryRecord>& records, std::ostream& out);

struct JacobianReport {
    int n = 0;                 // free DoFs
    long long nnz_j1 = 0;
    long long nnz_bordered = 0;
    long long nnz_full = 0;    // pattern of J1 + J2 J3
    double ratio = 0.0;        // nnz_bordered / nnz_full
    double density_j1 = 0.0;   // nnz_j1 / n^2
    double cond_estimate = std::numeric_limits<double>::quiet_NaN();
};

JacobianReport report_jacobian(std::shared_ptr<const GlobalSystem> system, const PhysicalParams& params,
                               const Eigen::VectorXd& eta, double dt, bool estimate_condition = true);

/// Structural counts from the blocks alone.
JacobianReport jacobian_structure(const SparseMatrix& J1, const Eigen::VectorXd& J2, const Eigen::VectorXd& J3);

}  // namespace platevem
