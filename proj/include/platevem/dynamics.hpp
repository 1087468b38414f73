#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>

#include "platevem/assembly.hpp"

namespace platevem {

struct PhysicalParams {
    double sigma = 0.3;       // Poisson ratio
    double P = 0.0;           // pre-stressing
    double S = 0.0;           // nonlocal elasticity
    SpaceFunction delta;      // damping; empty means zero
    SpaceTimeFunction load;   // empty means zero

    static SpaceFunction constant(double value) {
        return [value](double, double) { return value; };
    }

    /// Throws InvalidArgument for sigma outside (0, 1) or negative S.
    /// Returns advisory notes for parameters outside the range where
    /// existence and uniqueness are known.
    std::vector<std::string> validate() const;
};

struct NewtonConfig {
    double abs_tol = 1e-11;
    double rel_tol = 1e-10;
    int max_iterations = 25;

    void validate() const;
};

enum class Scheme { Nonlinear, Linearized };

Scheme scheme_from_string(const std::string& name);
std::string to_string(Scheme scheme);

/// State after step n: eta = eta^n, eta_nm1 = eta^{n-1}, eta_nm2 = eta^{n-2}.
struct TimeState {
    Eigen::VectorXd eta;
    Eigen::VectorXd eta_nm1;
    Eigen::VectorXd eta_nm2;
    double xi = 0.0;
    int n = 0;
    double dt = 0.0;

    double time() const { return n * dt; }
    /// Shifts the history and stores the new solution as step n + 1.
    void advance(Eigen::VectorXd next, double next_xi);
};

struct Residual {
    Eigen::VectorXd eta;
    double xi = 0.0;
    double norm() const;
};

struct NewtonResult {
    Eigen::VectorXd eta;
    double xi = 0.0;
    int iterations = 0;
    double residual_norm = 0.0;
    std::vector<double> history;  // residual norm before each iteration and at the end
};

/// Sparse pieces of the augmented Jacobian at (eta, xi).
struct BorderedJacobian {
    SparseMatrix J1;
    Eigen::VectorXd J2;  // column
    Eigen::VectorXd J3;  // row, stored as a column vector
    double J4 = -1.0;
};

/// Time stepping for one assembled system and one time step. Caches the
/// constant matrix part and the symbolic factorization of J1.
class TimeStepper {
public:
    TimeStepper(std::shared_ptr<const GlobalSystem> system, PhysicalParams params, double dt,
                NewtonConfig config = {});

    const GlobalSystem& system() const { return *system_; }
    const PhysicalParams& params() const { return params_; }
    double dt() const { return dt_; }

    /// Load vector at time t (zero when the load is empty).
    Eigen::VectorXd load(double t) const;

    /// Residual of step state.n + 1 at the candidate (eta, xi).
    Residual residual(const TimeState& state, const Eigen::VectorXd& eta, double xi,
                      const Eigen::VectorXd& load) const;
    Residual residual(const TimeState& state, const Eigen::VectorXd& eta, double xi) const;

    BorderedJacobian jacobian(const Eigen::VectorXd& eta, double xi) const;

    /// Newton on (eta, xi) with the bordered Schur solve, warm started from
    /// (state.eta, state.xi). After each update xi is reset to eta' Ax eta.
    NewtonResult newton_step(const TimeState& state);

    /// One solve of the scheme with the nonlocal coefficient frozen at
    /// eta^{n-2} of the new step.
    Eigen::VectorXd linearized_step(const TimeState& state);

    /// 2-norm condition estimate of the augmented Jacobian at (eta, xi).
    double condition_estimate(const Eigen::VectorXd& eta, double xi);

private:
    void factor(const SparseMatrix& J1);
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

    std::shared_ptr<const GlobalSystem> system_;
    PhysicalParams params_;
    double dt_;
    NewtonConfig config_;
    SparseMatrix lhs_mass_;  // M + dt/2 Mdelta
    SparseMatrix base_;      // lhs_mass_ + dt^2 A + 0 * Ax (pattern of J1)
    Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
    bool analyzed_ = false;
};

double axial_energy(const GlobalSystem& system, const Eigen::VectorXd& eta);

double compute_energy(const GlobalSystem& system, const PhysicalParams& params,
                      const Eigen::VectorXd& eta_n, const Eigen::VectorXd& eta_nm1, double dt);

/// A eta = F(g0) on the free DoFs.
Eigen::VectorXd solve_stationary(const GlobalSystem& system, const SpaceFunction& g0);

struct TrajectoryRecord {
    int step = 0;
    double time = 0.0;
    int newton_iters = 0;
    double xi = 0.0;
    double energy = 0.0;
    double residual_norm = 0.0;
};

struct SimulationResult {
    std::vector<TrajectoryRecord> records;  // steps 1..N
    TimeState final_state;
    std::vector<Eigen::VectorXd> states;    // eta^0..eta^N when requested
};

struct SimulationOptions {
    Scheme scheme = Scheme::Nonlinear;
    NewtonConfig newton;
    bool keep_states = false;
    /// Called after every accepted step.
    std::function<void(const TimeState&, const TrajectoryRecord&)> on_step;
};

/// eta^0 and eta^1 are given; N = round(T / dt) >= 2 steps are taken.
/// StepFailure propagates with the failing step index.
SimulationResult run_simulation(std::shared_ptr<const GlobalSystem> system, const PhysicalParams& params,
                                const Eigen::VectorXd& eta0, const Eigen::VectorXd& eta1, double dt,
                                double T, const SimulationOptions& options = {});

/// Starting values from the initial displacement and velocity:
/// U^0 = I_h u0 and U^1 = U^0 + dt I_h w0.
std::pair<Eigen::VectorXd, Eigen::VectorXd> initial_values(const GlobalSystem& system,
                                                           const SpaceFunction& u0,
                                                           const GradientFunction& grad_u0,
                                                           const SpaceFunction& w0,
                                                           const GradientFunction& grad_w0, double dt);

void write_trajectory_csv(const std::vector<TrajectoryRecord>& records, std::ostream& out);

// ------------------------------------------------------------ conditioning

/// Linear operator given by its action, its transpose action and solves.
struct OperatorPair {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply_transpose;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> solve;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> solve_transpose;
    Eigen::Index size = 0;
};

/// sigma_max / sigma_min by power iteration on B'B and on (B'B)^{-1};
/// at most max_iterations each, stopping early on relative change < tol.
double estimate_condition(const OperatorPair& op, int max_iterations = 100, double tol = 1e-6);
double estimate_condition(const Eigen::MatrixXd& dense);

}  // namespace platevem
