#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "platevem/dynamics.hpp"
#include "platevem/errors.hpp"
#include "platevem/experiments.hpp"

using namespace platevem;

namespace {

const Rect kUnit{0.0, 0.0, 1.0, 1.0};

std::shared_ptr<const GlobalSystem> clamped(int n, SpaceFunction delta = PhysicalParams::constant(1.0)) {
    return std::make_shared<const GlobalSystem>(
        assemble(generate_square_grid(n, kUnit), ProblemKind::Clamped, 0.3, std::move(delta)));
}

Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N01;
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * N01(rng);
    return v;
}

TimeState state_of(const Eigen::VectorXd& eta, const Eigen::VectorXd& eta_nm1, double dt) {
    TimeState s;
    s.eta = eta;
    s.eta_nm1 = eta_nm1;
    s.eta_nm2 = eta_nm1;
    s.dt = dt;
    s.n = 1;
    return s;
}

// Newton on the reduced unknown eta alone with the full dense Jacobian
// (xi eliminated), iterated to machine precision.
Eigen::VectorXd dense_newton(const GlobalSystem& s, const PhysicalParams& p, double dt, const TimeState& st,
                             const Eigen::VectorXd& F) {
    const Eigen::MatrixXd M(s.M), Md(s.Mdelta), A(s.A), Ax(s.Ax);
    const double dt2 = dt * dt;
    const Eigen::MatrixXd L = M + 0.5 * dt * Md + dt2 * A;
    const Eigen::VectorXd rhs = dt2 * F + 2.0 * M * st.eta - M * st.eta_nm1 + 0.5 * dt * Md * st.eta_nm1;
    Eigen::VectorXd eta = st.eta;
    for (int it = 0; it < 60; ++it) {
        const Eigen::VectorXd axe = Ax * eta;
        const double xi = eta.dot(axe);
        const Eigen::VectorXd R = L * eta + dt2 * (p.S * xi - p.P) * axe - rhs;
        const Eigen::MatrixXd J = L + dt2 * (p.S * xi - p.P) * Ax + 2.0 * dt2 * p.S * axe * axe.transpose();
        const Eigen::VectorXd d = J.fullPivLu().solve(-R);
        eta += d;
        if (d.norm() < 1e-15 * (1.0 + eta.norm())) break;
    }
    return eta;
}

}  // namespace

TEST(Dynamics, ParameterValidation) {
    PhysicalParams p;
    EXPECT_NO_THROW(p.validate());
    p.sigma = 1.0;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p.sigma = 0.3;
    p.S = -1.0;
    EXPECT_THROW(p.validate(), InvalidArgument);
    p.S = 0.0;
    p.P = 1e6;
    EXPECT_FALSE(p.validate().empty());

    NewtonConfig c;
    c.max_iterations = 0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    EXPECT_EQ(scheme_from_string("linearized"), Scheme::Linearized);
    EXPECT_EQ(to_string(Scheme::Nonlinear), "nonlinear");
    EXPECT_THROW(scheme_from_string("explicit"), InvalidArgument);
    EXPECT_THROW(TimeStepper(clamped(2), {}, 0.0), InvalidArgument);
}

TEST(Dynamics, ResidualAtZeroState) {
    const auto sys = clamped(3);
    TimeStepper st(sys, {0.3, 1e-3, 1e-5, {}, {}}, 0.01);
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(sys->size());
    const Residual r = st.residual(state_of(z, z, 0.01), z, 0.7);
    EXPECT_EQ(r.eta.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(r.xi, -0.7);
}

TEST(Dynamics, ResidualWithoutNonlinearityIsTheLinearRecurrence) {
    const auto sys = clamped(4, PhysicalParams::constant(0.0));
    const double dt = 0.02;
    TimeStepper st(sys, {0.3, 0.0, 0.0, {}, {}}, dt);
    const Eigen::VectorXd e0 = random_vector(sys->size(), 1), e1 = random_vector(sys->size(), 2),
                          e2 = random_vector(sys->size(), 3);
    const Residual r = st.residual(state_of(e1, e0, dt), e2, 0.0);
    const Eigen::VectorXd expect = sys->M * (e2 - 2 * e1 + e0) + dt * dt * (sys->A * e2);
    EXPECT_LT((r.eta - expect).cwiseAbs().maxCoeff(), 1e-13 * expect.cwiseAbs().maxCoeff());
}

TEST(Dynamics, ResidualMatchesDenseFormula) {
    const auto sys = clamped(4, [](double x, double) { return 1.0 + x; });
    const double dt = 0.05;
    PhysicalParams p{0.3, 2.0, 5.0, [](double x, double) { return 1.0 + x; }, [](double x, double y, double t) {
                         return std::sin(x + y) * (1 + t);
                     }};
    TimeStepper st(sys, p, dt);
    const Eigen::VectorXd e0 = random_vector(sys->size(), 4), e1 = random_vector(sys->size(), 5),
                          e2 = random_vector(sys->size(), 6);
    const double xi = 0.37;
    const Residual r = st.residual(state_of(e1, e0, dt), e2, xi);
    const Eigen::MatrixXd M(sys->M), Md(sys->Mdelta), A(sys->A), Ax(sys->Ax);
    const Eigen::VectorXd F = assemble_load(*sys, p.load, 2 * dt);
    const Eigen::VectorXd expect = (M + dt / 2 * Md) * e2 + dt * dt * A * e2 + dt * dt * (p.S * xi - p.P) * Ax * e2 -
                                   dt * dt * F - 2 * M * e1 + M * e0 - dt / 2 * Md * e0;
    EXPECT_LT((r.eta - expect).cwiseAbs().maxCoeff(), 1e-12 * expect.cwiseAbs().maxCoeff());
    EXPECT_NEAR(r.xi, e2.dot(Ax * e2) - xi, 1e-12);
}

TEST(Dynamics, JacobianMatchesFiniteDifferences) {
    const auto sys = clamped(4);
    const double dt = 0.05;
    TimeStepper st(sys, {0.3, 1.0, 50.0, {}, {}}, dt);
    const TimeState s = state_of(random_vector(sys->size(), 7), random_vector(sys->size(), 8), dt);
    const Eigen::VectorXd eta = random_vector(sys->size(), 9);
    const double xi = 0.4;
    const BorderedJacobian J = st.jacobian(eta, xi);
    for (std::uint64_t k = 0; k < 10; ++k) {
        const Eigen::VectorXd d = random_vector(sys->size(), 100 + k);
        const double dxi = 0.3 * static_cast<double>(k) - 1.0;
        const double h = 1e-6;
        const Residual rp = st.residual(s, eta + h * d, xi + h * dxi), rm = st.residual(s, eta - h * d, xi - h * dxi);
        const Eigen::VectorXd fd_eta = (rp.eta - rm.eta) / (2 * h);
        const double fd_xi = (rp.xi - rm.xi) / (2 * h);
        const Eigen::VectorXd lin_eta = J.J1 * d + J.J2 * dxi;
        const double lin_xi = J.J3.dot(d) + J.J4 * dxi;
        EXPECT_LT((fd_eta - lin_eta).norm(), 1e-7 * lin_eta.norm());
        EXPECT_NEAR(fd_xi, lin_xi, 1e-7 * std::abs(lin_xi) + 1e-9);
    }
}

TEST(Dynamics, LinearProblemConvergesInOneNewtonIteration) {
    const auto sys = clamped(4);
    const double dt = 0.01;
    TimeStepper st(sys, {0.3, 1e-3, 0.0, PhysicalParams::constant(1.0),
                         [](double x, double y, double) { return 100 * x * y; }},
                   dt);
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(sys->size());
    const NewtonResult r = st.newton_step(state_of(z, z, dt));
    EXPECT_EQ(r.iterations, 1);
    EXPECT_GT(r.eta.norm(), 0.0);
}

TEST(Dynamics, NewtonMatchesDenseFullJacobianOracle) {
    const auto sys = clamped(3);
    const double dt = 0.05;
    const PhysicalParams p{0.3, 1e-3, 1e3, PhysicalParams::constant(1.0),
                           [](double x, double y, double t) { return 1e3 * std::sin(3 * t) * x * y; }};
    TimeStepper st(sys, p, dt);
    TimeState s = state_of(Eigen::VectorXd::Zero(sys->size()), Eigen::VectorXd::Zero(sys->size()), dt);
    for (int k = 0; k < 10; ++k) {
        const Eigen::VectorXd ref = dense_newton(*sys, p, dt, s, st.load((s.n + 1) * dt));
        const NewtonResult r = st.newton_step(s);
        EXPECT_LT((r.eta - ref).cwiseAbs().maxCoeff(), 1e-9 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
        EXPECT_NEAR(r.xi, axial_energy(*sys, r.eta), 1e-14 * std::max(1.0, r.xi));
        s.advance(r.eta, r.xi);
    }
    EXPECT_GT(s.eta.norm(), 1e-3);
}

TEST(Dynamics, NewtonConvergesQuadratically) {
    const auto sys = clamped(4);
    const double dt = 0.1;
    TimeStepper st(sys, {0.3, 0.0, 1e4, {}, {}}, dt);
    const Eigen::VectorXd e0 = random_vector(sys->size(), 11, 0.1);
    const NewtonResult r = st.newton_step(state_of(e0, Eigen::VectorXd::Zero(sys->size()), dt));
    ASSERT_GE(r.history.size(), 4u);
    EXPECT_LE(r.iterations, 10);
    // Once in the asymptotic regime the error exponent roughly doubles.
    const auto& h = r.history;
    bool quadratic = false;
    for (std::size_t k = 1; k + 1 < h.size(); ++k) {
        const double a = std::log(h[k] / h[0]), b = std::log(h[k + 1] / h[0]);
        if (a < -2.0 && b < 1.6 * a) quadratic = true;
    }
    EXPECT_TRUE(quadratic);
}

TEST(Dynamics, NewtonFailureIsReported) {
    const auto sys = clamped(4);
    NewtonConfig c;
    c.max_iterations = 1;
    c.abs_tol = 1e-300;
    c.rel_tol = 1e-300;
    TimeStepper st(sys, {0.3, 0.0, 1e4, {}, {}}, 0.1, c);
    const Eigen::VectorXd e0 = random_vector(sys->size(), 11, 0.1);
    try {
        st.newton_step(state_of(e0, Eigen::VectorXd::Zero(sys->size()), 0.1));
        FAIL() << "expected StepFailure";
    } catch (const StepFailure& e) {
        EXPECT_EQ(e.step(), 2);
        EXPECT_GT(e.residual_norm(), 0.0);
    }
}

TEST(Dynamics, LinearizedStep) {
    const auto sys = clamped(4);
    const double dt = 0.01;
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(sys->size());
    TimeStepper zero(sys, {0.3, 1e-3, 1e-5, PhysicalParams::constant(1.0), {}}, dt);
    EXPECT_EQ(zero.linearized_step(state_of(z, z, dt)).cwiseAbs().maxCoeff(), 0.0);

    // Without the nonlocal term both schemes solve the same linear system.
    const PhysicalParams p{0.3, 2.0, 0.0, PhysicalParams::constant(1.0),
                           [](double x, double y, double) { return 10 * x * y; }};
    TimeStepper a(sys, p, dt), b(sys, p, dt);
    const TimeState s = state_of(random_vector(sys->size(), 1, 1e-2), random_vector(sys->size(), 2, 1e-2), dt);
    const Eigen::VectorXd lin = a.linearized_step(s);
    const Eigen::VectorXd non = b.newton_step(s).eta;
    EXPECT_LT((lin - non).cwiseAbs().maxCoeff(), 1e-12 * non.cwiseAbs().maxCoeff());
}

TEST(Dynamics, ZeroDataGivesZeroTrajectory) {
    const auto sys = clamped(4);
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(sys->size());
    for (Scheme scheme : {Scheme::Nonlinear, Scheme::Linearized}) {
        SimulationOptions opt;
        opt.scheme = scheme;
        opt.keep_states = true;
        const SimulationResult r =
            run_simulation(sys, {0.3, 1e-3, 1e-5, PhysicalParams::constant(1.0), {}}, z, z, 0.01, 0.1, opt);
        EXPECT_EQ(r.records.size(), 10u);
        EXPECT_EQ(r.states.size(), 11u);
        for (const auto& e : r.states) EXPECT_EQ(e.cwiseAbs().maxCoeff(), 0.0);
        for (const auto& rec : r.records) EXPECT_EQ(rec.energy, 0.0);
        EXPECT_EQ(r.final_state.n, 10);
    }
}

TEST(Dynamics, SimulationRejectsBadArguments) {
    const auto sys = clamped(3);
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(sys->size());
    EXPECT_THROW(run_simulation(sys, {}, z, z, 0.03, 0.1), InvalidArgument);
    EXPECT_THROW(run_simulation(sys, {}, z, z, 0.1, 0.1), InvalidArgument);
    EXPECT_THROW(run_simulation(sys, {}, z, Eigen::VectorXd::Zero(1), 0.01, 0.1), InvalidArgument);
}

TEST(Dynamics, StepFailureCarriesTheStepIndex) {
    const auto sys = clamped(4);
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(sys->size());
    SimulationOptions opt;
    opt.newton.max_iterations = 1;
    opt.newton.abs_tol = 1e-300;
    opt.newton.rel_tol = 1e-300;
    const PhysicalParams p{0.3, 0.0, 1e4, {}, [](double, double, double t) { return t > 0.035 ? 1e3 : 0.0; }};
    try {
        run_simulation(sys, p, z, z, 0.01, 0.1, opt);
        FAIL() << "expected StepFailure";
    } catch (const StepFailure& e) {
        EXPECT_EQ(e.step(), 4);
    }
}

TEST(Dynamics, InitialValues) {
    const auto sys = clamped(4);
    auto u0 = [](double x, double y) { return std::pow(x * (1 - x) * y * (1 - y), 2); };
    auto gu0 = [](double x, double y) {
        const double X = x * (1 - x), Y = y * (1 - y);
        return Eigen::Vector2d(2 * X * (1 - 2 * x) * Y * Y, 2 * Y * (1 - 2 * y) * X * X);
    };
    auto w0 = [&](double x, double y) { return 3 * u0(x, y); };
    auto gw0 = [&](double x, double y) { return Eigen::Vector2d(3 * gu0(x, y)); };
    const auto [U0, U1] = initial_values(*sys, u0, gu0, w0, gw0, 0.1);
    const Eigen::VectorXd I = interpolate(*sys, u0, gu0);
    EXPECT_LT((U0 - I).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((U1 - 1.3 * I).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Dynamics, StationarySolve) {
    const auto sys = clamped(8);
    EXPECT_EQ(solve_stationary(*sys, [](double, double) { return 0.0; }).cwiseAbs().maxCoeff(), 0.0);
    auto g = [](double x, double y) { return std::sin(std::numbers::pi * x) * (1 + y); };
    const Eigen::VectorXd eta = solve_stationary(*sys, g);
    const Eigen::VectorXd F = assemble_load(*sys, [&](double x, double y, double) { return g(x, y); }, 0.0);
    EXPECT_LT((sys->A * eta - F).norm(), 1e-9 * F.norm());

    // Bridge under 50 sin(2x): the deck sags on one half and lifts on the other.
    const double ell = std::numbers::pi / 150;
    const PolygonalMesh m = generate_square_grid(16, Rect{0.0, -ell, std::numbers::pi, ell}, bridge_boundary());
    const GlobalSystem b = assemble(m, ProblemKind::BridgeMixed, 0.2, PhysicalParams::constant(0.0));
    const Eigen::VectorXd U = solve_stationary(b, [](double x, double) { return 50 * std::sin(2 * x); });
    const Eigen::VectorXd full = expand_to_full(b.dofs, U);
    for (std::size_t v = 0; v < m.num_vertices(); ++v) {
        const double x = m.vertices()[v].x();
        const double value = full(3 * static_cast<Eigen::Index>(v));
        if (x > 0.1 && x < std::numbers::pi / 2 - 0.1) EXPECT_GT(value, 0.0);
        if (x > std::numbers::pi / 2 + 0.1 && x < std::numbers::pi - 0.1) EXPECT_LT(value, 0.0);
    }
}

TEST(Dynamics, StationarySolveNeedsFixedRigidMotions) {
    const PolygonalMesh m = generate_square_grid(2, kUnit, [](const Point&, const Rect&) { return BoundaryTag::Free; });
    DofMap d;
    for (int g = 0; g < 27; ++g) {
        d.free_index.push_back(g);
        d.global_of_free.push_back(g);
    }
    const GlobalSystem s = assemble(std::make_shared<const PolygonalMesh>(m), d, 0.3, PhysicalParams::constant(1.0));
    EXPECT_THROW(solve_stationary(s, [](double, double) { return 1.0; }), SolverError);
}

TEST(Dynamics, EnergyFormula) {
    const auto sys = clamped(4);
    const PhysicalParams p{0.3, 0.5, 3.0, {}, {}};
    const Eigen::VectorXd a = random_vector(sys->size(), 21), b = random_vector(sys->size(), 22);
    const double dt = 0.1;
    const Eigen::VectorXd v = (a - b) / dt;
    const double xi = a.dot(sys->Ax * a);
    EXPECT_NEAR(axial_energy(*sys, a), xi, 1e-14 * xi);
    const double expect = 0.5 * v.dot(sys->M * v) + 0.5 * a.dot(sys->A * a) - 0.25 * xi + 0.75 * xi * xi;
    EXPECT_NEAR(compute_energy(*sys, p, a, b, dt), expect, 1e-12 * expect);
    EXPECT_EQ(compute_energy(*sys, p, a, a, dt) - compute_energy(*sys, p, a, a, 2 * dt), 0.0);
}

TEST(Dynamics, TrajectoryCsv) {
    std::ostringstream out;
    write_trajectory_csv({{2, 0.02, 3, 1.5, 0.25, 1e-12}}, out);
    EXPECT_EQ(out.str(), "step,time,newton_iters,xi,energy,residual_norm\n2,0.02,3,1.5,0.25,1e-12\n");
}

TEST(Conditioning, DenseEstimates) {
    EXPECT_NEAR(estimate_condition(Eigen::MatrixXd::Identity(5, 5)), 1.0, 1e-12);
    Eigen::MatrixXd d = Eigen::MatrixXd::Identity(2, 2);
    d(1, 1) = 1e6;
    EXPECT_NEAR(estimate_condition(d), 1e6, 1e-3 * 1e6);
    EXPECT_THROW(estimate_condition(Eigen::MatrixXd::Zero(2, 3)), InvalidArgument);
}

TEST(Conditioning, OperatorEstimates) {
    Eigen::VectorXd diag = Eigen::VectorXd::LinSpaced(50, 1.0, 2.0);
    diag(10) = 1e6;
    OperatorPair op;
    op.size = 50;
    op.apply = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return diag.cwiseProduct(x); };
    op.apply_transpose = op.apply;
    op.solve = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return x.cwiseQuotient(diag); };
    op.solve_transpose = op.solve;
    EXPECT_NEAR(estimate_condition(op), 1e6, 1e-3 * 1e6);

    diag.setOnes();
    EXPECT_NEAR(estimate_condition(op), 1.0, 1e-9);
}

TEST(Conditioning, StepperEstimateMatchesDense) {
    const auto sys = clamped(3);
    TimeStepper st(sys, {0.3, 1e-3, 1e2, {}, {}}, 0.1);
    const Eigen::VectorXd eta = random_vector(sys->size(), 3, 0.1);
    const double xi = axial_energy(*sys, eta);
    const BorderedJacobian J = st.jacobian(eta, xi);
    const Eigen::Index n = sys->size();
    Eigen::MatrixXd full(n + 1, n + 1);
    full.topLeftCorner(n, n) = Eigen::MatrixXd(J.J1);
    full.topRightCorner(n, 1) = J.J2;
    full.bottomLeftCorner(1, n) = J.J3.transpose();
    full(n, n) = J.J4;
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(full).singularValues();
    EXPECT_NEAR(st.condition_estimate(eta, xi), sv(0) / sv(n), 1e-4 * sv(0) / sv(n));
}
