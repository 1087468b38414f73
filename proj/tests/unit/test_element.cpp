#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "platevem/element.hpp"
#include "platevem/errors.hpp"

using namespace platevem;
using oracle::Quadratic;

namespace {

constexpr double kSigma = 0.3;

ElementGeometry unit_square() {
    return ElementGeometry::from_polygon({Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1)});
}

Eigen::VectorXd unit(int n, int i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(i) = 1.0;
    return e;
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Element, DofLayoutHasOnlyVertexSlotsForDegreeTwo) {
    const auto g = ElementGeometry::from_polygon({Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1), Point(-0.5, 0.5)});
    const DofLayout l = DofLayout::for_element(g);
    EXPECT_EQ(l.total(), 15);
    EXPECT_EQ(l.edge_value_moments(), 0);
    EXPECT_EQ(l.edge_normal_moments(), 0);
    EXPECT_EQ(l.interior_moments(), 0);
}

TEST(Element, DofOfPolyMatchesDirectEvaluation) {
    for (const auto& g : oracle::corpus(7, 5)) {
        const Eigen::MatrixXd D = dof_of_poly(g);
        const auto mono = oracle::scaled_monomials(g.centroid, g.diameter);
        for (int a = 0; a < kP2; ++a)
            EXPECT_LT((D.col(a) - oracle::dofs_of(g, mono[static_cast<std::size_t>(a)])).cwiseAbs().maxCoeff(), 1e-11);
    }
}

TEST(Element, PiDeltaReproducesMonomials) {
    const auto g = unit_square();
    const ProjectorSet p = build_projectors(g, kSigma);
    const Eigen::MatrixXd PD = p.pi_delta * p.dof_of_poly;
    EXPECT_LT((PD - Eigen::MatrixXd::Identity(kP2, kP2)).cwiseAbs().maxCoeff(), 1e-12);
    // q = 1 gives e_0: constants are pinned by the vertex mean.
    const Eigen::VectorXd c = p.pi_delta * p.dof_of_poly.col(0);
    EXPECT_NEAR(c(0), 1.0, 1e-12);
    EXPECT_LT(c.tail(5).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Element, PiDeltaMatchesDenseOracleOnRandomDofs) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> N01;
    std::vector<ElementGeometry> cells{unit_square()};
    for (const auto& g : oracle::corpus(3, 10)) cells.push_back(g);
    for (const auto& g : cells) {
        const Eigen::MatrixXd P = build_pidelta(g, kSigma);
        Eigen::VectorXd v(g.num_dofs());
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = N01(rng);
        const Eigen::VectorXd coef = P * v;
        const Quadratic q = oracle::pidelta(g, kSigma, v);
        for (const Point& x : g.vertices) EXPECT_NEAR(oracle::eval_scaled(g, coef, x), q(x), 1e-10);
        EXPECT_NEAR(oracle::eval_scaled(g, coef, g.centroid), q(g.centroid), 1e-10);
    }
}

TEST(Element, PlateRhsMatchesGradientTraceIntegral) {
    for (const auto& g : oracle::corpus(5, 10)) {
        const Eigen::MatrixXd B = plate_rhs(g, kSigma);
        const auto mono = oracle::scaled_monomials(g.centroid, g.diameter);
        const double scale = max_abs(B);
        for (int j = 0; j < g.num_dofs(); ++j)
            for (int a = 3; a < kP2; ++a)
                EXPECT_NEAR(B(a, j), oracle::plate_form(g, kSigma, unit(g.num_dofs(), j), mono[static_cast<std::size_t>(a)]),
                            1e-11 * scale);
    }
}

TEST(Element, DerivativeAndL2ProjectorsOnSimplePolynomials) {
    const auto g = unit_square();
    const ProjectorSet p = build_projectors(g, kSigma);
    // q = x: D_x q = 1.
    const Eigen::VectorXd dx = oracle::dofs_of(g, Quadratic{{0, 1, 0, 0, 0, 0}});
    const Eigen::VectorXd c1 = p.pi_dx * dx;
    EXPECT_NEAR(c1(0), 1.0, 1e-12);
    EXPECT_NEAR(c1(1), 0.0, 1e-12);
    EXPECT_NEAR(c1(2), 0.0, 1e-12);
    // q = y^2 has no x dependence.
    const Eigen::VectorXd dy2 = oracle::dofs_of(g, Quadratic{{0, 0, 0, 0, 0, 1}});
    EXPECT_LT((p.pi_dx * dy2).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((p.pi_l2 * p.dof_of_poly - Eigen::MatrixXd::Identity(kP2, kP2)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Element, StiffnessIsSymmetricWithThreeDimensionalKernel) {
    const auto g = unit_square();
    const ProjectorSet p = build_projectors(g, kSigma);
    const Eigen::MatrixXd K = build_local_stiffness(p);
    EXPECT_LE(max_abs(K - K.transpose()), 1e-12 * max_abs(K));
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K).eigenvalues();
    const double tol = 1e-10 * ev.maxCoeff();
    int zeros = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) zeros += std::abs(ev(i)) < tol ? 1 : 0;
    EXPECT_EQ(zeros, 3);
    EXPECT_GT(ev.minCoeff(), -tol);
    // The kernel is span{1, x, y}.
    for (const Quadratic& q : {Quadratic{{1, 0, 0, 0, 0, 0}}, Quadratic{{0, 1, 0, 0, 0, 0}}, Quadratic{{0, 0, 1, 0, 0, 0}}})
        EXPECT_LT((K * oracle::dofs_of(g, q)).cwiseAbs().maxCoeff(), 1e-12 * ev.maxCoeff());
}

TEST(Element, MassIsPositiveDefiniteAndReproducesArea) {
    for (const auto& g : oracle::corpus(9, 10)) {
        const ProjectorSet p = build_projectors(g, kSigma);
        const Eigen::MatrixXd M = build_local_mass(g, p);
        EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M).eigenvalues().minCoeff(), 0.0);
        const Eigen::VectorXd one = oracle::dofs_of(g, Quadratic{{1, 0, 0, 0, 0, 0}});
        EXPECT_NEAR(one.dot(M * one), g.area, 1e-12 * std::max(1.0, g.area));
    }
}

TEST(Element, AxialFormOnSimplePolynomials) {
    for (const auto& g : oracle::corpus(13, 10)) {
        const ProjectorSet p = build_projectors(g, kSigma);
        const Eigen::MatrixXd Ax = build_local_ax(p);
        const Eigen::VectorXd x = oracle::dofs_of(g, Quadratic{{0, 1, 0, 0, 0, 0}});
        const Eigen::VectorXd y2 = oracle::dofs_of(g, Quadratic{{0, 0, 0, 0, 0, 1}});
        EXPECT_NEAR(x.dot(Ax * x), g.area, 1e-11 * std::max(1.0, g.area));
        EXPECT_NEAR(y2.dot(Ax * y2), 0.0, 1e-11 * std::max(1.0, max_abs(Ax)));
    }
}

TEST(Element, AxialFormBoundedByH1Seminorm) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> N01;
    for (const auto& g : oracle::corpus(19, 10)) {
        const ProjectorSet p = build_projectors(g, kSigma);
        const Eigen::MatrixXd Ax = build_local_ax(p);
        Quadratic q;
        for (double& c : q.c) c = N01(rng);
        const Eigen::VectorXd d = oracle::dofs_of(g, q);
        const double h1 = oracle::integrate(g.vertices, [&](const Point& x) { return q.grad(x).squaredNorm(); });
        EXPECT_LE(d.dot(Ax * d), h1 + 1e-11 * std::max(1.0, h1));
    }
}

TEST(Element, ProjectorIdempotence) {
    for (const auto& g : oracle::corpus(23, 10)) {
        const ProjectorSet p = build_projectors(g, kSigma);
        EXPECT_LT(max_abs(p.pi_delta * p.dof_of_poly * p.pi_delta - p.pi_delta), 1e-11 * std::max(1.0, max_abs(p.pi_delta)));
    }
}

TEST(Element, ScalingAndTranslation) {
    const std::vector<Point> base{Point(0, 0), Point(1, 0.1), Point(1.3, 0.9), Point(0.4, 1.2), Point(-0.2, 0.6)};
    const double s = 0.37;
    const Point shift(5.0, -3.0);
    std::vector<Point> moved;
    for (const Point& x : base) moved.push_back(s * x + shift);
    const auto g0 = ElementGeometry::from_polygon(base);
    const auto g1 = ElementGeometry::from_polygon(moved);
    const LocalMatrices L0 = build_local_matrices(g0, build_projectors(g0, kSigma));
    const LocalMatrices L1 = build_local_matrices(g1, build_projectors(g1, kSigma));
    // Scaled DoFs carry the units of u, so K ~ s^-2, M ~ s^2 and Ax is invariant.
    EXPECT_LT(max_abs(s * s * L1.K - L0.K), 1e-10 * max_abs(L0.K));
    EXPECT_LT(max_abs(L1.M / (s * s) - L0.M), 1e-10 * max_abs(L0.M));
    EXPECT_LT(max_abs(L1.Ax - L0.Ax), 1e-10 * max_abs(L0.Ax));
}

TEST(Element, StabilityRayleighQuotientsStayBounded) {
    // Quotients v'Kv / v'K0v over the range of the consistency part K0.
    for (const auto& g : oracle::corpus()) {
        const ProjectorSet p = build_projectors(g, kSigma);
        const Eigen::MatrixXd K = build_local_stiffness(p);
        const Eigen::MatrixXd K0 = p.pi_delta.transpose() * p.a_gram * p.pi_delta;
        const Eigen::MatrixXd V = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K0).eigenvectors().rightCols(3);
        const Eigen::MatrixXd a = V.transpose() * K * V;
        const Eigen::MatrixXd b = V.transpose() * K0 * V;
        const Eigen::VectorXd q = Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd>(a, b).eigenvalues();
        EXPECT_GE(q.minCoeff(), 0.1);
        EXPECT_LE(q.maxCoeff(), 10.0);
    }
}

TEST(Element, LoadVector) {
    const auto g = unit_square();
    const ProjectorSet p = build_projectors(g, kSigma);
    const Eigen::VectorXd zero = build_local_load(g, p, [](double, double, double) { return 0.0; }, 0.0);
    EXPECT_EQ(zero.cwiseAbs().maxCoeff(), 0.0);
    const Eigen::VectorXd F1 = build_local_load(g, p, [](double, double, double) { return 1.0; }, 0.0);
    EXPECT_NEAR(F1.dot(oracle::dofs_of(g, Quadratic{{1, 0, 0, 0, 0, 0}})), g.area, 1e-10);

    // g in P_2: F_i = (g, Pi phi_i) by the oracle projection and quadrature.
    const Quadratic gq{{0.3, -1.0, 0.5, 2.0, -0.7, 1.1}};
    for (const auto& c : oracle::corpus(31, 5)) {
        const ProjectorSet pc = build_projectors(c, kSigma);
        const Eigen::VectorXd F = build_local_load(c, pc, [&](double x, double y, double) { return gq(Point(x, y)); }, 0.0);
        for (int i = 0; i < c.num_dofs(); ++i) {
            const Quadratic phi = oracle::pidelta(c, kSigma, unit(c.num_dofs(), i));
            const double exact = oracle::integrate(c.vertices, [&](const Point& x) { return gq(x) * phi(x); });
            EXPECT_NEAR(F(i), exact, 1e-10 * std::max(1.0, std::abs(exact)));
        }
    }
}

TEST(Element, LoadRejectsNonFiniteSamples) {
    const auto g = unit_square();
    const ProjectorSet p = build_projectors(g, kSigma);
    EXPECT_THROW(build_local_load(g, p, [](double, double, double) { return std::nan(""); }, 0.0), EvaluationError);
}

TEST(Element, HermiteWeightsMatchOracleTrace) {
    std::mt19937_64 rng(37);
    std::normal_distribution<double> N01;
    for (const auto& g : oracle::corpus(41, 3)) {
        Eigen::VectorXd v(g.num_dofs());
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = N01(rng);
        for (int e = 0; e < g.num_vertices(); ++e) {
            const oracle::EdgeTrace tr(g, v, e);
            const int j = (e + 1) % g.num_vertices();
            for (double s : {0.0, 0.2, 0.5, 0.9, 1.0}) {
                const auto w = hermite_edge_weights(g, e, s);
                double val = 0.0;
                for (int k = 0; k < 3; ++k) val += w[static_cast<std::size_t>(k)] * v(3 * e + k) + w[static_cast<std::size_t>(3 + k)] * v(3 * j + k);
                EXPECT_NEAR(val, tr.value(s), 1e-11 * std::max(1.0, v.cwiseAbs().maxCoeff()));
            }
        }
    }
}

TEST(Element, RejectsBadInput) {
    EXPECT_THROW(build_pidelta(unit_square(), kSigma, 3), InvalidArgument);
    EXPECT_THROW(build_pidelta(unit_square(), 1.0, 2), InvalidArgument);
    EXPECT_THROW(ElementGeometry::from_polygon({Point(0, 0), Point(1, 0)}), InvalidArgument);
    EXPECT_THROW(ElementGeometry::from_polygon({Point(0, 0), Point(1, 0), Point(2, 0)}), ElementKernelError);
    EXPECT_THROW(ElementGeometry::from_polygon({Point(0, 0), Point(0, 1), Point(1, 0)}), ElementKernelError);
}
