#include <cmath>

#include <Eigen/Dense>

#include "platevem/dynamics.hpp"
#include "platevem/errors.hpp"

namespace platevem {

namespace {

Eigen::VectorXd start_vector(Eigen::Index n) {
    // Fixed, non-symmetric start so results are reproducible and unlikely to
    // be orthogonal to the extreme singular vectors.
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = 1.0 + 0.5 * std::sin(1.0 + 0.7 * static_cast<double>(i));
    return x.normalized();
}

template <class Apply>
double dominant(Apply&& apply, Eigen::Index n, int max_iterations, double tol) {
    Eigen::VectorXd x = start_vector(n);
    double lambda = 0.0;
    for (int it = 0; it < max_iterations; ++it) {
        Eigen::VectorXd y = apply(x);
        const double next = x.dot(y);
        const double norm = y.norm();
        if (!std::isfinite(norm)) throw SolverError("condition estimate diverged");
        if (norm == 0.0) return 0.0;
        x = y / norm;
        const bool done = it > 0 && std::abs(next - lambda) <= tol * std::abs(next);
        lambda = next;
        if (done) break;
    }
    return lambda;
}

}  // namespace

double estimate_condition(const OperatorPair& op, int max_iterations, double tol) {
    if (op.size == 0) return 1.0;
    const double smax2 = dominant([&](const Eigen::VectorXd& x) { return op.apply_transpose(op.apply(x)); },
                                  op.size, max_iterations, tol);
    const double inv_smin2 = dominant([&](const Eigen::VectorXd& x) { return op.solve(op.solve_transpose(x)); },
                                      op.size, max_iterations, tol);
    if (!(smax2 > 0.0) || !(inv_smin2 > 0.0)) throw SolverError("operator is singular");
    return std::sqrt(smax2 * inv_smin2);
}

double estimate_condition(const Eigen::MatrixXd& dense) {
    if (dense.rows() != dense.cols()) throw InvalidArgument("condition estimate needs a square matrix");
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(dense);
    OperatorPair op;
    op.size = dense.rows();
    op.apply = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return dense * x; };
    op.apply_transpose = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return dense.transpose() * x; };
    op.solve = [&](const Eigen::VectorXd& b) -> Eigen::VectorXd { return lu.solve(b); };
    op.solve_transpose = [&](const Eigen::VectorXd& b) -> Eigen::VectorXd { return lu.transpose().solve(b); };
    return estimate_condition(op);
}

}  // namespace platevem
