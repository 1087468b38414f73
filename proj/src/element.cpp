#include "platevem/element.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "platevem/errors.hpp"

namespace platevem {

namespace {

Eigen::Matrix2d hessian_of(const Eigen::MatrixXd& second, int k) {
    Eigen::Matrix2d H;
    H << second(0, k), second(1, k), second(1, k), second(2, k);
    return H;
}

Eigen::Matrix2d moment_tensor(const Eigen::Matrix2d& H, double sigma) {
    return sigma * H.trace() * Eigen::Matrix2d::Identity() + (1.0 - sigma) * H;
}

void check_degree(int degree) {
    if (degree != 2) throw InvalidArgument("only polynomial degree k = 2 is implemented");
}

void check_sigma(double sigma) {
    if (!(sigma > 0.0 && sigma < 1.0)) throw InvalidArgument("sigma must lie in (0, 1)");
}

Eigen::MatrixXd solve_checked(const Eigen::MatrixXd& G, const Eigen::MatrixXd& B,
                              const ElementGeometry& geom, const char* what) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
    // Rank test relative to the largest pivot.
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) throw ElementKernelError(std::string(what) + " is singular", geom.cell_id);
    return lu.solve(B);
}

}  // namespace

ElementGeometry ElementGeometry::from_polygon(std::vector<Point> vertices,
                                              std::vector<double> vertex_scales, int cell_id) {
    if (vertices.size() < 3) throw InvalidArgument("an element needs at least 3 vertices");
    ElementGeometry g;
    g.area = signed_area(vertices);
    if (!(g.area > 0.0)) throw ElementKernelError("polygon is degenerate or clockwise", cell_id);
    g.centroid = area_centroid(vertices);
    g.diameter = polygon_diameter(vertices);
    if (vertex_scales.empty()) vertex_scales.assign(vertices.size(), g.diameter);
    if (vertex_scales.size() != vertices.size())
        throw InvalidArgument("one vertex scale per vertex is required");
    g.vertices = std::move(vertices);
    g.vertex_scales = std::move(vertex_scales);
    g.cell_id = cell_id;
    return g;
}

ElementGeometry ElementGeometry::from_mesh(const PolygonalMesh& mesh, int cell) {
    const Cell& c = mesh.cells().at(static_cast<std::size_t>(cell));
    ElementGeometry g;
    for (int v : c.vertices) {
        g.vertices.push_back(mesh.vertices()[static_cast<std::size_t>(v)]);
        g.vertex_scales.push_back(mesh.vertex_scale(v));
    }
    g.centroid = c.centroid;
    g.diameter = c.diameter;
    g.area = c.area;
    g.cell_id = cell;
    return g;
}

int DofLayout::total() const {
    return vertex_slots() + num_vertices * (edge_value_moments() + edge_normal_moments()) +
           interior_moments();
}

DofLayout DofLayout::for_element(const ElementGeometry& geom, int degree) {
    if (degree < 2) throw InvalidArgument("C1 virtual elements need degree >= 2");
    return {degree, geom.num_vertices()};
}

Eigen::MatrixXd dof_of_poly(const ElementGeometry& geom) {
    const ScaledMonomialBasis basis = geom.basis();
    Eigen::MatrixXd D(geom.num_dofs(), kP2);
    for (int i = 0; i < geom.num_vertices(); ++i) {
        const Point& p = geom.vertices[static_cast<std::size_t>(i)];
        const double hv = geom.vertex_scales[static_cast<std::size_t>(i)];
        const Eigen::MatrixXd v = basis.eval(p, 0);
        const Eigen::MatrixXd d = basis.eval(p, 1);
        D.row(3 * i + kValue) = v.row(0);
        D.row(3 * i + kGradX) = hv * d.row(0);
        D.row(3 * i + kGradY) = hv * d.row(1);
    }
    return D;
}

Eigen::MatrixXd plate_gram(const ElementGeometry& geom, double sigma) {
    const Eigen::MatrixXd second = geom.basis().eval(geom.centroid, 2);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(kP2, kP2);
    for (int a = 0; a < kP2; ++a)
        for (int b = 0; b < kP2; ++b) {
            const Eigen::Matrix2d Ha = hessian_of(second, a);
            const Eigen::Matrix2d Hb = hessian_of(second, b);
            H(a, b) = geom.area * (moment_tensor(Ha, sigma).cwiseProduct(Hb)).sum();
        }
    return H;
}

Eigen::MatrixXd l2_gram(const ElementGeometry& geom) {
    const ScaledMonomialBasis basis = geom.basis();
    const QuadratureRule q = polygon_quadrature(geom.vertices, 6);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(kP2, kP2);
    for (std::size_t k = 0; k < q.size(); ++k) {
        const Eigen::VectorXd m = basis.values(q.points[k]);
        G.noalias() += q.weights[k] * m * m.transpose();
    }
    return G;
}

Eigen::MatrixXd plate_rhs(const ElementGeometry& geom, double sigma) {
    const int n = geom.num_vertices();
    const Eigen::MatrixXd second = geom.basis().eval(geom.centroid, 2);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(kP2, 3 * n);
    // A(v, q) = sum_e [ M_nn(q) int_e d_n v + M_nt(q) (v(b) - v(a)) ], with
    // d_n v linear along e.
    for (int e = 0; e < n; ++e) {
        const int ia = e;
        const int ib = (e + 1) % n;
        const Point d = geom.vertices[static_cast<std::size_t>(ib)] - geom.vertices[static_cast<std::size_t>(ia)];
        const double len = d.norm();
        const Point t = d / len;
        const Point nrm(t.y(), -t.x());
        const double ha = geom.vertex_scales[static_cast<std::size_t>(ia)];
        const double hb = geom.vertex_scales[static_cast<std::size_t>(ib)];
        for (int a = 3; a < kP2; ++a) {
            const Eigen::Matrix2d M = moment_tensor(hessian_of(second, a), sigma);
            const double mnn = nrm.dot(M * nrm);
            const double mnt = t.dot(M * nrm);
            B(a, 3 * ib + kValue) += mnt;
            B(a, 3 * ia + kValue) -= mnt;
            const double half = 0.5 * len * mnn;
            B(a, 3 * ia + kGradX) += half * nrm.x() / ha;
            B(a, 3 * ia + kGradY) += half * nrm.y() / ha;
            B(a, 3 * ib + kGradX) += half * nrm.x() / hb;
            B(a, 3 * ib + kGradY) += half * nrm.y() / hb;
        }
    }
    return B;
}

Eigen::MatrixXd build_pidelta(const ElementGeometry& geom, double sigma, int degree) {
    check_degree(degree);
    check_sigma(sigma);
    const int n = geom.num_vertices();
    const double hE = geom.diameter;
    const ScaledMonomialBasis basis = geom.basis();

    Eigen::MatrixXd G = plate_gram(geom, sigma);
    Eigen::MatrixXd B = plate_rhs(geom, sigma);
    // The kernel {1, x, y} of A^E is fixed by matching vertex means of the
    // value and of h_E times the gradient. These replace the trivial rows.
    G.topRows(3).setZero();
    B.topRows(3).setZero();
    for (int i = 0; i < n; ++i) {
        const Point& p = geom.vertices[static_cast<std::size_t>(i)];
        const double hv = geom.vertex_scales[static_cast<std::size_t>(i)];
        G.row(0) += basis.eval(p, 0).row(0) / n;
        const Eigen::MatrixXd d = basis.eval(p, 1);
        G.row(1) += hE * d.row(0) / n;
        G.row(2) += hE * d.row(1) / n;
        B(0, 3 * i + kValue) = 1.0 / n;
        B(1, 3 * i + kGradX) = hE / (hv * n);
        B(2, 3 * i + kGradY) = hE / (hv * n);
    }
    return solve_checked(G, B, geom, "energy projection system");
}

void build_l2_projectors(const ElementGeometry& geom, ProjectorSet& set) {
    const int n = geom.num_vertices();
    set.l2_gram = l2_gram(geom);
    // Enhancement: all moments up to degree 2 coincide with those of the
    // energy projection.
    const Eigen::MatrixXd moments = set.l2_gram * set.pi_delta;
    set.pi_l2 = solve_checked(set.l2_gram, moments, geom, "L2 Gram matrix");

    // (D_x phi, m_g) = -(phi, D_x m_g) + int_{dE} phi n_x m_g for g in P1.
    const ScaledMonomialBasis basis = geom.basis();
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(kP1, 3 * n);
    R.row(ScaledMonomialBasis::index_of(1, 0)) -= moments.row(0) / geom.diameter;
    const GaussLegendre gl = gauss_legendre(3);
    for (int e = 0; e < n; ++e) {
        const int ia = e;
        const int ib = (e + 1) % n;
        const Point& pa = geom.vertices[static_cast<std::size_t>(ia)];
        const Point& pb = geom.vertices[static_cast<std::size_t>(ib)];
        const double len = (pb - pa).norm();
        const double nx = (pb - pa).y() / len;
        for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
            const double s = gl.nodes[k];
            const Eigen::VectorXd m = basis.values(pa + s * (pb - pa)).head(kP1);
            const auto w = hermite_edge_weights(geom, e, s);
            const double scale = gl.weights[k] * len * nx;
            for (int j = 0; j < 3; ++j) {
                R.col(3 * ia + j) += scale * w[static_cast<std::size_t>(j)] * m;
                R.col(3 * ib + j) += scale * w[static_cast<std::size_t>(3 + j)] * m;
            }
        }
    }
    set.pi_dx = solve_checked(set.l2_gram.topLeftCorner(kP1, kP1), R, geom, "P1 Gram matrix");
}

std::array<double, 6> hermite_edge_weights(const ElementGeometry& geom, int edge, double s) {
    const int n = geom.num_vertices();
    const int ia = edge;
    const int ib = (edge + 1) % n;
    const Point d = geom.vertices[static_cast<std::size_t>(ib)] - geom.vertices[static_cast<std::size_t>(ia)];
    const double len = d.norm();
    const Point t = d / len;
    const double h00 = (2.0 * s - 3.0) * s * s + 1.0;
    const double h10 = ((s - 2.0) * s + 1.0) * s;
    const double h01 = (3.0 - 2.0 * s) * s * s;
    const double h11 = (s - 1.0) * s * s;
    const double ha = geom.vertex_scales[static_cast<std::size_t>(ia)];
    const double hb = geom.vertex_scales[static_cast<std::size_t>(ib)];
    return {h00, h10 * len * t.x() / ha, h10 * len * t.y() / ha,
            h01, h11 * len * t.x() / hb, h11 * len * t.y() / hb};
}

ProjectorSet build_projectors(const ElementGeometry& geom, double sigma, int degree) {
    ProjectorSet set;
    set.pi_delta = build_pidelta(geom, sigma, degree);
    set.dof_of_poly = dof_of_poly(geom);
    set.a_gram = plate_gram(geom, sigma);
    build_l2_projectors(geom, set);
    return set;
}

Eigen::MatrixXd build_local_stiffness(const ProjectorSet& p) {
    const Eigen::MatrixXd K0 = p.pi_delta.transpose() * p.a_gram * p.pi_delta;
    const auto N = K0.rows();
    const Eigen::MatrixXd R = Eigen::MatrixXd::Identity(N, N) - p.dof_of_poly * p.pi_delta;
    const double tau = K0.trace() / static_cast<double>(N);
    Eigen::MatrixXd K = K0 + tau * R.transpose() * R;
    return 0.5 * (K + K.transpose());
}

Eigen::MatrixXd build_local_mass(const ElementGeometry& geom, const ProjectorSet& p) {
    const Eigen::MatrixXd M0 = p.pi_l2.transpose() * p.l2_gram * p.pi_l2;
    const auto N = M0.rows();
    const Eigen::MatrixXd R = Eigen::MatrixXd::Identity(N, N) - p.dof_of_poly * p.pi_l2;
    Eigen::MatrixXd M = M0 + geom.area * R.transpose() * R;
    return 0.5 * (M + M.transpose());
}

Eigen::MatrixXd build_local_ax(const ProjectorSet& p) {
    const Eigen::MatrixXd Ax =
        p.pi_dx.transpose() * p.l2_gram.topLeftCorner(kP1, kP1) * p.pi_dx;
    return 0.5 * (Ax + Ax.transpose());
}

LocalMatrices build_local_matrices(const ElementGeometry& geom, const ProjectorSet& p) {
    return {build_local_stiffness(p), build_local_mass(geom, p), build_local_ax(p)};
}

Eigen::VectorXd build_local_load(const ElementGeometry& geom, const ProjectorSet& p,
                                 const SpaceTimeFunction& g, double t) {
    const ScaledMonomialBasis basis = geom.basis();
    const QuadratureRule q = polygon_quadrature(geom.vertices, 6);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(kP2);
    for (std::size_t k = 0; k < q.size(); ++k) {
        const Point& x = q.points[k];
        const double gv = g(x.x(), x.y(), t);
        if (!std::isfinite(gv))
            throw EvaluationError("load is not finite at (" + std::to_string(x.x()) + ", " +
                                  std::to_string(x.y()) + "), t = " + std::to_string(t));
        b += q.weights[k] * gv * basis.values(x);
    }
    return p.pi_l2.transpose() * b;
}

}  // namespace platevem
