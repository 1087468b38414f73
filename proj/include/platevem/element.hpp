#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "platevem/mesh.hpp"
#include "platevem/quadrature.hpp"

namespace platevem {

/// Number of scaled monomials of degree <= 2.
inline constexpr int kP2 = 6;
inline constexpr int kP1 = 3;

/// Slots of a vertex in a DoF vector.
enum DofSlot : int { kValue = 0, kGradX = 1, kGradY = 2 };

/// Geometry of one polygon seen by the element kernels. The gradient DoFs of
/// vertex i are stored multiplied by vertex_scales[i].
struct ElementGeometry {
    std::vector<Point> vertices;  // counter-clockwise
    std::vector<double> vertex_scales;
    Point centroid = Point::Zero();
    double diameter = 0.0;
    double area = 0.0;
    int cell_id = -1;

    /// Vertex scales default to the polygon diameter.
    static ElementGeometry from_polygon(std::vector<Point> vertices,
                                        std::vector<double> vertex_scales = {}, int cell_id = -1);
    static ElementGeometry from_mesh(const PolygonalMesh& mesh, int cell);

    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_dofs() const { return 3 * num_vertices(); }
    ScaledMonomialBasis basis(int degree = 2) const { return {centroid, diameter, degree}; }
};

/// Local DoF layout for the lowest-order C1 space: three slots per vertex,
/// no edge or interior moments.
struct DofLayout {
    int degree = 2;
    int num_vertices = 0;
    int vertex_slots() const { return 3 * num_vertices; }
    int edge_value_moments() const { return degree >= 4 ? degree - 3 : 0; }
    int edge_normal_moments() const { return degree >= 3 ? degree - 2 : 0; }
    int interior_moments() const { return degree >= 4 ? (degree - 3) * (degree - 2) / 2 : 0; }
    int total() const;

    static DofLayout for_element(const ElementGeometry& geom, int degree = 2);
};

struct ProjectorSet {
    Eigen::MatrixXd pi_delta;     // 6 x N
    Eigen::MatrixXd pi_l2;        // 6 x N
    Eigen::MatrixXd pi_dx;        // 3 x N, coefficients in the degree-1 basis
    Eigen::MatrixXd dof_of_poly;  // N x 6
    Eigen::MatrixXd a_gram;       // 6 x 6, A^E(m_a, m_b)
    Eigen::MatrixXd l2_gram;      // 6 x 6, (m_a, m_b)_E
};

struct LocalMatrices {
    Eigen::MatrixXd K;
    Eigen::MatrixXd M;
    Eigen::MatrixXd Ax;
};

/// DoF values of each scaled monomial (columns).
Eigen::MatrixXd dof_of_poly(const ElementGeometry& geom);

/// Plate energy form of two polynomials with constant Hessians over the cell.
Eigen::MatrixXd plate_gram(const ElementGeometry& geom, double sigma);

/// L2 Gram matrix of the scaled monomials of degree <= 2.
Eigen::MatrixXd l2_gram(const ElementGeometry& geom);

/// A^E(v, m_a) for every DoF basis function v (columns) and every degree-2
/// monomial (rows 3..5; rows 0..2 are zero), evaluated from boundary data.
Eigen::MatrixXd plate_rhs(const ElementGeometry& geom, double sigma);

/// Energy projection. Throws ElementKernelError for degenerate cells and
/// InvalidArgument for degree != 2.
Eigen::MatrixXd build_pidelta(const ElementGeometry& geom, double sigma, int degree = 2);

/// Fills pi_l2, pi_dx and l2_gram of a set whose pi_delta is built.
void build_l2_projectors(const ElementGeometry& geom, ProjectorSet& set);

ProjectorSet build_projectors(const ElementGeometry& geom, double sigma, int degree = 2);

Eigen::MatrixXd build_local_stiffness(const ProjectorSet& p);
Eigen::MatrixXd build_local_mass(const ElementGeometry& geom, const ProjectorSet& p);
Eigen::MatrixXd build_local_ax(const ProjectorSet& p);

LocalMatrices build_local_matrices(const ElementGeometry& geom, const ProjectorSet& p);

using SpaceTimeFunction = std::function<double(double x, double y, double t)>;

/// F_i = integral of g * Pi^k phi_i over the cell.
Eigen::VectorXd build_local_load(const ElementGeometry& geom, const ProjectorSet& p,
                                 const SpaceTimeFunction& g, double t);

/// Coefficients of the cubic Hermite trace on edge (i, i+1) in terms of the
/// six local DoFs of its endpoints, at parameter s in [0, 1].
std::array<double, 6> hermite_edge_weights(const ElementGeometry& geom, int edge, double s);

}  // namespace platevem
