#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "platevem/element.hpp"
#include "platevem/mesh.hpp"

namespace platevem {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class ProblemKind { Clamped, BridgeMixed };

ProblemKind problem_kind_from_string(const std::string& name);
std::string to_string(ProblemKind kind);

/// Global numbering 3 * vertex + slot. Fixed slots carry homogeneous
/// essential conditions and are eliminated from every assembled object.
struct DofMap {
    std::vector<int> free_index;      // per global DoF, -1 when fixed
    std::vector<int> global_of_free;  // inverse map

    static int global(int vertex, int slot) { return 3 * vertex + slot; }
    int num_total() const { return static_cast<int>(free_index.size()); }
    int num_free() const { return static_cast<int>(global_of_free.size()); }
    bool is_fixed(int g) const { return free_index[static_cast<std::size_t>(g)] < 0; }
};

/// Clamped: every boundary vertex fixes all three slots (all boundary edges
/// must be tagged clamped). BridgeMixed: vertices on simply supported edges fix
/// the value and the tangential derivative, clamped vertices fix everything,
/// free vertices fix nothing.
DofMap build_dof_map(const PolygonalMesh& mesh, ProblemKind kind);

struct ElementData {
    ElementGeometry geom;
    ProjectorSet proj;
    LocalMatrices local;
    std::vector<int> global_dofs;  // per local DoF
    QuadratureRule quad;           // cell rule used for loads and errors
    Eigen::MatrixXd weighted_basis;  // 6 x quad.size(), w_q m_a(x_q)
};

using SpaceFunction = std::function<double(double x, double y)>;

struct GlobalSystem {
    std::shared_ptr<const PolygonalMesh> mesh;
    DofMap dofs;
    double sigma = 0.3;
    SparseMatrix M;       // mass
    SparseMatrix Mdelta;  // mass weighted by the damping coefficient per cell
    SparseMatrix A;       // plate stiffness
    SparseMatrix Ax;      // axial form
    std::vector<double> cell_delta;
    std::vector<ElementData> elements;

    int size() const { return dofs.num_free(); }
};

/// Assembles all free-DoF matrices. Element failures are rethrown as
/// ElementKernelError naming the cell.
GlobalSystem assemble(std::shared_ptr<const PolygonalMesh> mesh, DofMap dofs, double sigma,
                      const SpaceFunction& delta);
GlobalSystem assemble(const PolygonalMesh& mesh, ProblemKind kind, double sigma,
                      const SpaceFunction& delta);

Eigen::VectorXd assemble_load(const GlobalSystem& system, const SpaceTimeFunction& g, double t);

using GradientFunction = std::function<Eigen::Vector2d(double x, double y)>;

/// Applies the DoF functionals to a smooth function. Fixed slots must vanish
/// to 1e-8, otherwise DataIncompatibilityError.
Eigen::VectorXd interpolate(const GlobalSystem& system, const SpaceFunction& u,
                            const GradientFunction& grad_u);

/// All 3 * N_vertices DoFs, zeros in the fixed slots.
Eigen::VectorXd expand_to_full(const DofMap& dofs, const Eigen::VectorXd& free);

/// Local DoF vector of one element.
Eigen::VectorXd local_dofs(const GlobalSystem& system, int cell, const Eigen::VectorXd& free);

/// "row col value" lines, 0-based, one per stored entry in column-major order.
void write_matrix_coo(const SparseMatrix& matrix, const std::string& path);

}  // namespace platevem
