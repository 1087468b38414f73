#include "platevem/assembly.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "platevem/errors.hpp"

namespace platevem {

ProblemKind problem_kind_from_string(const std::string& name) {
    if (name == "clamped") return ProblemKind::Clamped;
    if (name == "bridge" || name == "bridge_mixed" || name == "bridge-mixed") return ProblemKind::BridgeMixed;
    throw InvalidArgument("unknown problem kind \"" + name + "\"");
}

std::string to_string(ProblemKind kind) {
    return kind == ProblemKind::Clamped ? "clamped" : "bridge_mixed";
}

DofMap build_dof_map(const PolygonalMesh& mesh, ProblemKind kind) {
    const std::size_t nv = mesh.num_vertices();
    std::vector<std::array<bool, 3>> fixed(nv, {false, false, false});
    bool any_supported = false;
    for (const Edge& e : mesh.edges()) {
        if (!e.on_boundary()) continue;
        if (e.tag == BoundaryTag::Interior)
            throw ConfigurationError("boundary edge [" + std::to_string(e.v0) + ", " +
                                     std::to_string(e.v1) + "] carries no boundary tag");
        if (kind == ProblemKind::Clamped && e.tag != BoundaryTag::Clamped)
            throw ConfigurationError("clamped problem on a mesh with " + to_string(e.tag) +
                                     " boundary edges");
        if (e.tag != BoundaryTag::Free) any_supported = true;
    }
    if (!any_supported && mesh.num_cells() > 0)
        throw ConfigurationError("no essential boundary: the plate is unconstrained");

    for (const Edge& e : mesh.edges()) {
        if (!e.on_boundary()) continue;
        const Point t = mesh.vertices()[static_cast<std::size_t>(e.v1)] -
                        mesh.vertices()[static_cast<std::size_t>(e.v0)];
        for (int v : {e.v0, e.v1}) {
            auto& f = fixed[static_cast<std::size_t>(v)];
            const BoundaryTag vt = mesh.vertex_tag(v);
            if (vt == BoundaryTag::Clamped) {
                f = {true, true, true};
            } else if (vt == BoundaryTag::SimplySupported && e.tag == BoundaryTag::SimplySupported) {
                // u = 0 along the edge also kills the tangential derivative.
                f[kValue] = true;
                f[std::abs(t.y()) >= std::abs(t.x()) ? kGradY : kGradX] = true;
            }
        }
    }

    DofMap map;
    map.free_index.assign(3 * nv, -1);
    for (std::size_t v = 0; v < nv; ++v)
        for (int s = 0; s < 3; ++s)
            if (!fixed[v][static_cast<std::size_t>(s)]) {
                const int g = DofMap::global(static_cast<int>(v), s);
                map.free_index[static_cast<std::size_t>(g)] = static_cast<int>(map.global_of_free.size());
                map.global_of_free.push_back(g);
            }
    return map;
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

void scatter(Triplets& out, const Eigen::MatrixXd& local, const std::vector<int>& free_of_local,
             double factor) {
    for (std::size_t i = 0; i < free_of_local.size(); ++i) {
        if (free_of_local[i] < 0) continue;
        for (std::size_t j = 0; j < free_of_local.size(); ++j) {
            if (free_of_local[j] < 0) continue;
            const double v = factor * local(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (v != 0.0) out.emplace_back(free_of_local[i], free_of_local[j], v);
        }
    }
}

SparseMatrix compress(int n, const Triplets& t) {
    SparseMatrix m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    m.prune([](Eigen::Index, Eigen::Index, double v) { return v != 0.0; });
    m.makeCompressed();
    return m;
}

std::vector<int> free_of_local(const DofMap& dofs, const std::vector<int>& global) {
    std::vector<int> f;
    f.reserve(global.size());
    for (int g : global) f.push_back(dofs.free_index[static_cast<std::size_t>(g)]);
    return f;
}

}  // namespace

GlobalSystem assemble(std::shared_ptr<const PolygonalMesh> mesh, DofMap dofs, double sigma,
                      const SpaceFunction& delta) {
    if (!mesh) throw InvalidArgument("assemble needs a mesh");
    if (dofs.num_total() != 3 * static_cast<int>(mesh->num_vertices()))
        throw InvalidArgument("DoF map does not match the mesh");
    GlobalSystem sys;
    sys.mesh = mesh;
    sys.dofs = std::move(dofs);
    sys.sigma = sigma;
    const int n = sys.dofs.num_free();

    Triplets tm, tmd, ta, tax;
    sys.elements.reserve(mesh->num_cells());
    for (std::size_t c = 0; c < mesh->num_cells(); ++c) {
        ElementData el;
        try {
            el.geom = ElementGeometry::from_mesh(*mesh, static_cast<int>(c));
            el.proj = build_projectors(el.geom, sigma);
            el.local = build_local_matrices(el.geom, el.proj);
        } catch (const ElementKernelError&) {
            throw;
        } catch (const InvalidArgument&) {
            throw;
        } catch (const std::exception& ex) {
            throw ElementKernelError(ex.what(), static_cast<int>(c));
        }
        el.quad = polygon_quadrature(el.geom.vertices, 6);
        {
            const ScaledMonomialBasis basis = el.geom.basis();
            el.weighted_basis.resize(kP2, static_cast<Eigen::Index>(el.quad.size()));
            for (std::size_t q = 0; q < el.quad.size(); ++q)
                el.weighted_basis.col(static_cast<Eigen::Index>(q)) =
                    el.quad.weights[q] * basis.values(el.quad.points[q]);
        }
        for (int v : mesh->cells()[c].vertices)
            for (int s = 0; s < 3; ++s) el.global_dofs.push_back(DofMap::global(v, s));
        const Point& xc = el.geom.centroid;
        const double d = delta ? delta(xc.x(), xc.y()) : 0.0;
        if (!std::isfinite(d)) throw EvaluationError("damping coefficient is not finite in cell " + std::to_string(c));
        sys.cell_delta.push_back(d);
        const auto fl = free_of_local(sys.dofs, el.global_dofs);
        scatter(tm, el.local.M, fl, 1.0);
        scatter(tmd, el.local.M, fl, d);
        scatter(ta, el.local.K, fl, 1.0);
        scatter(tax, el.local.Ax, fl, 1.0);
        sys.elements.push_back(std::move(el));
    }
    sys.M = compress(n, tm);
    sys.Mdelta = compress(n, tmd);
    sys.A = compress(n, ta);
    sys.Ax = compress(n, tax);
    return sys;
}

GlobalSystem assemble(const PolygonalMesh& mesh, ProblemKind kind, double sigma,
                      const SpaceFunction& delta) {
    auto shared = std::make_shared<const PolygonalMesh>(mesh);
    DofMap dofs = build_dof_map(*shared, kind);
    return assemble(std::move(shared), std::move(dofs), sigma, delta);
}

Eigen::VectorXd assemble_load(const GlobalSystem& system, const SpaceTimeFunction& g, double t) {
    Eigen::VectorXd F = Eigen::VectorXd::Zero(system.size());
    for (const ElementData& el : system.elements) {
        Eigen::VectorXd samples(static_cast<Eigen::Index>(el.quad.size()));
        for (std::size_t q = 0; q < el.quad.size(); ++q) {
            const Point& x = el.quad.points[q];
            const double gv = g(x.x(), x.y(), t);
            if (!std::isfinite(gv))
                throw EvaluationError("load is not finite at (" + std::to_string(x.x()) + ", " +
                                      std::to_string(x.y()) + "), t = " + std::to_string(t));
            samples(static_cast<Eigen::Index>(q)) = gv;
        }
        const Eigen::VectorXd f = el.proj.pi_l2.transpose() * (el.weighted_basis * samples);
        for (std::size_t i = 0; i < el.global_dofs.size(); ++i) {
            const int k = system.dofs.free_index[static_cast<std::size_t>(el.global_dofs[i])];
            if (k >= 0) F(k) += f(static_cast<Eigen::Index>(i));
        }
    }
    return F;
}

Eigen::VectorXd interpolate(const GlobalSystem& system, const SpaceFunction& u,
                            const GradientFunction& grad_u) {
    const PolygonalMesh& mesh = *system.mesh;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(system.size());
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        const Point& p = mesh.vertices()[v];
        const double hv = mesh.vertex_scale(static_cast<int>(v));
        const Eigen::Vector2d g = grad_u(p.x(), p.y());
        const double vals[3] = {u(p.x(), p.y()), hv * g.x(), hv * g.y()};
        for (int s = 0; s < 3; ++s) {
            const int gi = DofMap::global(static_cast<int>(v), s);
            const int k = system.dofs.free_index[static_cast<std::size_t>(gi)];
            if (k >= 0) {
                out(k) = vals[s];
            } else if (std::abs(vals[s]) > 1e-8) {
                throw DataIncompatibilityError("vertex " + std::to_string(v) + " slot " + std::to_string(s) +
                                               " is fixed to zero but the data gives " +
                                               std::to_string(vals[s]));
            }
        }
    }
    return out;
}

Eigen::VectorXd expand_to_full(const DofMap& dofs, const Eigen::VectorXd& free) {
    if (free.size() != dofs.num_free()) throw InvalidArgument("free vector has the wrong length");
    Eigen::VectorXd full = Eigen::VectorXd::Zero(dofs.num_total());
    for (int k = 0; k < dofs.num_free(); ++k) full(dofs.global_of_free[static_cast<std::size_t>(k)]) = free(k);
    return full;
}

Eigen::VectorXd local_dofs(const GlobalSystem& system, int cell, const Eigen::VectorXd& free) {
    const ElementData& el = system.elements.at(static_cast<std::size_t>(cell));
    Eigen::VectorXd out(static_cast<Eigen::Index>(el.global_dofs.size()));
    for (std::size_t i = 0; i < el.global_dofs.size(); ++i) {
        const int k = system.dofs.free_index[static_cast<std::size_t>(el.global_dofs[i])];
        out(static_cast<Eigen::Index>(i)) = k >= 0 ? free(k) : 0.0;
    }
    return out;
}

void write_matrix_coo(const SparseMatrix& matrix, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out.precision(std::numeric_limits<double>::max_digits10);
    out << "# row col value\n";
    for (Eigen::Index j = 0; j < matrix.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(matrix, j); it; ++it)
            out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

}  // namespace platevem
