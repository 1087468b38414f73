#include "platevem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <utility>

#include <Eigen/Dense>

#include "platevem/errors.hpp"

namespace platevem {

namespace {

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

double orient(const Point& a, const Point& b, const Point& c) { return cross(b - a, c - a); }

bool on_segment(const Point& a, const Point& b, const Point& p, double tol) {
    return std::min(a.x(), b.x()) - tol <= p.x() && p.x() <= std::max(a.x(), b.x()) + tol &&
           std::min(a.y(), b.y()) - tol <= p.y() && p.y() <= std::max(a.y(), b.y()) + tol;
}

bool segments_intersect(const Point& a, const Point& b, const Point& c, const Point& d, double tol) {
    const double d1 = orient(c, d, a);
    const double d2 = orient(c, d, b);
    const double d3 = orient(a, b, c);
    const double d4 = orient(a, b, d);
    if (((d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol)) &&
        ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol))) {
        return true;
    }
    const double len_tol = tol / std::max((b - a).norm(), (d - c).norm());
    if (std::abs(d1) <= tol && on_segment(c, d, a, len_tol)) return true;
    if (std::abs(d2) <= tol && on_segment(c, d, b, len_tol)) return true;
    if (std::abs(d3) <= tol && on_segment(a, b, c, len_tol)) return true;
    if (std::abs(d4) <= tol && on_segment(a, b, d, len_tol)) return true;
    return false;
}

int tag_rank(BoundaryTag t) {
    switch (t) {
        case BoundaryTag::Interior: return 0;
        case BoundaryTag::Free: return 1;
        case BoundaryTag::SimplySupported: return 2;
        case BoundaryTag::Clamped: return 3;
    }
    return 0;
}

// Keeps the part of a convex polygon with n.x <= c.
std::vector<Point> clip(const std::vector<Point>& poly, const Point& n, double c) {
    std::vector<Point> out;
    const std::size_t m = poly.size();
    out.reserve(m + 1);
    for (std::size_t i = 0; i < m; ++i) {
        const Point& p = poly[i];
        const Point& q = poly[(i + 1) % m];
        const double fp = n.dot(p) - c;
        const double fq = n.dot(q) - c;
        if (fp <= 0.0) out.push_back(p);
        if ((fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0)) {
            const double s = fp / (fp - fq);
            out.push_back(p + s * (q - p));
        }
    }
    return out;
}

}  // namespace

double Rect::diameter() const { return std::hypot(width(), height()); }

bool Rect::degenerate() const {
    return !(std::isfinite(xmin) && std::isfinite(xmax) && std::isfinite(ymin) &&
             std::isfinite(ymax)) ||
           !(xmax > xmin) || !(ymax > ymin);
}

std::string to_string(BoundaryTag tag) {
    switch (tag) {
        case BoundaryTag::Interior: return "interior";
        case BoundaryTag::SimplySupported: return "simply_supported";
        case BoundaryTag::Free: return "free";
        case BoundaryTag::Clamped: return "clamped";
    }
    return "interior";
}

BoundaryTag boundary_tag_from_string(const std::string& name) {
    if (name == "simply_supported") return BoundaryTag::SimplySupported;
    if (name == "free") return BoundaryTag::Free;
    if (name == "clamped") return BoundaryTag::Clamped;
    throw ParseError("unknown boundary tag \"" + name + "\"");
}

BoundaryTagger clamped_boundary() {
    return [](const Point&, const Rect&) { return BoundaryTag::Clamped; };
}

BoundaryTagger bridge_boundary() {
    return [](const Point& mid, const Rect& b) {
        const double tol = 1e-9 * b.diameter();
        if (std::abs(mid.x() - b.xmin) <= tol || std::abs(mid.x() - b.xmax) <= tol) {
            return BoundaryTag::SimplySupported;
        }
        return BoundaryTag::Free;
    };
}

// ---------------------------------------------------------------- geometry

double signed_area(std::span<const Point> polygon) {
    double twice = 0.0;
    const std::size_t m = polygon.size();
    for (std::size_t i = 0; i < m; ++i) twice += cross(polygon[i], polygon[(i + 1) % m]);
    return 0.5 * twice;
}

Point area_centroid(std::span<const Point> polygon) {
    // Shifted to the first vertex to limit cancellation on far-off cells.
    const Point o = polygon[0];
    double twice = 0.0;
    Point acc = Point::Zero();
    const std::size_t m = polygon.size();
    for (std::size_t i = 0; i < m; ++i) {
        const Point p = polygon[i] - o;
        const Point q = polygon[(i + 1) % m] - o;
        const double w = cross(p, q);
        twice += w;
        acc += w * (p + q);
    }
    return o + acc / (3.0 * twice);
}

double polygon_diameter(std::span<const Point> polygon) {
    double d = 0.0;
    for (std::size_t i = 0; i < polygon.size(); ++i)
        for (std::size_t j = i + 1; j < polygon.size(); ++j)
            d = std::max(d, (polygon[i] - polygon[j]).norm());
    return d;
}

bool is_simple_polygon(std::span<const Point> polygon) {
    const std::size_t m = polygon.size();
    if (m < 3) return false;
    const double h = polygon_diameter(polygon);
    if (!(h > 0.0)) return false;
    const double tol = 1e-12 * h * h;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            if ((polygon[i] - polygon[j]).norm() <= 1e-12 * h) return false;
    for (std::size_t i = 0; i < m; ++i) {
        const Point& a = polygon[i];
        const Point& b = polygon[(i + 1) % m];
        // Consecutive edges folding back onto each other.
        const Point& c = polygon[(i + 2) % m];
        if (std::abs(orient(a, b, c)) <= tol && (b - a).dot(c - b) < 0.0) return false;
        for (std::size_t j = i + 2; j < m; ++j) {
            if (i == 0 && j == m - 1) continue;
            if (segments_intersect(a, b, polygon[j], polygon[(j + 1) % m], tol)) return false;
        }
    }
    return true;
}

int count_reflex_vertices(std::span<const Point> polygon) {
    const std::size_t m = polygon.size();
    const double h = polygon_diameter(polygon);
    int count = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const Point& prev = polygon[(i + m - 1) % m];
        const Point& cur = polygon[i];
        const Point& next = polygon[(i + 1) % m];
        if (orient(prev, cur, next) < -1e-12 * h * h) ++count;
    }
    return count;
}

bool is_convex_polygon(std::span<const Point> polygon) {
    return count_reflex_vertices(polygon) == 0;
}

std::vector<Point> polygon_kernel(std::span<const Point> polygon) {
    const std::size_t m = polygon.size();
    double xmin = polygon[0].x(), xmax = xmin, ymin = polygon[0].y(), ymax = ymin;
    for (const Point& p : polygon) {
        xmin = std::min(xmin, p.x());
        xmax = std::max(xmax, p.x());
        ymin = std::min(ymin, p.y());
        ymax = std::max(ymax, p.y());
    }
    std::vector<Point> kernel{Point(xmin, ymin), Point(xmax, ymin), Point(xmax, ymax),
                              Point(xmin, ymax)};
    for (std::size_t i = 0; i < m && !kernel.empty(); ++i) {
        const Point t = polygon[(i + 1) % m] - polygon[i];
        const Point n = Point(t.y(), -t.x()).normalized();
        kernel = clip(kernel, n, n.dot(polygon[i]));
    }
    if (kernel.size() < 3 || signed_area(kernel) <= 0.0) return {};
    return kernel;
}

double kernel_inradius(std::span<const Point> polygon) {
    const std::size_t m = polygon.size();
    std::vector<Point> normals(m);
    std::vector<double> offsets(m);
    for (std::size_t i = 0; i < m; ++i) {
        const Point t = polygon[(i + 1) % m] - polygon[i];
        normals[i] = Point(t.y(), -t.x()).normalized();
        offsets[i] = normals[i].dot(polygon[i]);
    }
    const double h = polygon_diameter(polygon);
    const double tol = 1e-12 * h;
    // Chebyshev centre of {n_i.x <= c_i}: the optimum of the 3-variable LP
    // max r s.t. n_i.x + r <= c_i sits on a vertex cut by three constraints.
    double best = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            for (std::size_t k = j + 1; k < m; ++k) {
                Eigen::Matrix3d a;
                a << normals[i].x(), normals[i].y(), 1.0, normals[j].x(), normals[j].y(), 1.0,
                    normals[k].x(), normals[k].y(), 1.0;
                const Eigen::Vector3d rhs(offsets[i], offsets[j], offsets[k]);
                Eigen::FullPivLU<Eigen::Matrix3d> lu(a);
                if (!lu.isInvertible()) continue;
                const Eigen::Vector3d sol = lu.solve(rhs);
                const double r = sol.z();
                if (!(r > best)) continue;
                const Point x(sol.x(), sol.y());
                bool feasible = true;
                for (std::size_t l = 0; l < m && feasible; ++l)
                    feasible = normals[l].dot(x) + r <= offsets[l] + tol;
                if (feasible) best = r;
            }
    return best;
}

CellRegularity cell_regularity(std::span<const Point> polygon) {
    const double h = polygon_diameter(polygon);
    double min_edge = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < polygon.size(); ++i)
        min_edge = std::min(min_edge, (polygon[(i + 1) % polygon.size()] - polygon[i]).norm());
    return {min_edge / h, kernel_inradius(polygon) / h};
}

RegularityReport check_regularity(const PolygonalMesh& mesh, double gamma) {
    RegularityReport report;
    report.gamma = gamma;
    report.min_edge_ratio = std::numeric_limits<double>::infinity();
    report.min_star_radius_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const auto pts = mesh.cell_points(static_cast<int>(c));
        const CellRegularity r = cell_regularity(pts);
        report.min_edge_ratio = std::min(report.min_edge_ratio, r.edge_ratio);
        report.min_star_radius_ratio = std::min(report.min_star_radius_ratio, r.star_radius_ratio);
    }
    report.passes = report.min_edge_ratio >= gamma && report.min_star_radius_ratio >= gamma;
    return report;
}

// -------------------------------------------------------------------- mesh

std::vector<Point> PolygonalMesh::cell_points(int cell) const {
    const auto& ids = cells_[static_cast<std::size_t>(cell)].vertices;
    std::vector<Point> pts;
    pts.reserve(ids.size());
    for (int v : ids) pts.push_back(vertices_[static_cast<std::size_t>(v)]);
    return pts;
}

bool PolygonalMesh::operator==(const PolygonalMesh& other) const {
    if (!(bounds_ == other.bounds_) || vertices_.size() != other.vertices_.size() ||
        cells_.size() != other.cells_.size() || edges_.size() != other.edges_.size())
        return false;
    for (std::size_t i = 0; i < vertices_.size(); ++i)
        if (vertices_[i] != other.vertices_[i]) return false;
    for (std::size_t c = 0; c < cells_.size(); ++c)
        if (cells_[c].vertices != other.cells_[c].vertices) return false;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        const Edge& a = edges_[e];
        const Edge& b = other.edges_[e];
        if (a.v0 != b.v0 || a.v1 != b.v1 || a.cell0 != b.cell0 || a.cell1 != b.cell1 ||
            a.tag != b.tag)
            return false;
    }
    return true;
}

template <class EdgeTagFn>
PolygonalMesh PolygonalMesh::build(std::vector<Point> vertices,
                                   std::vector<std::vector<int>> cells, Rect bounds,
                                   EdgeTagFn&& tag_of) {
    if (bounds.degenerate()) throw ValidationError("degenerate domain bounds");
    if (cells.empty()) throw ValidationError("mesh has no cells");
    const int nv = static_cast<int>(vertices.size());
    for (int v = 0; v < nv; ++v)
        if (!vertices[static_cast<std::size_t>(v)].allFinite())
            throw ValidationError("vertex " + std::to_string(v) + " has non-finite coordinates");

    PolygonalMesh mesh;
    mesh.bounds_ = bounds;
    mesh.cells_.resize(cells.size());
    std::vector<int> use_count(static_cast<std::size_t>(nv), 0);

    for (std::size_t c = 0; c < cells.size(); ++c) {
        auto& ids = cells[c];
        const std::string where = "cell " + std::to_string(c);
        if (ids.size() < 3) throw ValidationError(where + " has fewer than 3 vertices");
        for (int v : ids) {
            if (v < 0 || v >= nv)
                throw ValidationError(where + " references vertex id " + std::to_string(v) +
                                      " outside [0, " + std::to_string(nv) + ")");
            ++use_count[static_cast<std::size_t>(v)];
        }
        std::vector<int> sorted = ids;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw ValidationError(where + " repeats a vertex");

        std::vector<Point> pts;
        pts.reserve(ids.size());
        for (int v : ids) pts.push_back(vertices[static_cast<std::size_t>(v)]);
        Cell& cell = mesh.cells_[c];
        cell.area = signed_area(pts);
        if (!(cell.area > 0.0)) throw ValidationError(where + " is clockwise or has zero area");
        if (!is_simple_polygon(pts)) throw ValidationError(where + " is not a simple polygon");
        cell.vertices = std::move(ids);
        cell.centroid = area_centroid(pts);
        cell.diameter = polygon_diameter(pts);
        mesh.mesh_size_ = std::max(mesh.mesh_size_, cell.diameter);
    }
    for (int v = 0; v < nv; ++v)
        if (use_count[static_cast<std::size_t>(v)] == 0)
            throw ValidationError("vertex " + std::to_string(v) + " belongs to no cell");

    // Edge-cell adjacency; first appearance fixes the edge order.
    std::map<std::pair<int, int>, int> edge_index;
    for (std::size_t c = 0; c < mesh.cells_.size(); ++c) {
        const auto& ids = mesh.cells_[c].vertices;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const int a = ids[i];
            const int b = ids[(i + 1) % ids.size()];
            const auto key = std::minmax(a, b);
            auto [it, inserted] = edge_index.emplace(key, static_cast<int>(mesh.edges_.size()));
            if (inserted) {
                Edge e;
                e.v0 = a;
                e.v1 = b;
                e.cell0 = static_cast<int>(c);
                mesh.edges_.push_back(e);
                continue;
            }
            Edge& e = mesh.edges_[static_cast<std::size_t>(it->second)];
            if (e.cell1 >= 0)
                throw ValidationError("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                                      ") is shared by more than two cells");
            if (e.v0 == a)
                throw ValidationError("cells " + std::to_string(e.cell0) + " and " +
                                      std::to_string(c) + " traverse edge (" + std::to_string(a) +
                                      ", " + std::to_string(b) + ") in the same direction");
            e.cell1 = static_cast<int>(c);
        }
    }

    const double tol = 1e-9 * bounds.diameter();
    auto on_side = [&](const Point& p) {
        return std::abs(p.x() - bounds.xmin) <= tol || std::abs(p.x() - bounds.xmax) <= tol ||
               std::abs(p.y() - bounds.ymin) <= tol || std::abs(p.y() - bounds.ymax) <= tol;
    };
    for (Edge& e : mesh.edges_) {
        if (!e.on_boundary()) continue;
        const Point& p = vertices[static_cast<std::size_t>(e.v0)];
        const Point& q = vertices[static_cast<std::size_t>(e.v1)];
        const Point mid = 0.5 * (p + q);
        if (!on_side(p) || !on_side(q) || !on_side(mid))
            throw ValidationError("edge (" + std::to_string(e.v0) + ", " + std::to_string(e.v1) +
                                  ") has a single cell but is not on the domain boundary");
        e.tag = tag_of(e, mid);
        if (e.tag == BoundaryTag::Interior)
            throw ValidationError("boundary edge (" + std::to_string(e.v0) + ", " +
                                  std::to_string(e.v1) + ") carries no boundary tag");
    }

    double total = 0.0;
    for (const Cell& c : mesh.cells_) total += c.area;
    if (std::abs(total - bounds.area()) > 1e-10 * bounds.area())
        throw ValidationError("cell areas sum to " + std::to_string(total) +
                              " but the domain area is " + std::to_string(bounds.area()));

    mesh.vertex_scale_.assign(static_cast<std::size_t>(nv), 0.0);
    for (const Cell& c : mesh.cells_)
        for (int v : c.vertices) mesh.vertex_scale_[static_cast<std::size_t>(v)] += c.diameter;
    for (int v = 0; v < nv; ++v)
        mesh.vertex_scale_[static_cast<std::size_t>(v)] /= use_count[static_cast<std::size_t>(v)];

    mesh.vertex_tag_.assign(static_cast<std::size_t>(nv), BoundaryTag::Interior);
    for (const Edge& e : mesh.edges_) {
        for (int v : {e.v0, e.v1}) {
            auto& t = mesh.vertex_tag_[static_cast<std::size_t>(v)];
            if (tag_rank(e.tag) > tag_rank(t)) t = e.tag;
        }
    }
    mesh.vertices_ = std::move(vertices);
    return mesh;
}

PolygonalMesh PolygonalMesh::from_cells(std::vector<Point> vertices,
                                        std::vector<std::vector<int>> cells, Rect bounds,
                                        const BoundaryTagger& tagger) {
    return build(std::move(vertices), std::move(cells), bounds,
                 [&](const Edge&, const Point& mid) { return tagger(mid, bounds); });
}

PolygonalMesh PolygonalMesh::from_tagged_edges(std::vector<Point> vertices,
                                               std::vector<std::vector<int>> cells, Rect bounds,
                                               std::span<const TaggedEdge> boundary) {
    std::map<std::pair<int, int>, BoundaryTag> tags;
    for (const TaggedEdge& t : boundary) tags[std::minmax(t.v0, t.v1)] = t.tag;
    PolygonalMesh mesh = build(std::move(vertices), std::move(cells), bounds,
                               [&](const Edge& e, const Point&) {
                                   const auto it = tags.find(std::minmax(e.v0, e.v1));
                                   return it == tags.end() ? BoundaryTag::Interior : it->second;
                               });
    std::set<std::pair<int, int>> boundary_edges;
    for (const Edge& e : mesh.edges_)
        if (e.on_boundary()) boundary_edges.insert(std::minmax(e.v0, e.v1));
    for (const auto& [key, tag] : tags)
        if (!boundary_edges.contains(key))
            throw ValidationError("tagged edge [" + std::to_string(key.first) + ", " +
                                  std::to_string(key.second) + "] is not a boundary edge");
    return mesh;
}

}  // namespace platevem
