#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace platevem {

using Point = Eigen::Vector2d;

/// Axis-aligned rectangle [xmin, xmax] x [ymin, ymax].
struct Rect {
    double xmin = 0.0;
    double ymin = 0.0;
    double xmax = 1.0;
    double ymax = 1.0;

    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
    double area() const { return width() * height(); }
    double diameter() const;
    bool degenerate() const;
    bool operator==(const Rect&) const = default;
};

enum class BoundaryTag : std::uint8_t { Interior, SimplySupported, Free, Clamped };

std::string to_string(BoundaryTag tag);
/// Accepts the JSON spellings "simply_supported", "free", "clamped".
BoundaryTag boundary_tag_from_string(const std::string& name);

/// Classifies a boundary edge from its midpoint.
using BoundaryTagger = std::function<BoundaryTag(const Point& midpoint, const Rect& bounds)>;

BoundaryTagger clamped_boundary();
/// Hinged short edges x = xmin, xmax and free long edges y = ymin, ymax.
BoundaryTagger bridge_boundary();

struct Cell {
    std::vector<int> vertices;  // counter-clockwise
    double diameter = 0.0;      // h_E
    Point centroid = Point::Zero();
    double area = 0.0;
};

struct Edge {
    int v0 = -1;
    int v1 = -1;
    int cell0 = -1;
    int cell1 = -1;  // -1 on the boundary
    BoundaryTag tag = BoundaryTag::Interior;

    bool on_boundary() const { return cell1 < 0; }
};

/// Explicit boundary classification of one edge, used by the file reader.
struct TaggedEdge {
    int v0;
    int v1;
    BoundaryTag tag;
};

/// Polygonal decomposition of a rectangle. Immutable once built; every
/// factory validates the full set of mesh invariants.
class PolygonalMesh {
public:
    PolygonalMesh() = default;

    static PolygonalMesh from_cells(std::vector<Point> vertices,
                                    std::vector<std::vector<int>> cells, Rect bounds,
                                    const BoundaryTagger& tagger = clamped_boundary());

    static PolygonalMesh from_tagged_edges(std::vector<Point> vertices,
                                           std::vector<std::vector<int>> cells, Rect bounds,
                                           std::span<const TaggedEdge> boundary);

    const std::vector<Point>& vertices() const { return vertices_; }
    const std::vector<Cell>& cells() const { return cells_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const Rect& bounds() const { return bounds_; }

    std::size_t num_vertices() const { return vertices_.size(); }
    std::size_t num_cells() const { return cells_.size(); }

    /// h = max_E h_E.
    double mesh_size() const { return mesh_size_; }
    /// h_Xi: mean diameter of the cells touching the vertex.
    double vertex_scale(int v) const { return vertex_scale_[static_cast<std::size_t>(v)]; }
    /// Strongest tag of the boundary edges at a vertex
    /// (Clamped > SimplySupported > Free > Interior).
    BoundaryTag vertex_tag(int v) const { return vertex_tag_[static_cast<std::size_t>(v)]; }

    std::vector<Point> cell_points(int cell) const;

    bool operator==(const PolygonalMesh& other) const;

private:
    template <class EdgeTagFn>
    static PolygonalMesh build(std::vector<Point> vertices, std::vector<std::vector<int>> cells,
                               Rect bounds, EdgeTagFn&& tag_of);

    std::vector<Point> vertices_;
    std::vector<Cell> cells_;
    std::vector<Edge> edges_;
    Rect bounds_;
    double mesh_size_ = 0.0;
    std::vector<double> vertex_scale_;
    std::vector<BoundaryTag> vertex_tag_;
};

// ---------------------------------------------------------------- geometry

double signed_area(std::span<const Point> polygon);
Point area_centroid(std::span<const Point> polygon);
double polygon_diameter(std::span<const Point> polygon);
bool is_simple_polygon(std::span<const Point> polygon);
bool is_convex_polygon(std::span<const Point> polygon);
/// Number of vertices whose interior angle exceeds pi (CCW input).
int count_reflex_vertices(std::span<const Point> polygon);

/// Kernel of a CCW polygon (intersection of the inner half-planes of its
/// edges). Empty when the polygon is not star-shaped.
std::vector<Point> polygon_kernel(std::span<const Point> polygon);

/// Radius of the largest disc inside the kernel of a CCW polygon.
double kernel_inradius(std::span<const Point> polygon);

// -------------------------------------------------------------- regularity

struct RegularityReport {
    double min_edge_ratio = 0.0;         // min_E (min edge / h_E)
    double min_star_radius_ratio = 0.0;  // min_E (kernel inradius / h_E)
    double gamma = 0.0;
    bool passes = false;
};

struct CellRegularity {
    double edge_ratio;
    double star_radius_ratio;
};

CellRegularity cell_regularity(std::span<const Point> polygon);
RegularityReport check_regularity(const PolygonalMesh& mesh, double gamma);

// -------------------------------------------------------------- generators

PolygonalMesh generate_square_grid(int n, const Rect& bounds,
                                   const BoundaryTagger& tagger = clamped_boundary());

/// Square grid whose interior vertices move by at most amplitude * cell size
/// in each direction. Deterministic in `seed`.
PolygonalMesh generate_distorted_grid(int n, const Rect& bounds, double amplitude,
                                      std::uint64_t seed,
                                      const BoundaryTagger& tagger = clamped_boundary());

/// Clipped Voronoi diagram of uniformly drawn seeds after Lloyd smoothing.
PolygonalMesh generate_voronoi(int n_seeds, const Rect& bounds, int lloyd_iterations,
                               std::uint64_t seed,
                               const BoundaryTagger& tagger = clamped_boundary());

PolygonalMesh voronoi_from_seeds(std::vector<Point> seeds, const Rect& bounds,
                                 int lloyd_iterations,
                                 const BoundaryTagger& tagger = clamped_boundary(),
                                 std::uint64_t jitter_seed = 0);

/// Each grid square is split by a zigzag into two hexagons with one reflex
/// vertex each.
PolygonalMesh generate_nonconvex_grid(int n, const Rect& bounds,
                                      const BoundaryTagger& tagger = clamped_boundary());

/// Hexagon-dominant tiling (Voronoi of a staggered lattice, n cells across)
/// with clipped half cells along the boundary.
PolygonalMesh generate_regular_polygon_grid(int n, const Rect& bounds,
                                            const BoundaryTagger& tagger = clamped_boundary());

enum class MeshFamily { Square, Distorted, Voronoi, NonConvex, RegularPolygon };

MeshFamily mesh_family_from_string(const std::string& name);
std::string to_string(MeshFamily family);

/// One refinement level of a family; `n` is cells per side (n^2 seeds for
/// Voronoi).
PolygonalMesh make_family_mesh(MeshFamily family, int n, const Rect& bounds,
                               const BoundaryTagger& tagger, std::uint64_t seed = 1);

// ---------------------------------------------------------------------- io

void write_mesh(const PolygonalMesh& mesh, const std::string& path);
std::string mesh_to_json(const PolygonalMesh& mesh);

/// Reads and validates a mesh file. Clockwise cells are reoriented; a note
/// for each is appended to `warnings` (or printed to stderr when null).
PolygonalMesh read_mesh(const std::string& path, std::vector<std::string>* warnings = nullptr);
PolygonalMesh mesh_from_json(const std::string& text, std::vector<std::string>* warnings = nullptr);

}  // namespace platevem
