#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <utility>

#include "platevem/errors.hpp"
#include "platevem/mesh.hpp"

namespace platevem {

namespace {

// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
class UnitRandom {
public:
    explicit UnitRandom(std::uint64_t seed) : engine_(seed) {}
    double operator()() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

void check_grid_args(int n, const Rect& bounds) {
    if (n < 1) throw InvalidArgument("grid subdivision count must be >= 1, got " + std::to_string(n));
    if (bounds.degenerate()) throw InvalidArgument("degenerate domain bounds");
}

std::vector<Point> grid_vertices(int n, const Rect& b) {
    std::vector<Point> v;
    v.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
    for (int j = 0; j <= n; ++j) {
        // Last row/column pinned to the exact bound.
        const double y = j == n ? b.ymax : b.ymin + b.height() * j / n;
        for (int i = 0; i <= n; ++i) {
            const double x = i == n ? b.xmax : b.xmin + b.width() * i / n;
            v.emplace_back(x, y);
        }
    }
    return v;
}

std::vector<std::vector<int>> grid_cells(int n) {
    std::vector<std::vector<int>> cells;
    cells.reserve(static_cast<std::size_t>(n * n));
    auto id = [n](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
    return cells;
}

std::vector<Point> clip_convex(const std::vector<Point>& poly, const Point& n, double c) {
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

std::vector<std::vector<Point>> voronoi_cells(const std::vector<Point>& seeds, const Rect& b) {
    const std::vector<Point> box{Point(b.xmin, b.ymin), Point(b.xmax, b.ymin),
                                 Point(b.xmax, b.ymax), Point(b.xmin, b.ymax)};
    std::vector<std::vector<Point>> cells(seeds.size());
    std::vector<std::size_t> order(seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const Point& s = seeds[i];
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
            const double da = (seeds[a] - s).squaredNorm();
            const double dc = (seeds[c] - s).squaredNorm();
            return da < dc || (da == dc && a < c);
        });
        std::vector<Point> poly = box;
        for (std::size_t j : order) {
            if (j == i) continue;
            double reach = 0.0;
            for (const Point& p : poly) reach = std::max(reach, (p - s).norm());
            const Point n = seeds[j] - s;
            // Sites farther than twice the cell radius cannot cut the cell.
            if (0.5 * n.norm() > reach) break;
            poly = clip_convex(poly, n, n.dot(0.5 * (s + seeds[j])));
            if (poly.size() < 3) break;
        }
        cells[i] = std::move(poly);
    }
    return cells;
}

// Welds a polygon soup into a conforming mesh: shared points merged, points
// on the rectangle snapped onto it, and points lying inside a neighbour's edge
// inserted as extra (straight-angle) vertices of that edge.
PolygonalMesh mesh_from_polygons(const std::vector<std::vector<Point>>& polygons, const Rect& b,
                                 const BoundaryTagger& tagger) {
    const double diam = b.diameter();
    const double tol = 1e-9 * diam;
    std::vector<Point> vertices;
    std::map<std::pair<long long, long long>, std::vector<int>> buckets;
    const double bucket = 16.0 * tol;
    auto key_of = [&](const Point& p) {
        return std::make_pair(static_cast<long long>(std::floor(p.x() / bucket)),
                              static_cast<long long>(std::floor(p.y() / bucket)));
    };
    auto weld = [&](Point p) {
        if (std::abs(p.x() - b.xmin) <= tol) p.x() = b.xmin;
        if (std::abs(p.x() - b.xmax) <= tol) p.x() = b.xmax;
        if (std::abs(p.y() - b.ymin) <= tol) p.y() = b.ymin;
        if (std::abs(p.y() - b.ymax) <= tol) p.y() = b.ymax;
        const auto [kx, ky] = key_of(p);
        for (long long dx = -1; dx <= 1; ++dx)
            for (long long dy = -1; dy <= 1; ++dy) {
                const auto it = buckets.find({kx + dx, ky + dy});
                if (it == buckets.end()) continue;
                for (int v : it->second)
                    if ((vertices[static_cast<std::size_t>(v)] - p).norm() <= tol) return v;
            }
        const int id = static_cast<int>(vertices.size());
        vertices.push_back(p);
        buckets[{kx, ky}].push_back(id);
        return id;
    };

    std::vector<std::vector<int>> cells;
    for (const auto& poly : polygons) {
        std::vector<int> ids;
        for (const Point& p : poly) {
            const int v = weld(p);
            if (ids.empty() || ids.back() != v) ids.push_back(v);
        }
        while (ids.size() > 1 && ids.front() == ids.back()) ids.pop_back();
        if (ids.size() >= 3) cells.push_back(std::move(ids));
    }

    // Coarse bucket grid for the T-junction search.
    const int nb = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(vertices.size()))));
    const double bw = b.width() / nb;
    const double bh = b.height() / nb;
    auto bi = [&](double x) { return std::clamp(static_cast<int>((x - b.xmin) / bw), 0, nb - 1); };
    auto bj = [&](double y) { return std::clamp(static_cast<int>((y - b.ymin) / bh), 0, nb - 1); };
    std::vector<std::vector<int>> grid(static_cast<std::size_t>(nb * nb));
    for (std::size_t v = 0; v < vertices.size(); ++v)
        grid[static_cast<std::size_t>(bj(vertices[v].y()) * nb + bi(vertices[v].x()))].push_back(
            static_cast<int>(v));

    for (auto& ids : cells) {
        std::vector<int> out;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            const int a = ids[k];
            const int c = ids[(k + 1) % ids.size()];
            const Point& pa = vertices[static_cast<std::size_t>(a)];
            const Point& pc = vertices[static_cast<std::size_t>(c)];
            const Point d = pc - pa;
            const double len2 = d.squaredNorm();
            out.push_back(a);
            std::vector<std::pair<double, int>> inner;
            for (int gj = bj(std::min(pa.y(), pc.y()) - tol); gj <= bj(std::max(pa.y(), pc.y()) + tol); ++gj)
                for (int gi = bi(std::min(pa.x(), pc.x()) - tol); gi <= bi(std::max(pa.x(), pc.x()) + tol); ++gi)
                    for (int v : grid[static_cast<std::size_t>(gj * nb + gi)]) {
                        if (v == a || v == c) continue;
                        const Point& p = vertices[static_cast<std::size_t>(v)];
                        const double s = (p - pa).dot(d) / len2;
                        if (s <= 0.0 || s >= 1.0) continue;
                        if ((pa + s * d - p).norm() <= tol) inner.emplace_back(s, v);
                    }
            std::sort(inner.begin(), inner.end());
            for (const auto& [s, v] : inner) out.push_back(v);
        }
        ids = std::move(out);
    }
    return PolygonalMesh::from_cells(std::move(vertices), std::move(cells), b, tagger);
}

}  // namespace

PolygonalMesh generate_square_grid(int n, const Rect& bounds, const BoundaryTagger& tagger) {
    check_grid_args(n, bounds);
    return PolygonalMesh::from_cells(grid_vertices(n, bounds), grid_cells(n), bounds, tagger);
}

PolygonalMesh generate_distorted_grid(int n, const Rect& bounds, double amplitude,
                                      std::uint64_t seed, const BoundaryTagger& tagger) {
    check_grid_args(n, bounds);
    if (!(amplitude >= 0.0 && amplitude < 0.5))
        throw InvalidArgument("distortion amplitude must lie in [0, 0.5)");
    auto vertices = grid_vertices(n, bounds);
    UnitRandom rng(seed);
    const double hx = bounds.width() / n;
    const double hy = bounds.height() / n;
    for (int j = 1; j < n; ++j)
        for (int i = 1; i < n; ++i) {
            Point& p = vertices[static_cast<std::size_t>(j * (n + 1) + i)];
            const double ux = rng();
            const double uy = rng();
            p.x() += amplitude * hx * (2.0 * ux - 1.0);
            p.y() += amplitude * hy * (2.0 * uy - 1.0);
        }
    auto cells = grid_cells(n);
    for (std::size_t c = 0; c < cells.size(); ++c) {
        std::vector<Point> pts;
        for (int v : cells[c]) pts.push_back(vertices[static_cast<std::size_t>(v)]);
        if (!is_simple_polygon(pts) || signed_area(pts) <= 0.0)
            throw GenerationFailed("distortion produced a self-intersecting cell " + std::to_string(c));
    }
    return PolygonalMesh::from_cells(std::move(vertices), std::move(cells), bounds, tagger);
}

PolygonalMesh voronoi_from_seeds(std::vector<Point> seeds, const Rect& bounds,
                                 int lloyd_iterations, const BoundaryTagger& tagger,
                                 std::uint64_t jitter_seed) {
    if (seeds.empty()) throw InvalidArgument("Voronoi generation needs at least one seed");
    if (lloyd_iterations < 0) throw InvalidArgument("lloyd_iterations must be >= 0");
    if (bounds.degenerate()) throw InvalidArgument("degenerate domain bounds");
    for (const Point& s : seeds)
        if (!s.allFinite() || s.x() < bounds.xmin || s.x() > bounds.xmax || s.y() < bounds.ymin ||
            s.y() > bounds.ymax)
            throw InvalidArgument("Voronoi seed outside the domain bounds");

    const double min_sep = 1e-8 * bounds.diameter();
    UnitRandom rng(jitter_seed ^ 0x9e3779b97f4a7c15ULL);
    auto separate = [&] {
        constexpr int max_retries = 10;
        for (int attempt = 0; attempt <= max_retries; ++attempt) {
            std::vector<std::size_t> order(seeds.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
                return seeds[a].x() < seeds[c].x() ||
                       (seeds[a].x() == seeds[c].x() && seeds[a].y() < seeds[c].y());
            });
            bool clash = false;
            for (std::size_t k = 0; k < order.size(); ++k)
                for (std::size_t l = k + 1; l < order.size(); ++l) {
                    Point& p = seeds[order[k]];
                    const Point& q = seeds[order[l]];
                    if (q.x() - p.x() > min_sep) break;
                    if ((p - q).norm() > min_sep) continue;
                    clash = true;
                    const double r = 1e3 * min_sep;
                    p.x() = std::clamp(p.x() + r * (2.0 * rng() - 1.0), bounds.xmin, bounds.xmax);
                    p.y() = std::clamp(p.y() + r * (2.0 * rng() - 1.0), bounds.ymin, bounds.ymax);
                }
            if (!clash) return;
        }
        throw GenerationFailed("coincident Voronoi seeds persist after perturbation retries");
    };

    separate();
    auto polygons = voronoi_cells(seeds, bounds);
    for (int it = 0; it < lloyd_iterations; ++it) {
        for (std::size_t i = 0; i < seeds.size(); ++i)
            if (polygons[i].size() >= 3) seeds[i] = area_centroid(polygons[i]);
        separate();
        polygons = voronoi_cells(seeds, bounds);
    }
    return mesh_from_polygons(polygons, bounds, tagger);
}

PolygonalMesh generate_voronoi(int n_seeds, const Rect& bounds, int lloyd_iterations,
                               std::uint64_t seed, const BoundaryTagger& tagger) {
    if (n_seeds < 1) throw InvalidArgument("n_seeds must be >= 1");
    if (bounds.degenerate()) throw InvalidArgument("degenerate domain bounds");
    UnitRandom rng(seed);
    std::vector<Point> seeds;
    seeds.reserve(static_cast<std::size_t>(n_seeds));
    for (int i = 0; i < n_seeds; ++i) {
        const double u = rng();
        const double v = rng();
        seeds.emplace_back(bounds.xmin + u * bounds.width(), bounds.ymin + v * bounds.height());
    }
    return voronoi_from_seeds(std::move(seeds), bounds, lloyd_iterations, tagger, seed);
}

PolygonalMesh generate_nonconvex_grid(int n, const Rect& bounds, const BoundaryTagger& tagger) {
    check_grid_args(n, bounds);
    auto vertices = grid_vertices(n, bounds);
    const int corner_count = (n + 1) * (n + 1);
    auto corner = [n](int i, int j) { return j * (n + 1) + i; };
    auto mid = [&](int i, int j) { return corner_count + j * (n + 1) + i; };
    const double hx = bounds.width() / n;
    const double hy = bounds.height() / n;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i <= n; ++i) {
            const double x = i == n ? bounds.xmax : bounds.xmin + hx * i;
            vertices.emplace_back(x, bounds.ymin + hy * (j + 0.5));
        }
    std::vector<std::vector<int>> cells;
    cells.reserve(static_cast<std::size_t>(2 * n * n));
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double x0 = vertices[static_cast<std::size_t>(corner(i, j))].x();
            const double x1 = vertices[static_cast<std::size_t>(corner(i + 1, j))].x();
            const double ym = bounds.ymin + hy * (j + 0.5);
            const double d = 0.25 * hy;
            const int up = static_cast<int>(vertices.size());
            vertices.emplace_back(x0 + (x1 - x0) / 3.0, ym + d);
            const int down = up + 1;
            vertices.emplace_back(x0 + 2.0 * (x1 - x0) / 3.0, ym - d);
            cells.push_back({corner(i, j), corner(i + 1, j), mid(i + 1, j), down, up, mid(i, j)});
            cells.push_back({mid(i, j), up, down, mid(i + 1, j), corner(i + 1, j + 1), corner(i, j + 1)});
        }
    return PolygonalMesh::from_cells(std::move(vertices), std::move(cells), bounds, tagger);
}

PolygonalMesh generate_regular_polygon_grid(int n, const Rect& bounds, const BoundaryTagger& tagger) {
    check_grid_args(n, bounds);
    const double dx = bounds.width() / n;
    const int rows = std::max(1, static_cast<int>(std::lround(bounds.height() / (dx * std::sqrt(3.0) / 2.0))));
    const double dy = bounds.height() / rows;
    std::vector<Point> seeds;
    for (int j = 0; j <= rows; ++j) {
        const double y = j == rows ? bounds.ymax : bounds.ymin + j * dy;
        if (j % 2 == 0) {
            for (int i = 0; i < n; ++i) seeds.emplace_back(bounds.xmin + (i + 0.5) * dx, y);
        } else {
            for (int i = 0; i <= n; ++i)
                seeds.emplace_back(i == n ? bounds.xmax : bounds.xmin + i * dx, y);
        }
    }
    return voronoi_from_seeds(std::move(seeds), bounds, 0, tagger);
}

MeshFamily mesh_family_from_string(const std::string& name) {
    if (name == "square") return MeshFamily::Square;
    if (name == "distorted") return MeshFamily::Distorted;
    if (name == "voronoi") return MeshFamily::Voronoi;
    if (name == "nonconvex" || name == "non-convex") return MeshFamily::NonConvex;
    if (name == "regular" || name == "regular-polygon") return MeshFamily::RegularPolygon;
    throw InvalidArgument("unknown mesh family \"" + name + "\"");
}

std::string to_string(MeshFamily family) {
    switch (family) {
        case MeshFamily::Square: return "square";
        case MeshFamily::Distorted: return "distorted";
        case MeshFamily::Voronoi: return "voronoi";
        case MeshFamily::NonConvex: return "nonconvex";
        case MeshFamily::RegularPolygon: return "regular";
    }
    return "square";
}

PolygonalMesh make_family_mesh(MeshFamily family, int n, const Rect& bounds,
                               const BoundaryTagger& tagger, std::uint64_t seed) {
    switch (family) {
        case MeshFamily::Square: return generate_square_grid(n, bounds, tagger);
        case MeshFamily::Distorted: return generate_distorted_grid(n, bounds, 0.2, seed, tagger);
        case MeshFamily::Voronoi: return generate_voronoi(n * n, bounds, 10, seed, tagger);
        case MeshFamily::NonConvex: return generate_nonconvex_grid(n, bounds, tagger);
        case MeshFamily::RegularPolygon: return generate_regular_polygon_grid(n, bounds, tagger);
    }
    throw InvalidArgument("unknown mesh family");
}

}  // namespace platevem
