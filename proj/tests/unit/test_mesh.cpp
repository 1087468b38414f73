#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>

#include "platevem/errors.hpp"
#include "platevem/mesh.hpp"

using namespace platevem;

namespace {

const Rect kUnit{0.0, 0.0, 1.0, 1.0};
const double kEll = std::numbers::pi / 150.0;
const Rect kBridge{0.0, -kEll, std::numbers::pi, kEll};

void expect_tiling(const PolygonalMesh& m) {
    double area = 0.0;
    for (const Cell& c : m.cells()) {
        EXPECT_GT(signed_area(m.cell_points(static_cast<int>(&c - m.cells().data()))), 0.0);
        area += c.area;
    }
    EXPECT_NEAR(area, m.bounds().area(), 1e-10 * m.bounds().area());
    // Interior edges have two cells, boundary edges lie on the rectangle.
    std::map<std::pair<int, int>, int> uses;
    for (const Cell& c : m.cells())
        for (std::size_t i = 0; i < c.vertices.size(); ++i) {
            const int a = c.vertices[i], b = c.vertices[(i + 1) % c.vertices.size()];
            ++uses[{std::min(a, b), std::max(a, b)}];
        }
    for (const Edge& e : m.edges()) {
        const int count = uses[{std::min(e.v0, e.v1), std::max(e.v0, e.v1)}];
        EXPECT_EQ(count, e.on_boundary() ? 1 : 2);
        if (!e.on_boundary()) EXPECT_EQ(e.tag, BoundaryTag::Interior);
    }
}

std::vector<PolygonalMesh> sample_meshes() {
    return {generate_square_grid(5, kUnit),
            generate_distorted_grid(6, kUnit, 0.2, 3),
            generate_voronoi(40, kUnit, 5, 11),
            generate_nonconvex_grid(4, kUnit),
            generate_regular_polygon_grid(5, kUnit),
            generate_square_grid(8, kBridge, bridge_boundary())};
}

int reflex_count(const PolygonalMesh& m, int c) { return count_reflex_vertices(m.cell_points(c)); }

}  // namespace

TEST(Mesh, SquareGridCounts) {
    const PolygonalMesh m = generate_square_grid(2, kUnit);
    EXPECT_EQ(m.num_vertices(), 9u);
    EXPECT_EQ(m.num_cells(), 4u);
    for (const Cell& c : m.cells()) EXPECT_NEAR(c.area, 0.25, 1e-15);
    const PolygonalMesh one = generate_square_grid(1, kUnit);
    EXPECT_NEAR(one.cells()[0].centroid.x(), 0.5, 1e-15);
    EXPECT_NEAR(one.cells()[0].centroid.y(), 0.5, 1e-15);
    const PolygonalMesh bridge = generate_square_grid(16, kBridge, bridge_boundary());
    EXPECT_EQ(bridge.num_vertices(), 289u);
    EXPECT_EQ(bridge.num_cells(), 256u);
}

TEST(Mesh, BridgeBoundaryTags) {
    const PolygonalMesh m = generate_square_grid(4, kBridge, bridge_boundary());
    for (const Edge& e : m.edges()) {
        if (!e.on_boundary()) continue;
        const Point mid = 0.5 * (m.vertices()[static_cast<std::size_t>(e.v0)] + m.vertices()[static_cast<std::size_t>(e.v1)]);
        const bool short_edge = std::abs(mid.x()) < 1e-12 || std::abs(mid.x() - std::numbers::pi) < 1e-12;
        EXPECT_EQ(e.tag, short_edge ? BoundaryTag::SimplySupported : BoundaryTag::Free);
    }
}

TEST(Mesh, DistortedGrid) {
    EXPECT_EQ(generate_distorted_grid(5, kUnit, 0.0, 9), generate_square_grid(5, kUnit));
    const PolygonalMesh m = generate_distorted_grid(4, kUnit, 0.2, 1);
    EXPECT_TRUE(check_regularity(m, 0.1).passes);
    EXPECT_EQ(mesh_to_json(m), mesh_to_json(generate_distorted_grid(4, kUnit, 0.2, 1)));
    EXPECT_NE(mesh_to_json(m), mesh_to_json(generate_distorted_grid(4, kUnit, 0.2, 2)));
    EXPECT_THROW(generate_distorted_grid(4, kUnit, 0.5, 1), InvalidArgument);
}

TEST(Mesh, VoronoiSpecialCases) {
    const PolygonalMesh one = voronoi_from_seeds({Point(0.3, 0.7)}, kUnit, 0);
    ASSERT_EQ(one.num_cells(), 1u);
    EXPECT_NEAR(one.cells()[0].area, 1.0, 1e-14);

    const PolygonalMesh four =
        voronoi_from_seeds({Point(0.25, 0.25), Point(0.75, 0.25), Point(0.25, 0.75), Point(0.75, 0.75)}, kUnit, 0);
    ASSERT_EQ(four.num_cells(), 4u);
    for (const Cell& c : four.cells()) {
        EXPECT_NEAR(c.area, 0.25, 1e-14);
        EXPECT_EQ(c.vertices.size(), 4u);
        EXPECT_NEAR(c.diameter, std::sqrt(0.5), 1e-14);
    }

    const PolygonalMesh hundred = generate_voronoi(100, kUnit, 5, 7);
    double area = 0.0;
    for (const Cell& c : hundred.cells()) {
        area += c.area;
        EXPECT_TRUE(is_convex_polygon(hundred.cell_points(static_cast<int>(&c - hundred.cells().data()))));
    }
    EXPECT_EQ(hundred.num_cells(), 100u);
    EXPECT_NEAR(area, 1.0, 1e-10);
}

TEST(Mesh, VoronoiSeedsHandled) {
    // Coincident seeds are separated deterministically.
    const PolygonalMesh m = voronoi_from_seeds({Point(0.5, 0.5), Point(0.5, 0.5), Point(0.2, 0.2)}, kUnit, 0);
    EXPECT_EQ(m.num_cells(), 3u);
    EXPECT_THROW(voronoi_from_seeds({Point(1.5, 0.5)}, kUnit, 0), InvalidArgument);
    EXPECT_THROW(voronoi_from_seeds({}, kUnit, 0), InvalidArgument);
}

TEST(Mesh, NonConvexGrid) {
    const PolygonalMesh m = generate_nonconvex_grid(2, kUnit);
    for (std::size_t c = 0; c < m.num_cells(); ++c) {
        EXPECT_EQ(reflex_count(m, static_cast<int>(c)), 1);
        EXPECT_FALSE(is_convex_polygon(m.cell_points(static_cast<int>(c))));
    }
    EXPECT_TRUE(check_regularity(generate_nonconvex_grid(4, kUnit), 0.05).passes);
}

TEST(Mesh, RegularPolygonTilingCoversDomain) {
    for (int n : {1, 2, 3, 5, 8}) {
        const PolygonalMesh m = generate_regular_polygon_grid(n, kUnit);
        double area = 0.0;
        for (const Cell& c : m.cells()) area += c.area;
        EXPECT_NEAR(area, 1.0, 1e-10) << n;
    }
}

TEST(Mesh, GeneratedMeshInvariants) {
    for (const auto& m : sample_meshes()) expect_tiling(m);
}

TEST(Mesh, GeneratorsAreDeterministic) {
    for (MeshFamily f : {MeshFamily::Square, MeshFamily::Distorted, MeshFamily::Voronoi, MeshFamily::NonConvex,
                         MeshFamily::RegularPolygon})
        EXPECT_EQ(mesh_to_json(make_family_mesh(f, 4, kUnit, clamped_boundary(), 5)),
                  mesh_to_json(make_family_mesh(f, 4, kUnit, clamped_boundary(), 5)))
            << to_string(f);
}

TEST(Mesh, FamilyNames) {
    for (MeshFamily f : {MeshFamily::Square, MeshFamily::Distorted, MeshFamily::Voronoi, MeshFamily::NonConvex,
                         MeshFamily::RegularPolygon})
        EXPECT_EQ(mesh_family_from_string(to_string(f)), f);
    EXPECT_THROW(mesh_family_from_string("hexagonal-ish"), InvalidArgument);
}

TEST(Mesh, Regularity) {
    const std::vector<Point> square{Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1)};
    const CellRegularity r = cell_regularity(square);
    EXPECT_NEAR(r.star_radius_ratio, 0.5 / std::sqrt(2.0), 1e-9);
    EXPECT_NEAR(r.edge_ratio, 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_TRUE(check_regularity(generate_square_grid(1, kUnit), 0.3).passes);

    const PolygonalMesh sliver = PolygonalMesh::from_cells(
        {Point(0, 0), Point(1, 0), Point(1, 1e-9), Point(0, 1), Point(1, 1)},
        {{0, 1, 2, 3}, {3, 2, 4}}, kUnit);
    const RegularityReport bad = check_regularity(sliver, 0.1);
    EXPECT_FALSE(bad.passes);
    EXPECT_LT(bad.min_edge_ratio, 0.1);

    // Convex: the kernel is the cell itself.
    const std::vector<Point> hex{Point(1, 0), Point(0.5, 0.8), Point(-0.5, 0.8), Point(-1, 0), Point(-0.5, -0.8),
                                 Point(0.5, -0.8)};
    EXPECT_NEAR(std::abs(signed_area(polygon_kernel(hex))), signed_area(hex), 1e-12);
    EXPECT_NEAR(kernel_inradius(hex), 0.8, 1e-6);

    // Monotone in gamma.
    for (const auto& m : sample_meshes()) {
        bool previous = true;
        for (double g : {0.0, 0.01, 0.05, 0.1, 0.2, 0.4, 0.8}) {
            const bool passes = check_regularity(m, g).passes;
            if (!previous) EXPECT_FALSE(passes);
            previous = passes;
        }
    }
}

TEST(Mesh, JsonRoundTrip) {
    for (const auto& m : sample_meshes()) {
        const PolygonalMesh back = mesh_from_json(mesh_to_json(m));
        EXPECT_EQ(back, m);
        EXPECT_EQ(mesh_to_json(back), mesh_to_json(m));
    }
    const auto path = std::filesystem::temp_directory_path() / "platevem_mesh_roundtrip.json";
    const PolygonalMesh m = generate_voronoi(20, kUnit, 3, 2);
    write_mesh(m, path.string());
    EXPECT_EQ(read_mesh(path.string()), m);
    std::filesystem::remove(path);
}

TEST(Mesh, ReaderRejectsBadVertexId) {
    const std::string text = R"({"vertices": [[0,0],[1,0],[1,1],[0,1]],
        "cells": [[0,1,2,4]],
        "boundary": [{"edge":[0,1],"tag":"clamped"},{"edge":[1,2],"tag":"clamped"},
                     {"edge":[2,3],"tag":"clamped"},{"edge":[3,0],"tag":"clamped"}],
        "bounds": [0,0,1,1]})";
    EXPECT_THROW(mesh_from_json(text), ValidationError);
}

TEST(Mesh, ReaderReorientsClockwiseCells) {
    const std::string text = R"({"vertices": [[0,0],[1,0],[1,1],[0,1]],
        "cells": [[0,3,2,1]],
        "boundary": [{"edge":[0,1],"tag":"clamped"},{"edge":[1,2],"tag":"clamped"},
                     {"edge":[2,3],"tag":"clamped"},{"edge":[3,0],"tag":"clamped"}],
        "bounds": [0,0,1,1]})";
    std::vector<std::string> warnings;
    const PolygonalMesh m = mesh_from_json(text, &warnings);
    ASSERT_EQ(warnings.size(), 1u);
    EXPECT_GT(m.cells()[0].area, 0.0);
    EXPECT_GT(signed_area(m.cell_points(0)), 0.0);
}

TEST(Mesh, ReaderReportsMalformedRecords) {
    EXPECT_THROW(mesh_from_json("{"), ParseError);
    EXPECT_THROW(mesh_from_json(R"({"vertices": [[0,0]], "cells": [], "boundary": []})"), ParseError);
    try {
        mesh_from_json(R"({"vertices": [[0,0],[1,"a"]], "cells": [], "boundary": [], "bounds": [0,0,1,1]})");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("vertices[1]"), std::string::npos);
    }
    try {
        mesh_from_json(R"({"vertices": [[0,0],[1,0],[0,1]], "cells": [[0,1,2]],
            "boundary": [{"edge":[0,1],"tag":"glued"}], "bounds": [0,0,1,1]})");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("boundary[0]"), std::string::npos);
    }
}

TEST(Mesh, FromCellsValidates) {
    EXPECT_THROW(PolygonalMesh::from_cells({Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1)}, {{0, 1, 2}}, kUnit),
                 ValidationError);  // does not tile the rectangle
    EXPECT_THROW(PolygonalMesh::from_cells({Point(0, 0), Point(1, 0), Point(1, 1), Point(0, 1)}, {{0, 1, 1, 3}}, kUnit),
                 ValidationError);
    EXPECT_THROW(generate_square_grid(0, kUnit), InvalidArgument);
}

TEST(Mesh, VertexScalesAreMeanIncidentDiameters) {
    const PolygonalMesh m = generate_square_grid(2, Rect{0.0, 0.0, 2.0, 1.0});
    const double d = std::hypot(1.0, 0.5);
    for (std::size_t v = 0; v < m.num_vertices(); ++v) EXPECT_NEAR(m.vertex_scale(static_cast<int>(v)), d, 1e-14);
    EXPECT_NEAR(m.mesh_size(), d, 1e-14);
}
