#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "platevem/errors.hpp"
#include "platevem/mesh.hpp"

namespace platevem {

using nlohmann::json;

namespace {

double number_at(const json& j, const std::string& where) {
    if (!j.is_number()) throw ParseError(where + ": expected a number");
    return j.get<double>();
}

int index_at(const json& j, const std::string& where) {
    if (!j.is_number_integer()) throw ParseError(where + ": expected an integer vertex id");
    return j.get<int>();
}

const json& array_field(const json& root, const char* key) {
    if (!root.contains(key)) throw ParseError(std::string("missing top-level key \"") + key + "\"");
    const json& a = root.at(key);
    if (!a.is_array()) throw ParseError(std::string("\"") + key + "\" must be an array");
    return a;
}

}  // namespace

std::string mesh_to_json(const PolygonalMesh& mesh) {
    json root;
    json vertices = json::array();
    for (const Point& p : mesh.vertices()) vertices.push_back({p.x(), p.y()});
    json cells = json::array();
    for (const Cell& c : mesh.cells()) cells.push_back(c.vertices);
    json boundary = json::array();
    for (const Edge& e : mesh.edges())
        if (e.on_boundary()) boundary.push_back({{"edge", {e.v0, e.v1}}, {"tag", to_string(e.tag)}});
    const Rect& b = mesh.bounds();
    root["vertices"] = std::move(vertices);
    root["cells"] = std::move(cells);
    root["boundary"] = std::move(boundary);
    root["bounds"] = {b.xmin, b.ymin, b.xmax, b.ymax};
    // nlohmann prints the shortest representation that round-trips exactly.
    return root.dump(1);
}

void write_mesh(const PolygonalMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << mesh_to_json(mesh) << '\n';
    if (!out) throw Error("failed writing " + path);
}

PolygonalMesh mesh_from_json(const std::string& text, std::vector<std::string>* warnings) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
    if (!root.is_object()) throw ParseError("mesh file must hold a JSON object");

    std::vector<Point> vertices;
    const json& jv = array_field(root, "vertices");
    for (std::size_t i = 0; i < jv.size(); ++i) {
        const std::string where = "vertices[" + std::to_string(i) + "]";
        if (!jv[i].is_array() || jv[i].size() != 2) throw ParseError(where + ": expected [x, y]");
        vertices.emplace_back(number_at(jv[i][0], where), number_at(jv[i][1], where));
    }

    std::vector<std::vector<int>> cells;
    const json& jc = array_field(root, "cells");
    for (std::size_t c = 0; c < jc.size(); ++c) {
        const std::string where = "cells[" + std::to_string(c) + "]";
        if (!jc[c].is_array()) throw ParseError(where + ": expected an array of vertex ids");
        std::vector<int> ids;
        for (const json& v : jc[c]) ids.push_back(index_at(v, where));
        cells.push_back(std::move(ids));
    }

    std::vector<TaggedEdge> boundary;
    const json& jb = array_field(root, "boundary");
    for (std::size_t k = 0; k < jb.size(); ++k) {
        const std::string where = "boundary[" + std::to_string(k) + "]";
        const json& r = jb[k];
        if (!r.is_object() || !r.contains("edge") || !r.contains("tag"))
            throw ParseError(where + ": expected {\"edge\": [v0, v1], \"tag\": ...}");
        const json& e = r.at("edge");
        if (!e.is_array() || e.size() != 2) throw ParseError(where + ": edge must be [v0, v1]");
        if (!r.at("tag").is_string()) throw ParseError(where + ": tag must be a string");
        BoundaryTag tag;
        try {
            tag = boundary_tag_from_string(r.at("tag").get<std::string>());
        } catch (const std::exception& ex) {
            throw ParseError(where + ": " + ex.what());
        }
        if (tag == BoundaryTag::Interior) throw ParseError(where + ": boundary edges cannot be interior");
        boundary.push_back({index_at(e[0], where), index_at(e[1], where), tag});
    }

    const json& jr = array_field(root, "bounds");
    if (jr.size() != 4) throw ParseError("bounds: expected [xmin, ymin, xmax, ymax]");
    const Rect bounds{number_at(jr[0], "bounds[0]"), number_at(jr[1], "bounds[1]"),
                      number_at(jr[2], "bounds[2]"), number_at(jr[3], "bounds[3]")};

    // Fix clockwise cells before validation; anything else is left to the
    // mesh invariants.
    for (std::size_t c = 0; c < cells.size(); ++c) {
        auto& ids = cells[c];
        const bool in_range = std::all_of(ids.begin(), ids.end(), [&](int v) {
            return v >= 0 && static_cast<std::size_t>(v) < vertices.size();
        });
        if (!in_range || ids.size() < 3) continue;
        std::vector<Point> pts;
        for (int v : ids) pts.push_back(vertices[static_cast<std::size_t>(v)]);
        if (signed_area(pts) < 0.0) {
            std::reverse(ids.begin(), ids.end());
            const std::string note = "cells[" + std::to_string(c) + "] was clockwise; reoriented";
            if (warnings)
                warnings->push_back(note);
            else
                std::cerr << "warning: " << note << '\n';
        }
    }
    return PolygonalMesh::from_tagged_edges(std::move(vertices), std::move(cells), bounds, boundary);
}

PolygonalMesh read_mesh(const std::string& path, std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open mesh file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return mesh_from_json(buf.str(), warnings);
}

}  // namespace platevem
