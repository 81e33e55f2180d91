#pragma once
// Structured triangulation of the unit square. Each of the m x m cells is cut along
// its lower-left to upper-right diagonal.

#include <array>
#include <cstddef>
#include <map>
#include <ostream>
#include <utility>
#include <vector>

#include "dlnens/error.hpp"

namespace dlnens::fem {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct Triangle {
    std::array<int, 3> v;  ///< counter-clockwise vertex ids
    std::array<int, 3> e;  ///< e[k] is the edge opposite v[k]
};

struct Mesh {
    int m = 0;
    std::vector<Point> vertices;
    std::vector<std::array<int, 2>> edges;
    std::vector<Triangle> triangles;
    std::vector<char> boundary_vertex;
    std::vector<char> boundary_edge;

    double h() const { return 1.0 / m; }
    std::size_t num_vertices() const { return vertices.size(); }
    std::size_t num_edges() const { return edges.size(); }
    std::size_t num_triangles() const { return triangles.size(); }

    double area(const Triangle& t) const
    {
        const Point& a = vertices[t.v[0]];
        const Point& b = vertices[t.v[1]];
        const Point& c = vertices[t.v[2]];
        return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
    }
};

inline Mesh generate_mesh(int m)
{
    if (m < 2) {
        throw InvalidArgument("mesh needs at least 2 subdivisions per side");
    }
    Mesh mesh;
    mesh.m = m;
    const int n = m + 1;
    auto vid = [n](int i, int j) { return j * n + i; };

    mesh.vertices.reserve(static_cast<std::size_t>(n) * n);
    mesh.boundary_vertex.reserve(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            mesh.vertices.push_back({static_cast<double>(i) / m, static_cast<double>(j) / m});
            mesh.boundary_vertex.push_back(i == 0 || j == 0 || i == m || j == m);
        }
    }

    std::map<std::pair<int, int>, int> edge_id;
    std::vector<int> edge_uses;
    auto edge = [&](int a, int b) {
        const auto key = std::minmax(a, b);
        auto [it, inserted] = edge_id.try_emplace({key.first, key.second}, static_cast<int>(mesh.edges.size()));
        if (inserted) {
            mesh.edges.push_back({key.first, key.second});
            edge_uses.push_back(0);
        }
        ++edge_uses[it->second];
        return it->second;
    };
    auto add = [&](int a, int b, int c) {
        Triangle t{{a, b, c}, {}};
        t.e[0] = edge(b, c);
        t.e[1] = edge(c, a);
        t.e[2] = edge(a, b);
        mesh.triangles.push_back(t);
    };

    mesh.triangles.reserve(2 * static_cast<std::size_t>(m) * m);
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            const int v00 = vid(i, j), v10 = vid(i + 1, j), v11 = vid(i + 1, j + 1), v01 = vid(i, j + 1);
            add(v00, v10, v11);
            add(v00, v11, v01);
        }
    }
    mesh.boundary_edge.resize(mesh.edges.size());
    for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
        mesh.boundary_edge[e] = edge_uses[e] == 1;
    }
    return mesh;
}

/// Vertex and triangle tables as CSV, for inspection.
inline void write_mesh_csv(const Mesh& mesh, std::ostream& vertices_out, std::ostream& triangles_out)
{
    const auto old = vertices_out.precision(17);
    vertices_out << "id,x,y,boundary\n";
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        vertices_out << i << ',' << mesh.vertices[i].x << ',' << mesh.vertices[i].y << ','
                     << int(mesh.boundary_vertex[i]) << '\n';
    }
    vertices_out.precision(old);
    triangles_out << "id,v0,v1,v2\n";
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tr = mesh.triangles[t];
        triangles_out << t << ',' << tr.v[0] << ',' << tr.v[1] << ',' << tr.v[2] << '\n';
    }
}

}  // namespace dlnens::fem
