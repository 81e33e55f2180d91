#pragma once
// Taylor-Hood P2-P1 spaces on a structured mesh.
// P2 nodes: vertices first, then edge midpoints. Velocity dofs are blocked by component:
// [u1 at all nodes, u2 at all nodes]. Pressure dofs are the vertices.

#include <array>
#include <cstddef>
#include <vector>

#include "dlnens/fem2d/mesh.hpp"
#include "dlnens/fem2d/quadrature.hpp"

namespace dlnens::fem {

using Grad = std::array<double, 2>;

struct ElementGeometry {
    std::array<Point, 3> p;
    double area = 0.0;
    std::array<Grad, 3> grad_lambda{};

    Point map(const std::array<double, 3>& l) const
    {
        return {l[0] * p[0].x + l[1] * p[1].x + l[2] * p[2].x, l[0] * p[0].y + l[1] * p[1].y + l[2] * p[2].y};
    }
};

inline ElementGeometry element_geometry(const Mesh& mesh, const Triangle& t)
{
    ElementGeometry g;
    for (int i = 0; i < 3; ++i) g.p[i] = mesh.vertices[t.v[i]];
    const double x1 = g.p[1].x - g.p[0].x, y1 = g.p[1].y - g.p[0].y;
    const double x2 = g.p[2].x - g.p[0].x, y2 = g.p[2].y - g.p[0].y;
    const double det = x1 * y2 - x2 * y1;
    g.area = 0.5 * det;
    g.grad_lambda[1] = {y2 / det, -x2 / det};
    g.grad_lambda[2] = {-y1 / det, x1 / det};
    g.grad_lambda[0] = {-g.grad_lambda[1][0] - g.grad_lambda[2][0], -g.grad_lambda[1][1] - g.grad_lambda[2][1]};
    return g;
}

/// Local P2 basis: phi_i = l_i (2 l_i - 1) at vertex i, phi_{3+k} = 4 l_a l_b on the edge opposite vertex k.
struct P2 {
    static constexpr int a(int k) { return (k + 1) % 3; }
    static constexpr int b(int k) { return (k + 2) % 3; }

    static std::array<double, 6> values(const std::array<double, 3>& l)
    {
        std::array<double, 6> v{};
        for (int i = 0; i < 3; ++i) v[i] = l[i] * (2.0 * l[i] - 1.0);
        for (int k = 0; k < 3; ++k) v[3 + k] = 4.0 * l[a(k)] * l[b(k)];
        return v;
    }

    static std::array<Grad, 6> gradients(const std::array<double, 3>& l, const std::array<Grad, 3>& gl)
    {
        std::array<Grad, 6> g{};
        for (int i = 0; i < 3; ++i) {
            const double s = 4.0 * l[i] - 1.0;
            g[i] = {s * gl[i][0], s * gl[i][1]};
        }
        for (int k = 0; k < 3; ++k) {
            const int i = a(k), j = b(k);
            g[3 + k] = {4.0 * (l[i] * gl[j][0] + l[j] * gl[i][0]), 4.0 * (l[i] * gl[j][1] + l[j] * gl[i][1])};
        }
        return g;
    }
};

class FeSpaces {
public:
    explicit FeSpaces(Mesh mesh) : mesh_(std::move(mesh))
    {
        const int nv = static_cast<int>(mesh_.num_vertices());
        n_nodes_ = nv + static_cast<int>(mesh_.num_edges());
        nodes_.reserve(static_cast<std::size_t>(n_nodes_));
        boundary_node_.reserve(static_cast<std::size_t>(n_nodes_));
        for (int i = 0; i < nv; ++i) {
            nodes_.push_back(mesh_.vertices[i]);
            boundary_node_.push_back(mesh_.boundary_vertex[i]);
        }
        for (std::size_t e = 0; e < mesh_.num_edges(); ++e) {
            const Point& p = mesh_.vertices[mesh_.edges[e][0]];
            const Point& q = mesh_.vertices[mesh_.edges[e][1]];
            nodes_.push_back({0.5 * (p.x + q.x), 0.5 * (p.y + q.y)});
            boundary_node_.push_back(mesh_.boundary_edge[e]);
        }
        geometry_.reserve(mesh_.num_triangles());
        local_.reserve(mesh_.num_triangles());
        for (const auto& t : mesh_.triangles) {
            geometry_.push_back(element_geometry(mesh_, t));
            local_.push_back({t.v[0], t.v[1], t.v[2], nv + t.e[0], nv + t.e[1], nv + t.e[2]});
        }
        dirichlet_.assign(static_cast<std::size_t>(velocity_dofs()), 0);
        for (int c = 0; c < 2; ++c) {
            for (int i = 0; i < n_nodes_; ++i) dirichlet_[velocity_dof(c, i)] = boundary_node_[i];
        }
        for (const auto& q : triangle_rule()) basis_at_qp_.push_back(P2::values(q.lambda));
    }

    const Mesh& mesh() const { return mesh_; }
    double h() const { return mesh_.h(); }

    int num_nodes() const { return n_nodes_; }
    int velocity_dofs() const { return 2 * n_nodes_; }
    int pressure_dofs() const { return static_cast<int>(mesh_.num_vertices()); }
    int velocity_dof(int component, int node) const { return component * n_nodes_ + node; }

    const Point& node(int i) const { return nodes_[i]; }
    bool boundary_node(int i) const { return boundary_node_[i] != 0; }
    /// Per velocity dof: 1 if it carries a Dirichlet value.
    const std::vector<char>& dirichlet_mask() const { return dirichlet_; }

    std::size_t num_elements() const { return geometry_.size(); }
    const ElementGeometry& geometry(std::size_t t) const { return geometry_[t]; }
    /// P2 node ids of an element (3 vertices, then edges opposite each vertex).
    const std::array<int, 6>& local_nodes(std::size_t t) const { return local_[t]; }
    const std::array<int, 3>& pressure_nodes(std::size_t t) const { return mesh_.triangles[t].v; }
    /// P2 basis values at the points of triangle_rule().
    const std::array<double, 6>& basis_at(std::size_t q) const { return basis_at_qp_[q]; }

private:
    Mesh mesh_;
    int n_nodes_ = 0;
    std::vector<Point> nodes_;
    std::vector<char> boundary_node_;
    std::vector<ElementGeometry> geometry_;
    std::vector<std::array<int, 6>> local_;
    std::vector<char> dirichlet_;
    std::vector<std::array<double, 6>> basis_at_qp_;
};

}  // namespace dlnens::fem
