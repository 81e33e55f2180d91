#pragma once
// Finite-element operators. Velocity operators are block diagonal with identical scalar
// P2 blocks, so the scalar blocks are assembled once on a shared pattern and the
// vector-level matrices are built from them when needed.

#include <array>
#include <functional>
#include <vector>

#include "dlnens/fem2d/quadrature.hpp"
#include "dlnens/fem2d/spaces.hpp"
#include "dlnens/fem2d/sparse.hpp"

namespace dlnens::fem {

using VectorField = std::function<std::array<double, 2>(double x, double y)>;
using ScalarField = std::function<double(double x, double y)>;

class Operators {
public:
    explicit Operators(const FeSpaces& spaces) : spaces_(&spaces)
    {
        build_pattern();
        assemble_static();
    }

    const FeSpaces& spaces() const { return *spaces_; }

    /// Scalar P2 mass and stiffness blocks.
    const SparseMatrix& mass() const { return mass_; }
    const SparseMatrix& stiffness() const { return stiffness_; }
    /// D(q, dof) = (psi_q, div phi_dof), pressure rows by velocity columns.
    const SparseMatrix& divergence() const { return divergence_; }
    const SparseMatrix& pressure_mass() const { return pressure_mass_; }
    /// (psi_q, 1)
    const Vector& pressure_integrals() const { return pressure_integrals_; }

    /// Scalar block of b(w, u, v) = 1/2 ((w.grad)u, v) - 1/2 ((w.grad)v, u); exactly antisymmetric.
    SparseMatrix convection(const Vector& w) const
    {
        SparseMatrix n = mass_;
        convection_into(w, n);
        return n;
    }

    void convection_into(const Vector& w, SparseMatrix& out) const
    {
        check_velocity(w);
        if (!out.same_pattern(mass_)) throw DimensionMismatch("convection target has the wrong pattern");
        auto& val = out.values();
        std::fill(val.begin(), val.end(), 0.0);
        const auto& rule = triangle_rule();
        const int nn = spaces_->num_nodes();
        for (std::size_t t = 0; t < spaces_->num_elements(); ++t) {
            const auto& g = spaces_->geometry(t);
            const auto& ln = spaces_->local_nodes(t);
            std::array<double, 6> w1{}, w2{};
            for (int i = 0; i < 6; ++i) {
                w1[i] = w[ln[i]];
                w2[i] = w[nn + ln[i]];
            }
            std::array<std::array<double, 6>, 6> c{};
            for (std::size_t q = 0; q < rule.size(); ++q) {
                const auto& phi = spaces_->basis_at(q);
                const auto grad = P2::gradients(rule[q].lambda, g.grad_lambda);
                double wx = 0.0, wy = 0.0;
                for (int i = 0; i < 6; ++i) {
                    wx += w1[i] * phi[i];
                    wy += w2[i] * phi[i];
                }
                const double wt = rule[q].weight * g.area;
                for (int j = 0; j < 6; ++j) {
                    const double adv = wt * (wx * grad[j][0] + wy * grad[j][1]);
                    for (int i = 0; i < 6; ++i) c[i][j] += adv * phi[i];
                }
            }
            const auto& pos = positions_[t];
            for (int i = 0; i < 6; ++i) {
                for (int j = 0; j < 6; ++j) val[pos[6 * i + j]] += 0.5 * (c[i][j] - c[j][i]);
            }
        }
    }

    /// N(w) v without forming N(w): entries b(w, v, phi_i).
    Vector convection_apply(const Vector& w, const Vector& v) const
    {
        check_velocity(w);
        check_velocity(v);
        const auto& rule = triangle_rule();
        const int nn = spaces_->num_nodes();
        Vector out = Vector::Zero(v.size());
        for (std::size_t t = 0; t < spaces_->num_elements(); ++t) {
            const auto& g = spaces_->geometry(t);
            const auto& ln = spaces_->local_nodes(t);
            std::array<double, 6> r1{}, r2{};
            for (std::size_t q = 0; q < rule.size(); ++q) {
                const auto& phi = spaces_->basis_at(q);
                const auto grad = P2::gradients(rule[q].lambda, g.grad_lambda);
                double wx = 0.0, wy = 0.0, v1 = 0.0, v2 = 0.0;
                double d11 = 0.0, d12 = 0.0, d21 = 0.0, d22 = 0.0;
                for (int i = 0; i < 6; ++i) {
                    const double a1 = v[ln[i]], a2 = v[nn + ln[i]];
                    wx += w[ln[i]] * phi[i];
                    wy += w[nn + ln[i]] * phi[i];
                    v1 += a1 * phi[i];
                    v2 += a2 * phi[i];
                    d11 += a1 * grad[i][0];
                    d12 += a1 * grad[i][1];
                    d21 += a2 * grad[i][0];
                    d22 += a2 * grad[i][1];
                }
                const double wt = rule[q].weight * g.area;
                const double adv1 = wx * d11 + wy * d12;  // (w.grad) v
                const double adv2 = wx * d21 + wy * d22;
                for (int i = 0; i < 6; ++i) {
                    const double wg = wx * grad[i][0] + wy * grad[i][1];  // (w.grad) phi_i
                    r1[i] += 0.5 * wt * (adv1 * phi[i] - wg * v1);
                    r2[i] += 0.5 * wt * (adv2 * phi[i] - wg * v2);
                }
            }
            for (int i = 0; i < 6; ++i) {
                out[ln[i]] += r1[i];
                out[nn + ln[i]] += r2[i];
            }
        }
        return out;
    }

    /// Block-diagonal application of a scalar block to a component-blocked velocity vector.
    Vector apply_block(const SparseMatrix& scalar, const Vector& u) const
    {
        check_velocity(u);
        const int nn = spaces_->num_nodes();
        Vector y = Vector::Zero(u.size());
        scalar.multiply_add(u.head(nn), y.head(nn));
        scalar.multiply_add(u.tail(nn), y.tail(nn));
        return y;
    }

    /// Block-diagonal vector-level matrix from a scalar block.
    SparseMatrix vector_block(const SparseMatrix& scalar) const
    {
        const int nn = spaces_->num_nodes();
        std::vector<Triplet> t;
        t.reserve(2 * scalar.nonzeros());
        for (int c = 0; c < 2; ++c) {
            for (int r = 0; r < nn; ++r) {
                for (int p = scalar.row_ptr()[r]; p < scalar.row_ptr()[r + 1]; ++p) {
                    t.push_back({c * nn + r, c * nn + scalar.col_idx()[p], scalar.values()[p]});
                }
            }
        }
        return SparseMatrix::from_triplets(2 * nn, 2 * nn, std::move(t));
    }

    /// b(u, v, w) through the convection block.
    double trilinear_b(const Vector& u, const Vector& v, const Vector& w) const
    {
        check_velocity(v);
        check_velocity(w);
        return w.dot(apply_block(convection(u), v));
    }

    /// (f, phi_dof) for every velocity dof, f sampled at quadrature points.
    Vector load(const VectorField& f) const
    {
        const auto& rule = triangle_rule();
        const int nn = spaces_->num_nodes();
        Vector b = Vector::Zero(spaces_->velocity_dofs());
        for (std::size_t t = 0; t < spaces_->num_elements(); ++t) {
            const auto& g = spaces_->geometry(t);
            const auto& ln = spaces_->local_nodes(t);
            for (std::size_t q = 0; q < rule.size(); ++q) {
                const Point x = g.map(rule[q].lambda);
                const auto fv = f(x.x, x.y);
                const double wt = rule[q].weight * g.area;
                const auto& phi = spaces_->basis_at(q);
                for (int i = 0; i < 6; ++i) {
                    b[ln[i]] += wt * fv[0] * phi[i];
                    b[nn + ln[i]] += wt * fv[1] * phi[i];
                }
            }
        }
        return b;
    }

    /// Value-array positions of each element's 6 x 6 block in the scalar pattern (row-major).
    const std::vector<std::array<int, 36>>& element_positions() const { return positions_; }

private:
    void check_velocity(const Vector& u) const
    {
        if (u.size() != spaces_->velocity_dofs()) throw DimensionMismatch("velocity vector has the wrong size");
    }

    void build_pattern()
    {
        const int nn = spaces_->num_nodes();
        std::vector<Triplet> t;
        t.reserve(36 * spaces_->num_elements());
        for (std::size_t e = 0; e < spaces_->num_elements(); ++e) {
            const auto& ln = spaces_->local_nodes(e);
            for (int i = 0; i < 6; ++i) {
                for (int j = 0; j < 6; ++j) t.push_back({ln[i], ln[j], 0.0});
            }
        }
        mass_ = SparseMatrix::from_triplets(nn, nn, std::move(t));
        positions_.resize(spaces_->num_elements());
        for (std::size_t e = 0; e < spaces_->num_elements(); ++e) {
            const auto& ln = spaces_->local_nodes(e);
            for (int i = 0; i < 6; ++i) {
                for (int j = 0; j < 6; ++j) positions_[e][6 * i + j] = static_cast<int>(mass_.find(ln[i], ln[j]));
            }
        }
        stiffness_ = mass_;
    }

    void assemble_static()
    {
        const auto& rule = triangle_rule();
        const int nn = spaces_->num_nodes();
        const int np = spaces_->pressure_dofs();
        auto& mv = mass_.values();
        auto& kv = stiffness_.values();
        std::vector<Triplet> dt, mp;
        dt.reserve(36 * spaces_->num_elements());
        mp.reserve(9 * spaces_->num_elements());
        pressure_integrals_ = Vector::Zero(np);

        for (std::size_t t = 0; t < spaces_->num_elements(); ++t) {
            const auto& g = spaces_->geometry(t);
            const auto& ln = spaces_->local_nodes(t);
            const auto& pn = spaces_->pressure_nodes(t);
            const auto& pos = positions_[t];
            std::array<std::array<double, 6>, 6> me{}, ke{};
            std::array<std::array<double, 6>, 3> dx{}, dy{};
            std::array<std::array<double, 3>, 3> pe{};
            for (std::size_t q = 0; q < rule.size(); ++q) {
                const auto& l = rule[q].lambda;
                const auto& phi = spaces_->basis_at(q);
                const auto grad = P2::gradients(l, g.grad_lambda);
                const double wt = rule[q].weight * g.area;
                for (int i = 0; i < 6; ++i) {
                    for (int j = 0; j < 6; ++j) {
                        me[i][j] += wt * phi[i] * phi[j];
                        ke[i][j] += wt * (grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1]);
                    }
                }
                for (int a = 0; a < 3; ++a) {
                    for (int j = 0; j < 6; ++j) {
                        dx[a][j] += wt * l[a] * grad[j][0];
                        dy[a][j] += wt * l[a] * grad[j][1];
                    }
                    for (int b = 0; b < 3; ++b) pe[a][b] += wt * l[a] * l[b];
                    pressure_integrals_[pn[a]] += wt * l[a];
                }
            }
            for (int i = 0; i < 6; ++i) {
                for (int j = 0; j < 6; ++j) {
                    mv[pos[6 * i + j]] += me[i][j];
                    kv[pos[6 * i + j]] += ke[i][j];
                }
            }
            for (int a = 0; a < 3; ++a) {
                for (int j = 0; j < 6; ++j) {
                    dt.push_back({pn[a], ln[j], dx[a][j]});
                    dt.push_back({pn[a], nn + ln[j], dy[a][j]});
                }
                for (int b = 0; b < 3; ++b) mp.push_back({pn[a], pn[b], pe[a][b]});
            }
        }
        divergence_ = SparseMatrix::from_triplets(np, 2 * nn, std::move(dt));
        pressure_mass_ = SparseMatrix::from_triplets(np, np, std::move(mp));
    }

    const FeSpaces* spaces_;
    SparseMatrix mass_;
    SparseMatrix stiffness_;
    SparseMatrix divergence_;
    SparseMatrix pressure_mass_;
    Vector pressure_integrals_;
    std::vector<std::array<int, 36>> positions_;
};

/// Vector-level operators, for callers that want whole matrices.
inline SparseMatrix assemble_mass(const Operators& ops) { return ops.vector_block(ops.mass()); }
inline SparseMatrix assemble_stiffness(const Operators& ops) { return ops.vector_block(ops.stiffness()); }
inline SparseMatrix assemble_divergence(const Operators& ops) { return ops.divergence(); }
inline SparseMatrix assemble_convection(const Operators& ops, const Vector& w)
{
    return ops.vector_block(ops.convection(w));
}

}  // namespace dlnens::fem
