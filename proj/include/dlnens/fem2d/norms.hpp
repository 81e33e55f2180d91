#pragma once
// Nodal interpolation, discrete norms and errors against analytic fields.

#include <array>
#include <cmath>
#include <functional>

#include "dlnens/fem2d/assembly.hpp"

namespace dlnens::fem {

/// (du1/dx, du1/dy, du2/dx, du2/dy)
using VelocityGradient = std::function<std::array<double, 4>(double x, double y)>;

inline Vector interpolate_velocity(const FeSpaces& spaces, const VectorField& f)
{
    const int nn = spaces.num_nodes();
    Vector u(spaces.velocity_dofs());
    for (int i = 0; i < nn; ++i) {
        const auto v = f(spaces.node(i).x, spaces.node(i).y);
        u[i] = v[0];
        u[nn + i] = v[1];
    }
    return u;
}

inline Vector interpolate_pressure(const FeSpaces& spaces, const ScalarField& f)
{
    Vector p(spaces.pressure_dofs());
    for (int i = 0; i < spaces.pressure_dofs(); ++i) p[i] = f(spaces.node(i).x, spaces.node(i).y);
    return p;
}

inline double l2_norm(const Operators& ops, const Vector& u)
{
    return std::sqrt(std::max(0.0, u.dot(ops.apply_block(ops.mass(), u))));
}

inline double h1_seminorm(const Operators& ops, const Vector& u)
{
    return std::sqrt(std::max(0.0, u.dot(ops.apply_block(ops.stiffness(), u))));
}

inline double h1_norm(const Operators& ops, const Vector& u)
{
    const double l2 = l2_norm(ops, u), semi = h1_seminorm(ops, u);
    return std::sqrt(l2 * l2 + semi * semi);
}

/// L2 norm of the mean-zero part of a P1 pressure.
inline double pressure_l2(const Operators& ops, const Vector& p)
{
    if (p.size() != ops.spaces().pressure_dofs()) throw DimensionMismatch("pressure vector has the wrong size");
    const double mean = ops.pressure_integrals().dot(p);  // |Omega| = 1
    return std::sqrt(std::max(0.0, p.dot(ops.pressure_mass() * p) - mean * mean));
}

struct VelocityError {
    double l2 = 0.0;
    double h1 = 0.0;  ///< full H1 norm of the error
};

inline VelocityError velocity_error(const Operators& ops, const Vector& u, const VectorField& exact,
                                    const VelocityGradient& exact_grad)
{
    const FeSpaces& sp = ops.spaces();
    if (u.size() != sp.velocity_dofs()) throw DimensionMismatch("velocity vector has the wrong size");
    const auto& rule = triangle_rule();
    const int nn = sp.num_nodes();
    double l2 = 0.0, semi = 0.0;
    for (std::size_t t = 0; t < sp.num_elements(); ++t) {
        const auto& g = sp.geometry(t);
        const auto& ln = sp.local_nodes(t);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto& phi = sp.basis_at(q);
            const auto grad = P2::gradients(rule[q].lambda, g.grad_lambda);
            std::array<double, 2> uh{};
            std::array<double, 4> gh{};
            for (int i = 0; i < 6; ++i) {
                const double a = u[ln[i]], b = u[nn + ln[i]];
                uh[0] += a * phi[i];
                uh[1] += b * phi[i];
                gh[0] += a * grad[i][0];
                gh[1] += a * grad[i][1];
                gh[2] += b * grad[i][0];
                gh[3] += b * grad[i][1];
            }
            const Point x = g.map(rule[q].lambda);
            const auto ue = exact(x.x, x.y);
            const auto ge = exact_grad(x.x, x.y);
            const double wt = rule[q].weight * g.area;
            l2 += wt * ((ue[0] - uh[0]) * (ue[0] - uh[0]) + (ue[1] - uh[1]) * (ue[1] - uh[1]));
            for (int c = 0; c < 4; ++c) semi += wt * (ge[c] - gh[c]) * (ge[c] - gh[c]);
        }
    }
    return {std::sqrt(l2), std::sqrt(l2 + semi)};
}

/// L2 error of a P1 pressure after removing the mean of the difference.
inline double pressure_error(const Operators& ops, const Vector& p, const ScalarField& exact)
{
    const FeSpaces& sp = ops.spaces();
    if (p.size() != sp.pressure_dofs()) throw DimensionMismatch("pressure vector has the wrong size");
    const auto& rule = triangle_rule();
    double sq = 0.0, mean = 0.0;
    for (std::size_t t = 0; t < sp.num_elements(); ++t) {
        const auto& g = sp.geometry(t);
        const auto& pn = sp.pressure_nodes(t);
        for (const auto& q : rule) {
            const Point x = g.map(q.lambda);
            const double ph = q.lambda[0] * p[pn[0]] + q.lambda[1] * p[pn[1]] + q.lambda[2] * p[pn[2]];
            const double d = exact(x.x, x.y) - ph;
            const double wt = q.weight * g.area;
            sq += wt * d * d;
            mean += wt * d;
        }
    }
    return std::sqrt(std::max(0.0, sq - mean * mean));
}

}  // namespace dlnens::fem
