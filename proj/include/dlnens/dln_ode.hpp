#pragma once
// Variable-step DLN integrator for y' = g(t, y), in the direct one-leg form
// and in the refactorized pre-filter / backward-Euler-like / post-filter form.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dlnens/dln_core.hpp"
#include "dlnens/error.hpp"

namespace dlnens::ode {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct IvpProblem {
    Eigen::Index dimension = 0;
    std::function<Vector(double, const Vector&)> rhs;
    /// Optional analytic Jacobian dg/dy.
    std::function<Matrix(double, const Vector&)> jacobian;

    Vector eval(double t, const Vector& y) const
    {
        Vector g = rhs(t, y);
        if (g.size() != dimension) {
            throw DimensionMismatch("rhs returned a vector of the wrong dimension");
        }
        return g;
    }
};

enum class JacobianMode { analytic, finite_difference };

struct NonlinearSolveOptions {
    double tolerance = 1e-12;
    int max_iterations = 50;
    JacobianMode jacobian_mode = JacobianMode::analytic;
};

/// Two most recent solution levels.
struct History {
    double t_nm1 = 0.0;
    Vector y_nm1;
    double t_n = 0.0;
    Vector y_n;

    double previous_step() const { return t_n - t_nm1; }
};

struct StepResult {
    double t_np1 = 0.0;
    Vector y_np1;
    int iterations = 0;
};

struct RefactorizedStepResult : StepResult {
    /// Solution of the backward-Euler-like stage (equals y_{n,beta}).
    Vector y_be;
    double k_be = 0.0;
};

namespace detail {

inline Matrix jacobian_of(const IvpProblem& p, double t, const Vector& y, JacobianMode mode)
{
    if (mode == JacobianMode::analytic && p.jacobian) {
        return p.jacobian(t, y);
    }
    const Vector g0 = p.eval(t, y);
    Matrix jac(p.dimension, p.dimension);
    const double root_eps = std::sqrt(std::numeric_limits<double>::epsilon());
    Vector yp = y;
    for (Eigen::Index i = 0; i < p.dimension; ++i) {
        const double inc = root_eps * (1.0 + std::abs(y[i]));
        yp[i] = y[i] + inc;
        jac.col(i) = (p.eval(t, yp) - g0) / inc;
        yp[i] = y[i];
    }
    return jac;
}

/// Newton iteration for F(x) = a x - b - s g(t, x) = 0.
inline Vector solve_shifted(const IvpProblem& p, double t, double a, const Vector& b, double s, Vector x,
                            double scale, const NonlinearSolveOptions& opts, int& iterations)
{
    const Matrix eye = Matrix::Identity(p.dimension, p.dimension);
    Vector residual = a * x - b - s * p.eval(t, x);
    double rnorm = residual.norm();
    iterations = 0;
    while (rnorm > opts.tolerance * scale) {
        if (iterations == opts.max_iterations) {
            throw NonConvergence(iterations, rnorm);
        }
        const Matrix jac = a * eye - s * jacobian_of(p, t, x, opts.jacobian_mode);
        const Vector dx = jac.partialPivLu().solve(residual);
        x -= dx;
        ++iterations;
        residual = a * x - b - s * p.eval(t, x);
        rnorm = residual.norm();
        if (!std::isfinite(rnorm)) {
            throw NonConvergence(iterations, rnorm);
        }
        if (dx.norm() <= 1e-16 * (1.0 + x.norm())) {
            break;
        }
    }
    return x;
}

inline void check_history(const History& h, double k_n)
{
    if (!(k_n > 0.0)) {
        throw InvalidArgument("step must be positive");
    }
    if (!(h.t_n > h.t_nm1)) {
        throw InvalidArgument("history times must be strictly increasing");
    }
    if (h.y_n.size() != h.y_nm1.size()) {
        throw DimensionMismatch("history levels differ in dimension");
    }
}

}  // namespace detail

/// One DLN step solving sum alpha_l y = khat g(t_beta, sum beta_l y) for y_{n+1}.
inline StepResult dln_step(const IvpProblem& p, const History& h, double k_n, Theta theta,
                           const NonlinearSolveOptions& opts = {})
{
    detail::check_history(h, k_n);
    const auto c = coefficients(theta, k_n, h.previous_step());
    const double t_np1 = h.t_n + k_n;
    const double tb = t_beta(c, h.t_nm1, h.t_n, t_np1);

    // alpha_2 y + known_alpha = khat g(tb, beta_2 y + known_beta), solved for y = y_{n+1}
    const Vector known_alpha = c.alpha[1] * h.y_n + c.alpha[0] * h.y_nm1;
    const Vector known_beta = c.beta[1] * h.y_n + c.beta[0] * h.y_nm1;

    IvpProblem shifted{p.dimension,
                       [&](double t, const Vector& y) { return p.eval(t, known_beta + c.beta[2] * y); },
                       {}};
    if (p.jacobian) {
        shifted.jacobian = [&](double t, const Vector& y) {
            return Matrix(c.beta[2] * p.jacobian(t, known_beta + c.beta[2] * y));
        };
    }

    // Explicit extrapolation of y_{n+1} as the Newton start.
    const Vector guess = (1.0 + k_n / h.previous_step()) * h.y_n - (k_n / h.previous_step()) * h.y_nm1;

    StepResult r;
    r.t_np1 = t_np1;
    r.y_np1 = detail::solve_shifted(shifted, tb, c.alpha[2], -known_alpha, c.khat, guess, 1.0 + h.y_n.norm(),
                                    opts, r.iterations);
    return r;
}

/// Same step realized as pre-filter, backward-Euler-like solve at t_beta with step k_be, post-filter.
inline RefactorizedStepResult refactorized_step(const IvpProblem& p, const History& h, double k_n, Theta theta,
                                                const NonlinearSolveOptions& opts = {})
{
    detail::check_history(h, k_n);
    const auto c = coefficients(theta, k_n, h.previous_step());
    const double t_np1 = h.t_n + k_n;
    const double tb = t_beta(c, h.t_nm1, h.t_n, t_np1);

    const auto pre = c.prefilter();
    const Vector y_old = pre[1] * h.y_n + pre[0] * h.y_nm1;
    const double k_be = c.k_be();

    RefactorizedStepResult r;
    r.k_be = k_be;
    r.t_np1 = t_np1;
    r.y_be = detail::solve_shifted(p, tb, 1.0, y_old, k_be, blend_star(c, h.y_nm1, h.y_n), 1.0 + h.y_n.norm(),
                                   opts, r.iterations);
    r.y_np1 = (r.y_be - c.beta[1] * h.y_n - c.beta[0] * h.y_nm1) / c.beta[2];
    return r;
}

struct TrajectoryPoint {
    double t;
    Vector y;
};

using Trajectory = std::vector<TrajectoryPoint>;

enum class StepForm { direct, refactorized };

/// Integrate from the two start levels (t0, y0), (t0 + k0, y1) over the given steps k_1, k_2, ...
inline Trajectory integrate(const IvpProblem& p, double t0, const Vector& y0, double k0, const Vector& y1,
                            const std::vector<double>& steps, Theta theta, const NonlinearSolveOptions& opts = {},
                            StepForm form = StepForm::direct)
{
    Trajectory traj;
    traj.reserve(steps.size() + 2);
    traj.push_back({t0, y0});
    traj.push_back({t0 + k0, y1});
    History h{t0, y0, t0 + k0, y1};
    for (const double k : steps) {
        StepResult s = form == StepForm::direct ? dln_step(p, h, k, theta, opts)
                                                : static_cast<StepResult>(refactorized_step(p, h, k, theta, opts));
        h.t_nm1 = h.t_n;
        h.y_nm1 = std::move(h.y_n);
        h.t_n = s.t_np1;
        h.y_n = s.y_np1;
        traj.push_back({s.t_np1, std::move(s.y_np1)});
    }
    return traj;
}

}  // namespace dlnens::ode
