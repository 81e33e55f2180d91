#pragma once
// Coefficients of the variable-step DLN one-leg family and the blends built from them.
// Works on any vector type with a * x + b * y; the inner product is a callable so FE
// coefficient vectors can use a mass-weighted one.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>

#include "dlnens/error.hpp"

namespace dlnens {

/// Parameter of the DLN family, 0 <= theta <= 1.
class Theta {
public:
    constexpr Theta() = default;
    explicit Theta(double value) : value_(value)
    {
        if (!(value >= 0.0 && value <= 1.0)) {
            throw InvalidArgument("theta must lie in [0, 1], got " + std::to_string(value));
        }
    }

    constexpr double value() const { return value_; }

    static Theta two_thirds() { return Theta(2.0 / 3.0); }
    static Theta two_over_sqrt5() { return Theta(2.0 / std::sqrt(5.0)); }

private:
    double value_ = 2.0 / 3.0;
};

/// Current and previous step sizes (k_n, k_{n-1}).
class StepPair {
public:
    StepPair(double k_n, double k_nm1) : k_n_(k_n), k_nm1_(k_nm1)
    {
        if (!(k_n > 0.0) || !(k_nm1 > 0.0) || !std::isfinite(k_n) || !std::isfinite(k_nm1)) {
            throw InvalidArgument("time steps must be positive and finite");
        }
    }

    double current() const { return k_n_; }
    double previous() const { return k_nm1_; }
    double ratio() const { return k_n_ / k_nm1_; }
    /// Step variability eps_n = (k_n - k_{n-1}) / (k_n + k_{n-1}), always in (-1, 1).
    double variability() const { return (k_n_ - k_nm1_) / (k_n_ + k_nm1_); }

private:
    double k_n_;
    double k_nm1_;
};

/// All per-step numbers of the scheme. Index l of alpha/beta/gamma multiplies y_{n-1+l}.
struct DlnCoefficients {
    double theta = 0.0;
    double k_n = 0.0;
    double k_nm1 = 0.0;
    std::array<double, 3> alpha{};
    std::array<double, 3> beta{};
    std::array<double, 3> gamma{};
    double eps = 0.0;
    double khat = 0.0;
    /// Weights (w0, w1) of the explicit extrapolation z_{n,*} = w1 z_n + w0 z_{n-1}.
    std::array<double, 2> star{};

    /// Step of the equivalent backward-Euler-like solve, (beta_2 / alpha_2) * khat.
    double k_be() const { return beta[2] / alpha[2] * khat; }

    /// Pre-filter weights mapping (y_{n-1}, y_n) to y_{n,old}.
    std::array<double, 2> prefilter() const
    {
        return {beta[0] - alpha[0] * beta[2] / alpha[2], beta[1] - alpha[1] * beta[2] / alpha[2]};
    }
};

inline DlnCoefficients coefficients(Theta theta_param, StepPair steps)
{
    const double th = theta_param.value();
    const double eps = steps.variability();

    DlnCoefficients c;
    c.theta = th;
    c.k_n = steps.current();
    c.k_nm1 = steps.previous();
    c.eps = eps;

    c.alpha = {0.5 * (th - 1.0), -th, 0.5 * (th + 1.0)};

    const double denom = (1.0 + eps * th) * (1.0 + eps * th);
    const double a = (1.0 - th * th) / denom;
    const double b = eps * eps * th * (1.0 - th * th) / denom;
    c.beta[2] = 0.25 * (1.0 + a + b + th);
    c.beta[1] = 0.5 * (1.0 - a);
    c.beta[0] = 0.25 * (1.0 + a - b - th);

    const double g1 = -std::sqrt(th * (1.0 - th * th)) / (std::sqrt(2.0) * (1.0 + eps * th));
    c.gamma = {-0.5 * (1.0 + eps) * g1, g1, -0.5 * (1.0 - eps) * g1};

    c.khat = c.alpha[2] * c.k_n - c.alpha[0] * c.k_nm1;

    const double tau = steps.ratio();
    c.star[1] = c.beta[2] * (1.0 + tau) + c.beta[1];
    c.star[0] = c.beta[0] - c.beta[2] * tau;
    return c;
}

inline DlnCoefficients coefficients(Theta theta, double k_n, double k_nm1)
{
    return coefficients(theta, StepPair(k_n, k_nm1));
}

/// Lower/upper bounds on beta_l valid for theta in [0, 1) and any eps in (-1, 1).
struct BetaBounds {
    std::array<double, 3> lower;
    std::array<double, 3> upper;
};

inline BetaBounds beta_bounds(Theta theta_param)
{
    const double th = theta_param.value();
    if (th >= 1.0) {
        throw InvalidArgument("beta bounds are stated for theta < 1 only");
    }
    BetaBounds b{};
    b.lower[2] = (2.0 + th + th * th) / (4.0 * (1.0 + th));
    b.upper[2] = (1.0 + th) / (2.0 * (1.0 - th));
    b.lower[1] = -th / (1.0 - th);
    b.upper[1] = th / (1.0 + th);
    b.lower[0] = (1.0 - 2.0 * th - th * th) / (2.0 * (1.0 - th) * (1.0 + th));
    b.upper[0] = (2.0 - th + th * th) / (4.0 * (1.0 - th));
    return b;
}

namespace detail {

template <class V>
void require_same_size(const V& a, const V& b)
{
    if constexpr (requires { a.size(); }) {
        if (a.size() != b.size()) {
            throw DimensionMismatch("blend operands differ in dimension");
        }
    }
}

template <class V>
auto materialize(V&& v)
{
    if constexpr (requires { v.eval(); }) {
        return v.eval();
    } else {
        return v;
    }
}

}  // namespace detail

/// Euclidean inner product for arithmetic scalars and Eigen-like vectors.
struct EuclideanInner {
    template <class V>
    double operator()(const V& a, const V& b) const
    {
        if constexpr (std::is_arithmetic_v<V>) {
            return static_cast<double>(a) * static_cast<double>(b);
        } else {
            detail::require_same_size(a, b);
            return a.dot(b);
        }
    }
};

/// z_{n,alpha} = alpha_0 y_{n-1} + alpha_1 y_n + alpha_2 y_{n+1}
template <class V>
auto blend_alpha(const DlnCoefficients& c, const V& y_nm1, const V& y_n, const V& y_np1)
{
    detail::require_same_size(y_nm1, y_n);
    detail::require_same_size(y_n, y_np1);
    return detail::materialize(c.alpha[0] * y_nm1 + c.alpha[1] * y_n + c.alpha[2] * y_np1);
}

/// z_{n,beta} = beta_0 y_{n-1} + beta_1 y_n + beta_2 y_{n+1}
template <class V>
auto blend_beta(const DlnCoefficients& c, const V& y_nm1, const V& y_n, const V& y_np1)
{
    detail::require_same_size(y_nm1, y_n);
    detail::require_same_size(y_n, y_np1);
    return detail::materialize(c.beta[0] * y_nm1 + c.beta[1] * y_n + c.beta[2] * y_np1);
}

/// Explicit second-order extrapolation of y at t_{n,beta} from the two known levels.
template <class V>
auto blend_star(const DlnCoefficients& c, const V& y_nm1, const V& y_n)
{
    detail::require_same_size(y_nm1, y_n);
    return detail::materialize(c.star[0] * y_nm1 + c.star[1] * y_n);
}

/// Numerical-dissipation combination sum_l gamma_l y_{n-1+l}.
template <class V>
auto blend_gamma(const DlnCoefficients& c, const V& y_nm1, const V& y_n, const V& y_np1)
{
    detail::require_same_size(y_nm1, y_n);
    detail::require_same_size(y_n, y_np1);
    return detail::materialize(c.gamma[0] * y_nm1 + c.gamma[1] * y_n + c.gamma[2] * y_np1);
}

/// t_{n,beta}; requires t_{n-1} < t_n < t_{n+1}.
inline double t_beta(const DlnCoefficients& c, double t_nm1, double t_n, double t_np1)
{
    if (!(t_nm1 < t_n && t_n < t_np1)) {
        throw InvalidArgument("time triple must be strictly increasing");
    }
    return c.beta[0] * t_nm1 + c.beta[1] * t_n + c.beta[2] * t_np1;
}

/// ||(u, v)||_G^2 = (1+theta)/4 |u|^2 + (1-theta)/4 |v|^2
template <class V, class Inner = EuclideanInner>
double g_norm_sq(const V& u, const V& v, Theta theta, Inner inner = {})
{
    detail::require_same_size(u, v);
    const double th = theta.value();
    return 0.25 * (1.0 + th) * inner(u, u) + 0.25 * (1.0 - th) * inner(v, v);
}

/// Terms of the G-stability identity for one step.
struct GIdentityTerms {
    double lhs = 0.0;          ///< (z_alpha, z_beta)
    double g_difference = 0.0; ///< |(y_{n+1}, y_n)|_G^2 - |(y_n, y_{n-1})|_G^2
    double dissipation = 0.0;  ///< |sum gamma_l y|^2

    double residual() const { return std::abs(lhs - g_difference - dissipation); }
    double scale() const
    {
        return std::max({std::abs(lhs), std::abs(g_difference), std::abs(dissipation)});
    }
};

template <class V, class Inner = EuclideanInner>
GIdentityTerms g_identity_terms(const DlnCoefficients& c, const V& y_nm1, const V& y_n, const V& y_np1,
                                Inner inner = {})
{
    const Theta th(c.theta);
    const auto za = blend_alpha(c, y_nm1, y_n, y_np1);
    const auto zb = blend_beta(c, y_nm1, y_n, y_np1);
    const auto zg = blend_gamma(c, y_nm1, y_n, y_np1);

    GIdentityTerms t;
    t.lhs = inner(za, zb);
    t.g_difference = g_norm_sq(y_np1, y_n, th, inner) - g_norm_sq(y_n, y_nm1, th, inner);
    t.dissipation = inner(zg, zg);
    return t;
}

/// |LHS - RHS| of the G-stability identity.
template <class V, class Inner = EuclideanInner>
double g_identity_residual(const V& y_nm1, const V& y_n, const V& y_np1, Theta theta, StepPair steps,
                           Inner inner = {})
{
    return g_identity_terms(coefficients(theta, steps), y_nm1, y_n, y_np1, inner).residual();
}

}  // namespace dlnens
