#pragma once
// Exact-rational evaluation of the DLN coefficient table and of the
// estimator coefficients, used as an independent oracle in tests. Only
// rational theta and step sizes are representable, so gamma is checked
// through gamma_1^2.

#include <array>

#include <boost/multiprecision/cpp_int.hpp>

namespace oracle {

using Rational = boost::multiprecision::cpp_rational;

struct RationalCoefficients {
    std::array<Rational, 3> alpha;
    std::array<Rational, 3> beta;
    Rational eps;
    Rational khat;
    Rational gamma1_sq;
    std::array<Rational, 2> star;  // (w0, w1)
};

inline RationalCoefficients dln_coefficients(const Rational& th, const Rational& k_n, const Rational& k_nm1)
{
    RationalCoefficients c;
    c.eps = (k_n - k_nm1) / (k_n + k_nm1);
    c.alpha = {Rational(th - 1) / 2, -th, Rational(th + 1) / 2};
    const Rational d = (1 + c.eps * th) * (1 + c.eps * th);
    const Rational a = (1 - th * th) / d;
    const Rational b = c.eps * c.eps * th * (1 - th * th) / d;
    c.beta[2] = (1 + a + b + th) / 4;
    c.beta[1] = (1 - a) / 2;
    c.beta[0] = (1 + a - b - th) / 4;
    c.khat = c.alpha[2] * k_n - c.alpha[0] * k_nm1;
    c.gamma1_sq = th * (1 - th * th) / (2 * d);
    const Rational tau = k_n / k_nm1;
    c.star[1] = c.beta[2] * (1 + tau) + c.beta[1];
    c.star[0] = c.beta[0] - c.beta[2] * tau;
    return c;
}

/// G^(n) from the coefficients of step n and tau_n = k_n / k_{n-1}.
inline Rational g_coefficient(const RationalCoefficients& cn, const Rational& tau_n)
{
    const Rational r = cn.alpha[0] / cn.alpha[2];
    const Rational inv = 1 / tau_n;
    const Rational f = cn.beta[2] - cn.beta[0] * inv;
    return (Rational(1) / 2 - r / 2 * inv) * f * f + r / 6 * inv * inv * inv - Rational(1) / 6;
}

/// R^(n) from the coefficients of steps n-1 and n-2 and tau_n, tau_{n-1}, tau_{n-2}.
inline Rational r_coefficient(const RationalCoefficients& cnm1, const RationalCoefficients& cnm2,
                              const Rational& tau_n, const Rational& tau_nm1, const Rational& tau_nm2)
{
    const Rational in = 1 / tau_n;
    const Rational in1 = 1 / tau_nm1;
    const Rational in2 = 1 / tau_nm2;
    const Rational a1 = 1 - cnm2.beta[2] * in1 + cnm2.beta[0] * in2 * in1;
    const Rational a2 = 1 - cnm1.beta[2] * in + cnm1.beta[0] * in1 * in;
    const Rational b1 = 1 + in - cnm2.beta[2] * in1 * in + cnm2.beta[0] * in2 * in1 * in;
    const Rational b2 = -cnm1.beta[2] + cnm1.beta[0] * in1;
    return (2 + 3 * in * a1 * a2 + 3 * in * b1 * b2) / 12;
}

/// AB2-like prediction at t[4] from samples y[0..3] at t[0..3], evaluated straight from
/// the divided-difference form.
inline Rational ab2_like(const Rational& th, const std::array<Rational, 5>& t, const std::array<Rational, 4>& y)
{
    const auto c1 = dln_coefficients(th, t[3] - t[2], t[2] - t[1]);
    const auto c2 = dln_coefficients(th, t[2] - t[1], t[1] - t[0]);
    const Rational tb1 = c1.beta[0] * t[1] + c1.beta[1] * t[2] + c1.beta[2] * t[3];
    const Rational tb2 = c2.beta[0] * t[0] + c2.beta[1] * t[1] + c2.beta[2] * t[2];
    const Rational g1 = (c1.alpha[0] * y[1] + c1.alpha[1] * y[2] + c1.alpha[2] * y[3]) / c1.khat;
    const Rational g2 = (c2.alpha[0] * y[0] + c2.alpha[1] * y[1] + c2.alpha[2] * y[2]) / c2.khat;
    return y[3] + (t[4] - t[3]) / (2 * (tb1 - tb2)) *
                      ((t[4] + t[3] - 2 * tb2) * g1 - (t[4] + t[3] - 2 * tb1) * g2);
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace oracle
