#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "dlnens/dln_core.hpp"
#include "oracle/rational_dln.hpp"
#include "support/fit.hpp"

using dlnens::coefficients;
using dlnens::StepPair;
using dlnens::Theta;
using oracle::Rational;
using oracle::to_double;

namespace {

constexpr double kTight = 1e-15;

double rel_tol(double v) { return 4e-15 * std::max(1.0, std::abs(v)); }

void expect_matches_oracle(const dlnens::DlnCoefficients& c, const oracle::RationalCoefficients& o)
{
    for (int l = 0; l < 3; ++l) {
        EXPECT_NEAR(c.alpha[l], to_double(o.alpha[l]), rel_tol(c.alpha[l])) << "alpha " << l;
        EXPECT_NEAR(c.beta[l], to_double(o.beta[l]), rel_tol(c.beta[l])) << "beta " << l;
    }
    EXPECT_NEAR(c.eps, to_double(o.eps), rel_tol(c.eps));
    EXPECT_NEAR(c.khat, to_double(o.khat), rel_tol(c.khat));
    EXPECT_NEAR(c.gamma[1] * c.gamma[1], to_double(o.gamma1_sq), rel_tol(c.gamma[1] * c.gamma[1]));
    EXPECT_NEAR(c.star[0], to_double(o.star[0]), 4 * rel_tol(c.star[0]));
    EXPECT_NEAR(c.star[1], to_double(o.star[1]), 4 * rel_tol(c.star[1]));
}

}  // namespace

TEST(Theta, RejectsOutOfRange)
{
    EXPECT_THROW(Theta(-0.1), dlnens::InvalidArgument);
    EXPECT_THROW(Theta(1.0001), dlnens::InvalidArgument);
    EXPECT_NO_THROW(Theta(0.0));
    EXPECT_NO_THROW(Theta(1.0));
}

TEST(StepPair, RejectsNonPositive)
{
    EXPECT_THROW(StepPair(0.0, 1.0), dlnens::InvalidArgument);
    EXPECT_THROW(StepPair(1.0, -1.0), dlnens::InvalidArgument);
    EXPECT_NEAR(StepPair(3.0, 1.0).variability(), 0.5, kTight);
}

TEST(Coefficients, ThetaOneIsMidpointRule)
{
    const auto c = coefficients(Theta(1.0), 0.3, 0.1);
    EXPECT_DOUBLE_EQ(c.alpha[0], 0.0);
    EXPECT_DOUBLE_EQ(c.alpha[1], -1.0);
    EXPECT_DOUBLE_EQ(c.alpha[2], 1.0);
    EXPECT_DOUBLE_EQ(c.beta[0], 0.0);
    EXPECT_DOUBLE_EQ(c.beta[1], 0.5);
    EXPECT_DOUBLE_EQ(c.beta[2], 0.5);
    EXPECT_DOUBLE_EQ(c.gamma[1], 0.0);
    EXPECT_DOUBLE_EQ(c.khat, 0.3);
}

TEST(Coefficients, ThetaZeroIsTwoStepMidpoint)
{
    const auto c = coefficients(Theta(0.0), 0.2, 0.5);
    EXPECT_DOUBLE_EQ(c.alpha[0], -0.5);
    EXPECT_DOUBLE_EQ(c.alpha[1], 0.0);
    EXPECT_DOUBLE_EQ(c.alpha[2], 0.5);
    EXPECT_DOUBLE_EQ(c.beta[0], 0.5);
    EXPECT_DOUBLE_EQ(c.beta[1], 0.0);
    EXPECT_DOUBLE_EQ(c.beta[2], 0.5);
}

TEST(Coefficients, TwoThirdsUniformMatchesRationalOracle)
{
    const Rational th(2, 3);
    const Rational k(1, 10);
    const auto o = oracle::dln_coefficients(th, k, k);
    const auto c = coefficients(Theta(2.0 / 3.0), 0.1, 0.1);
    expect_matches_oracle(c, o);
    EXPECT_EQ(c.eps, 0.0);
    EXPECT_NEAR(c.khat, 0.1, kTight);
}

TEST(Coefficients, TwoThirdsUnevenMatchesRationalOracle)
{
    const std::vector<std::pair<Rational, Rational>> steps = {
        {Rational(3, 10), Rational(1, 5)}, {Rational(1, 7), Rational(2, 5)}, {Rational(1, 1000), Rational(1, 3)}};
    for (const auto& [kn, knm1] : steps) {
        const auto o = oracle::dln_coefficients(Rational(2, 3), kn, knm1);
        const auto c = coefficients(Theta(2.0 / 3.0), to_double(kn), to_double(knm1));
        expect_matches_oracle(c, o);
    }
}

TEST(Coefficients, ConsistencySumsOverGrid)
{
    for (double th = 0.0; th <= 1.0 + 1e-12; th += 0.05) {
        for (double eps = -0.95; eps < 0.96; eps += 0.05) {
            // k_n/k_{n-1} = (1+eps)/(1-eps)
            const auto c = coefficients(Theta(std::min(th, 1.0)), 1.0 + eps, 1.0 - eps);
            EXPECT_NEAR(c.alpha[0] + c.alpha[1] + c.alpha[2], 0.0, kTight);
            EXPECT_NEAR(c.beta[0] + c.beta[1] + c.beta[2], 1.0, 4 * kTight);
            EXPECT_NEAR(c.gamma[0] + c.gamma[1] + c.gamma[2], 0.0, kTight);
            EXPECT_NEAR(c.star[0] + c.star[1], 1.0, 16 * kTight);
            EXPECT_GT(c.khat, 0.0);
        }
    }
}

TEST(Coefficients, BetaBoundsHoldForThetaBelowOne)
{
    for (double th = 0.0; th < 0.999; th += 0.03) {
        const auto bounds = dlnens::beta_bounds(Theta(th));
        for (double eps = -0.99; eps < 0.995; eps += 0.01) {
            const auto c = coefficients(Theta(th), 1.0 + eps, 1.0 - eps);
            for (int l = 0; l < 3; ++l) {
                EXPECT_GT(c.beta[l], bounds.lower[l] - 1e-14) << "theta " << th << " eps " << eps << " l " << l;
                EXPECT_LT(c.beta[l], bounds.upper[l] + 1e-14) << "theta " << th << " eps " << eps << " l " << l;
            }
        }
    }
    EXPECT_THROW(dlnens::beta_bounds(Theta(1.0)), dlnens::InvalidArgument);
}

TEST(Blends, ConstantSequence)
{
    const auto c = coefficients(Theta(2.0 / 3.0), 0.3, 0.2);
    const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(5, -1.0, 3.0);
    EXPECT_LT(dlnens::blend_alpha(c, y, y, y).norm(), 1e-15);
    EXPECT_LT((dlnens::blend_beta(c, y, y, y) - y).norm(), 1e-14);
    EXPECT_LT((dlnens::blend_star(c, y, y) - y).norm(), 1e-14);
}

TEST(Blends, DimensionMismatchThrows)
{
    const auto c = coefficients(Theta(0.5), 0.3, 0.2);
    const Eigen::VectorXd a = Eigen::VectorXd::Ones(3);
    const Eigen::VectorXd b = Eigen::VectorXd::Ones(4);
    EXPECT_THROW(dlnens::blend_alpha(c, a, a, b), dlnens::DimensionMismatch);
    EXPECT_THROW(dlnens::blend_star(c, a, b), dlnens::DimensionMismatch);
    EXPECT_THROW(dlnens::g_norm_sq(a, b, Theta(0.5)), dlnens::DimensionMismatch);
}

TEST(Blends, StarOfLinearEqualsTBetaExactly)
{
    // Symbolic check in rational arithmetic: w1 t_n + w0 t_{n-1} == sum beta_l t_{n-1+l}.
    const std::vector<std::array<Rational, 3>> grids = {
        {Rational(0), Rational(1, 3), Rational(1, 2)}, {Rational(1), Rational(6, 5), Rational(2)}};
    for (const Rational th : {Rational(2, 3), Rational(1, 5), Rational(1)}) {
        for (const auto& t : grids) {
            const auto o = oracle::dln_coefficients(th, t[2] - t[1], t[1] - t[0]);
            const Rational star = o.star[1] * t[1] + o.star[0] * t[0];
            const Rational tb = o.beta[0] * t[0] + o.beta[1] * t[1] + o.beta[2] * t[2];
            EXPECT_EQ(star, tb);
        }
    }
    // And in floating point through the public API.
    const auto c = coefficients(Theta(2.0 / 3.0), 0.5 - 0.3, 0.3);
    EXPECT_NEAR(dlnens::blend_star(c, 0.0, 0.3), dlnens::t_beta(c, 0.0, 0.3, 0.5), 1e-15);
}

TEST(TBeta, KnownValuesAndErrors)
{
    EXPECT_DOUBLE_EQ(dlnens::t_beta(coefficients(Theta(1.0), 1.0, 1.0), 0.0, 1.0, 2.0), 1.5);
    EXPECT_DOUBLE_EQ(dlnens::t_beta(coefficients(Theta(0.0), 1.0, 1.0), 0.0, 1.0, 2.0), 1.0);

    const Rational t0(0), t1(2, 10), t2(1, 2);
    const auto o = oracle::dln_coefficients(Rational(2, 3), t2 - t1, t1 - t0);
    const Rational tb = o.beta[0] * t0 + o.beta[1] * t1 + o.beta[2] * t2;
    const auto c = coefficients(Theta(2.0 / 3.0), 0.3, 0.2);
    const double got = dlnens::t_beta(c, 0.0, 0.2, 0.5);
    EXPECT_NEAR(got, to_double(tb), 1e-15);
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, 0.5);

    EXPECT_THROW(dlnens::t_beta(c, 0.0, 0.5, 0.2), dlnens::InvalidArgument);
}

TEST(GNorm, ClosedForms)
{
    const Eigen::Vector3d u(1.0, 2.0, -1.0);
    const Eigen::Vector3d v(0.5, 0.0, 3.0);
    EXPECT_NEAR(dlnens::g_norm_sq(u, v, Theta(1.0)), u.squaredNorm() / 2, 1e-15);
    EXPECT_NEAR(dlnens::g_norm_sq(u, v, Theta(0.0)), (u.squaredNorm() + v.squaredNorm()) / 4, 1e-15);

    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd a(20), b(20);
        for (int i = 0; i < 20; ++i) {
            a[i] = nd(rng);
            b[i] = nd(rng);
        }
        const double th = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        double aa = 0, bb = 0;
        for (int i = 0; i < 20; ++i) {
            aa += a[i] * a[i];
            bb += b[i] * b[i];
        }
        EXPECT_NEAR(dlnens::g_norm_sq(a, b, Theta(th)), (1 + th) / 4 * aa + (1 - th) / 4 * bb, 1e-12);
        EXPECT_GE(dlnens::g_norm_sq(a, b, Theta(th)), 0.0);
    }
}

TEST(GIdentity, TrivialSequences)
{
    const Eigen::VectorXd z = Eigen::VectorXd::Zero(4);
    EXPECT_EQ(dlnens::g_identity_residual(z, z, z, Theta(0.5), StepPair(0.1, 0.2)), 0.0);
    const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(4, 1.0, 2.0);
    EXPECT_LT(dlnens::g_identity_residual(y, y, y, Theta(0.5), StepPair(0.1, 0.2)), 1e-14);
}

TEST(GIdentity, HoldsForRandomDraws)
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> sym(-1.0, 1.0);
    std::normal_distribution<double> nd;
    const std::vector<int> dims = {1, 2, 10, 100};
    for (int trial = 0; trial < 1000; ++trial) {
        const double th = trial % 50 == 0 ? 1.0 : unit(rng);
        const double eps = 0.99 * sym(rng);
        const int dim = trial % 100 == 0 ? 10000 : dims[trial % dims.size()];
        Eigen::VectorXd a(dim), b(dim), c(dim);
        for (int i = 0; i < dim; ++i) {
            a[i] = nd(rng);
            b[i] = nd(rng);
            c[i] = nd(rng);
        }
        const auto coeffs = coefficients(Theta(th), StepPair(1.0 + eps, 1.0 - eps));
        const auto terms = dlnens::g_identity_terms(coeffs, a, b, c);
        EXPECT_LE(terms.residual(), 1e-12 * terms.scale()) << "theta " << th << " eps " << eps;
    }
}

namespace {

double smooth(double t) { return std::sin(2.0 * t) + std::exp(0.5 * t); }
double smooth_dt(double t) { return 2.0 * std::cos(2.0 * t) + 0.5 * std::exp(0.5 * t); }

struct ConsistencyErrors {
    double beta = 0, star = 0, alpha = 0;
};

ConsistencyErrors consistency_errors(double theta, double k, const std::vector<double>& pattern)
{
    std::vector<double> t = {0.0};
    for (std::size_t i = 0; t.back() < 1.0; ++i) {
        t.push_back(t.back() + k * pattern[i % pattern.size()]);
    }
    ConsistencyErrors e;
    for (std::size_t n = 1; n + 1 < t.size(); ++n) {
        const auto c = coefficients(Theta(theta), t[n + 1] - t[n], t[n] - t[n - 1]);
        const double tb = dlnens::t_beta(c, t[n - 1], t[n], t[n + 1]);
        const double y0 = smooth(t[n - 1]), y1 = smooth(t[n]), y2 = smooth(t[n + 1]);
        e.beta = std::max(e.beta, std::abs(dlnens::blend_beta(c, y0, y1, y2) - smooth(tb)));
        e.star = std::max(e.star, std::abs(dlnens::blend_star(c, y0, y1) - smooth(tb)));
        e.alpha = std::max(e.alpha, std::abs(dlnens::blend_alpha(c, y0, y1, y2) / c.khat - smooth_dt(tb)));
    }
    return e;
}

}  // namespace

TEST(Consistency, AffineFunctionsReproducedExactlyAtTBeta)
{
    const auto c = coefficients(Theta(2.0 / 3.0), 0.37, 0.21);
    const double t0 = 0.4, t1 = t0 + 0.21, t2 = t1 + 0.37;
    auto f = [](double t) { return 3.0 - 2.0 * t; };
    const double tb = dlnens::t_beta(c, t0, t1, t2);
    EXPECT_NEAR(dlnens::blend_beta(c, f(t0), f(t1), f(t2)), f(tb), 1e-14);
    EXPECT_NEAR(dlnens::blend_star(c, f(t0), f(t1)), f(tb), 1e-14);
    EXPECT_NEAR(dlnens::blend_alpha(c, f(t0), f(t1), f(t2)) / c.khat, -2.0, 1e-13);
}

TEST(Consistency, SecondOrderOnNonUniformPattern)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ratio(0.5, 1.5);
    std::vector<double> pattern(17);
    for (auto& r : pattern) r = ratio(rng);

    for (const double theta : {2.0 / 3.0, 2.0 / std::sqrt(5.0)}) {
        std::vector<double> ks, eb, es, ea;
        for (double k = 1.0 / 40; k > 1.0 / 700; k /= 2) {
            const auto e = consistency_errors(theta, k, pattern);
            ks.push_back(k);
            eb.push_back(e.beta);
            es.push_back(e.star);
            ea.push_back(e.alpha);
        }
        for (const auto* errs : {&eb, &es, &ea}) {
            const double slope = testsupport::loglog_slope(ks, *errs);
            EXPECT_GE(slope, 1.9) << "theta " << theta;
            EXPECT_LE(slope, 2.1) << "theta " << theta;
        }
    }
}
