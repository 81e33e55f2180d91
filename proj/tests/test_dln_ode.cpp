#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "dlnens/dln_ode.hpp"
#include "support/fit.hpp"

using namespace dlnens;
using namespace dlnens::ode;

namespace {

IvpProblem linear_scalar(double lambda)
{
    return IvpProblem{1, [lambda](double, const Vector& y) { return Vector(lambda * y); },
                      [lambda](double, const Vector&) { return Matrix::Constant(1, 1, lambda); }};
}

/// y' = lambda (y - cos t) - sin t, exact y = cos t.
IvpProblem prothero_robinson(double lambda)
{
    return IvpProblem{
        1,
        [lambda](double t, const Vector& y) {
            return Vector::Constant(1, lambda * (y[0] - std::cos(t)) - std::sin(t)).eval();
        },
        [lambda](double, const Vector&) { return Matrix::Constant(1, 1, lambda); }};
}

/// Mildly nonlinear 2-d system with no analytic Jacobian.
IvpProblem nonlinear_pair()
{
    return IvpProblem{2, [](double t, const Vector& y) {
                          Vector g(2);
                          g[0] = y[1] - 0.5 * y[0] * y[0] * y[0];
                          g[1] = -y[0] - 0.2 * y[1] + 0.1 * std::sin(t);
                          return g;
                      },
                      {}};
}

std::vector<double> pattern_grid(double k, double length, const std::vector<double>& pattern)
{
    std::vector<double> steps;
    double t = 0.0;
    for (std::size_t i = 0; t < length - 1e-12; ++i) {
        double s = k * pattern[i % pattern.size()];
        if (t + s > length) s = length - t;
        steps.push_back(s);
        t += s;
    }
    return steps;
}

}  // namespace

TEST(DlnStep, ZeroRhsIsLinearRecursion)
{
    IvpProblem p{2, [](double, const Vector&) { return Vector::Zero(2).eval(); }, {}};
    const History h{0.0, Vector::Constant(2, 1.0), 0.3, Vector::Constant(2, 2.0)};
    const Theta th(0.6);
    const auto c = coefficients(th, 0.5, 0.3);
    const auto r = dln_step(p, h, 0.5, th);
    const Vector expected = -(c.alpha[1] * h.y_n + c.alpha[0] * h.y_nm1) / c.alpha[2];
    EXPECT_LT((r.y_np1 - expected).norm(), 1e-14);
    EXPECT_DOUBLE_EQ(r.t_np1, 0.8);

    const auto rf = refactorized_step(p, h, 0.5, th);
    EXPECT_LT((rf.y_np1 - r.y_np1).norm(), 1e-14);
}

TEST(DlnStep, MidpointClosedForm)
{
    const double lambda = -3.0, k = 0.1;
    const History h{0.0, Vector::Constant(1, 1.3), k, Vector::Constant(1, 0.7)};
    const auto r = dln_step(linear_scalar(lambda), h, k, Theta(1.0));
    EXPECT_NEAR(r.y_np1[0], 0.7 * (1 + lambda * k / 2) / (1 - lambda * k / 2), 1e-15);
}

TEST(DlnStep, ExponentialDecayConvergesAtSecondOrder)
{
    const Theta th(2.0 / 3.0);
    std::vector<double> ks, errs;
    for (int n = 20; n <= 320; n *= 2) {
        const double k = 1.0 / n;
        const auto traj = integrate(linear_scalar(-1.0), 0.0, Vector::Constant(1, 1.0), k,
                                    Vector::Constant(1, std::exp(-k)), std::vector<double>(n - 1, k), th);
        EXPECT_NEAR(traj.back().t, 1.0, 1e-12);
        ks.push_back(k);
        errs.push_back(std::abs(traj.back().y[0] - std::exp(-1.0)));
    }
    for (std::size_t i = 1; i < errs.size(); ++i) {
        EXPECT_NEAR(errs[i - 1] / errs[i], 4.0, 0.3);
    }
    EXPECT_NEAR(testsupport::loglog_slope(ks, errs), 2.0, 0.1);
}

TEST(DlnStep, NonConvergenceIsReported)
{
    NonlinearSolveOptions opts;
    opts.max_iterations = 1;
    opts.tolerance = 1e-15;
    const History h{0.0, Vector::Constant(2, 1.0), 0.5, Vector::Constant(2, 1.5)};
    EXPECT_THROW(dln_step(nonlinear_pair(), h, 0.8, Theta(0.5), opts), NonConvergence);
}

TEST(DlnStep, FiniteDifferenceJacobianAgreesWithAnalytic)
{
    const auto p = prothero_robinson(-50.0);
    const History h{0.0, Vector::Constant(1, 1.0), 0.01, Vector::Constant(1, std::cos(0.01))};
    NonlinearSolveOptions fd;
    fd.jacobian_mode = JacobianMode::finite_difference;
    const auto a = dln_step(p, h, 0.02, Theta(0.7));
    const auto b = dln_step(p, h, 0.02, Theta(0.7), fd);
    EXPECT_NEAR(a.y_np1[0], b.y_np1[0], 1e-12);
}

TEST(DlnStep, BadHistoryRejected)
{
    const auto p = linear_scalar(-1.0);
    const History h{0.0, Vector::Constant(1, 1.0), 0.0, Vector::Constant(1, 1.0)};
    EXPECT_THROW(dln_step(p, h, 0.1, Theta(0.5)), InvalidArgument);
    const History ok{0.0, Vector::Constant(1, 1.0), 0.1, Vector::Constant(1, 1.0)};
    EXPECT_THROW(dln_step(p, ok, 0.0, Theta(0.5)), InvalidArgument);
}

TEST(RefactorizedStep, MidpointFilterWeights)
{
    const auto c = coefficients(Theta(1.0), 0.2, 0.1);
    EXPECT_DOUBLE_EQ(c.beta[2] / c.alpha[2], 0.5);
    const auto pre = c.prefilter();
    EXPECT_DOUBLE_EQ(pre[1], 1.0);  // y_old = y_n
    EXPECT_DOUBLE_EQ(pre[0], 0.0);

    const History h{0.0, Vector::Constant(1, 2.0), 0.1, Vector::Constant(1, 1.0)};
    const auto r = refactorized_step(linear_scalar(-4.0), h, 0.2, Theta(1.0));
    EXPECT_DOUBLE_EQ(r.k_be, 0.1);
    // BE over half the step from y_n, then extrapolate to the full step.
    EXPECT_NEAR(r.y_be[0], 1.0 / (1.0 + 4.0 * 0.1), 1e-15);
    EXPECT_NEAR(r.y_np1[0], 2 * r.y_be[0] - 1.0, 1e-15);
}

TEST(RefactorizedStep, AgreesWithDirectOnStiffAndNonstiffDecay)
{
    for (const double lambda : {-1.0, -1e4}) {
        const History h{0.0, Vector::Constant(1, 1.0), 0.05, Vector::Constant(1, std::exp(0.05 * lambda))};
        for (const double th : {0.3, 2.0 / 3.0, 2.0 / std::sqrt(5.0), 1.0}) {
            const auto a = dln_step(linear_scalar(lambda), h, 0.08, Theta(th));
            const auto b = refactorized_step(linear_scalar(lambda), h, 0.08, Theta(th));
            EXPECT_LE(std::abs(a.y_np1[0] - b.y_np1[0]), 1e-12 * std::max(1.0, std::abs(a.y_np1[0])));
        }
    }
}

TEST(RefactorizedStep, EquivalencePropertyOverRandomGrids)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ratio(0.4, 2.0);
    const std::vector<IvpProblem> problems = {linear_scalar(-2.0), prothero_robinson(-200.0), nonlinear_pair()};
    for (const auto& p : problems) {
        for (const double th : {0.3, 2.0 / 3.0, 2.0 / std::sqrt(5.0), 1.0}) {
            Vector y0 = Vector::Constant(p.dimension, 1.0);
            History h{0.0, y0, 0.02, y0 * 0.99};
            double k = 0.02;
            for (int n = 0; n < 40; ++n) {
                k *= ratio(rng);
                k = std::clamp(k, 1e-3, 0.1);
                const auto a = dln_step(p, h, k, Theta(th));
                const auto b = refactorized_step(p, h, k, Theta(th));
                EXPECT_LE((a.y_np1 - b.y_np1).norm(), 1e-11 * std::max(1.0, a.y_np1.norm()));
                h = History{h.t_n, h.y_n, a.t_np1, a.y_np1};
            }
        }
    }
}

TEST(Integrate, EmptyGridReturnsStartLevels)
{
    const auto traj = integrate(linear_scalar(-1.0), 0.0, Vector::Constant(1, 1.0), 0.1, Vector::Constant(1, 0.9),
                                {}, Theta(0.5));
    ASSERT_EQ(traj.size(), 2u);
    EXPECT_DOUBLE_EQ(traj[1].t, 0.1);
    EXPECT_DOUBLE_EQ(traj[1].y[0], 0.9);
}

TEST(Integrate, ConstantGridMatchesComposedOneStepMap)
{
    // For y' = lambda y the step is the scalar recursion
    //   (alpha_2 - khat lambda beta_2) y_{n+1} = (khat lambda beta_1 - alpha_1) y_n + (khat lambda beta_0 - alpha_0) y_{n-1}.
    const double lambda = -2.5, k = 0.05;
    const Theta th(2.0 / std::sqrt(5.0));
    const auto c = coefficients(th, k, k);
    const auto traj = integrate(linear_scalar(lambda), 0.0, Vector::Constant(1, 1.0), k,
                                Vector::Constant(1, std::exp(lambda * k)), std::vector<double>(30, k), th);
    double ym1 = 1.0, y = std::exp(lambda * k);
    for (int n = 0; n < 30; ++n) {
        const double next = ((c.khat * lambda * c.beta[1] - c.alpha[1]) * y +
                             (c.khat * lambda * c.beta[0] - c.alpha[0]) * ym1) /
                            (c.alpha[2] - c.khat * lambda * c.beta[2]);
        ym1 = y;
        y = next;
    }
    EXPECT_NEAR(traj.back().y[0], y, 1e-14);
}

TEST(Integrate, RandomBoundedRatioGridRunsToCompletion)
{
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> ratio(0.5, 1.5);
    std::vector<double> steps;
    double t = 0.01;
    while (t < 2.0) {
        steps.push_back(0.01 * ratio(rng));
        t += steps.back();
    }
    const auto traj = integrate(nonlinear_pair(), 0.0, Vector::Constant(2, 1.0), 0.01, Vector::Constant(2, 1.0),
                                steps, Theta(2.0 / 3.0));
    EXPECT_EQ(traj.size(), steps.size() + 2);
    EXPECT_TRUE(traj.back().y.allFinite());
}

TEST(Integrate, SecondOrderOnUniformAndNonUniformGrids)
{
    const std::vector<double> nonuniform = {1.0, 1.4, 0.7, 1.2, 0.6, 1.3, 0.9};
    const std::vector<double> uniform = {1.0};
    const auto p = prothero_robinson(-5.0);
    for (const double th : {0.3, 2.0 / 3.0, 2.0 / std::sqrt(5.0), 1.0}) {
        for (const auto* pattern : {&uniform, &nonuniform}) {
            std::vector<double> ks, errs;
            for (double k = 0.05; k > 0.05 / 17; k /= 2) {
                auto steps = pattern_grid(k, 2.0, *pattern);
                const double k0 = steps.front();
                steps.erase(steps.begin());
                const auto traj = integrate(p, 0.0, Vector::Constant(1, 1.0), k0, Vector::Constant(1, std::cos(k0)),
                                            steps, Theta(th));
                double err = 0.0;
                for (const auto& pt : traj) err = std::max(err, std::abs(pt.y[0] - std::cos(pt.t)));
                ks.push_back(k);
                errs.push_back(err);
            }
            const double slope = testsupport::loglog_slope(ks, errs);
            EXPECT_GE(slope, 1.9) << "theta " << th;
            EXPECT_LE(slope, 2.1) << "theta " << th;
        }
    }
}

TEST(GStability, EnergyBalancePerStepForDissipativeLinearSystem)
{
    Matrix a(2, 2);
    a << -1.0, 5.0, -5.0, -1.0;
    const IvpProblem p{2, [a](double, const Vector& y) { return Vector(a * y); },
                       [a](double, const Vector&) { return a; }};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ratio(0.3, 3.0);
    for (const double th : {0.3, 2.0 / 3.0, 2.0 / std::sqrt(5.0), 1.0}) {
        History h{0.0, Vector::Constant(2, 1.0), 0.05, Vector::Constant(2, 0.9)};
        double k = 0.05;
        for (int n = 0; n < 60; ++n) {
            k = std::clamp(k * ratio(rng), 1e-3, 0.3);
            const auto r = dln_step(p, h, k, Theta(th));
            const auto c = coefficients(Theta(th), k, h.previous_step());
            const auto terms = g_identity_terms(c, h.y_nm1, h.y_n, r.y_np1);
            const Vector yb = blend_beta(c, h.y_nm1, h.y_n, r.y_np1);
            const double work = c.khat * yb.dot(a * yb);
            EXPECT_LE(work, 0.0);
            const double scale = std::max({terms.scale(), std::abs(work), 1e-300});
            EXPECT_LE(std::abs(terms.g_difference + terms.dissipation - work), 1e-12 * scale);
            EXPECT_LE(terms.g_difference, 1e-15 * scale);
            h = History{h.t_n, h.y_n, r.t_np1, r.y_np1};
        }
    }
}
