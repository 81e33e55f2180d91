#pragma once
// Time adaptivity for DLN: the explicit AB2-like predictor, the local truncation
// error estimator built on it, the step controller and the accept/reject loop.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "dlnens/dln_core.hpp"
#include "dlnens/dln_ode.hpp"
#include "dlnens/error.hpp"

namespace dlnens::adapt {

/// Steps k_n, k_{n-1}, k_{n-2}, k_{n-3} and their ratios.
class StepHistory {
public:
    StepHistory(double k_n, double k_nm1, double k_nm2, double k_nm3) : k_{k_n, k_nm1, k_nm2, k_nm3}
    {
        for (double k : k_) {
            if (!(k > 0.0) || !std::isfinite(k)) {
                throw InvalidArgument("step history entries must be positive and finite");
            }
        }
    }

    /// Five time levels t_{n-3}, ..., t_{n+1}.
    static StepHistory from_times(const std::array<double, 5>& t)
    {
        return StepHistory(t[4] - t[3], t[3] - t[2], t[2] - t[1], t[1] - t[0]);
    }

    /// k_{n-lag}
    double k(int lag) const { return k_.at(static_cast<std::size_t>(lag)); }
    /// tau_{n-lag} = k_{n-lag} / k_{n-lag-1}, lag in {0, 1, 2}
    double tau(int lag) const { return k(lag) / k(lag + 1); }

private:
    std::array<double, 4> k_;
};

struct AdaptiveConfig {
    double tol = 1e-4;
    double kappa = 0.95;
    double k_min = 1e-6;
    double k_max = 1e-4;
    double grow_cap = 1.5;
    double shrink_floor = 0.2;

    void validate() const
    {
        if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
        if (!(kappa > 0.0 && kappa <= 1.0)) throw InvalidArgument("kappa must lie in (0, 1]");
        if (!(k_min > 0.0 && k_min <= k_max)) throw InvalidArgument("need 0 < k_min <= k_max");
        if (!(shrink_floor > 0.0 && shrink_floor <= 1.0 && grow_cap >= 1.0)) {
            throw InvalidArgument("controller limits must satisfy 0 < floor <= 1 <= cap");
        }
    }
};

/// min(cap, max(floor, kappa (tol / estimate)^(1/3))), before any step clamping.
inline double controller_factor(double estimate, const AdaptiveConfig& cfg)
{
    if (!(estimate >= 0.0)) {
        throw InvalidArgument("estimate must be non-negative");
    }
    if (estimate == 0.0) {
        return cfg.grow_cap;
    }
    const double raw = cfg.kappa * std::cbrt(cfg.tol / estimate);
    return std::min(cfg.grow_cap, std::max(cfg.shrink_floor, raw));
}

inline double next_step(double k_n, double estimate, const AdaptiveConfig& cfg)
{
    return std::clamp(k_n * controller_factor(estimate, cfg), cfg.k_min, cfg.k_max);
}

/// G^(n) from the coefficients of step n (built from k_n, k_{n-1}).
inline double g_coefficient(const DlnCoefficients& cn, double tau_n)
{
    if (!(tau_n > 0.0)) {
        throw InvalidArgument("step ratio must be positive");
    }
    const double r = cn.alpha[0] / cn.alpha[2];
    const double inv = 1.0 / tau_n;
    const double f = cn.beta[2] - cn.beta[0] * inv;
    return (0.5 - 0.5 * r * inv) * f * f + r / 6.0 * inv * inv * inv - 1.0 / 6.0;
}

/// R^(n) from the coefficients of steps n-1 and n-2.
inline double r_coefficient(const DlnCoefficients& cnm1, const DlnCoefficients& cnm2, double tau_n, double tau_nm1,
                            double tau_nm2)
{
    if (!(tau_n > 0.0 && tau_nm1 > 0.0 && tau_nm2 > 0.0)) {
        throw InvalidArgument("step ratios must be positive");
    }
    const double in = 1.0 / tau_n;
    const double in1 = 1.0 / tau_nm1;
    const double in2 = 1.0 / tau_nm2;
    const double a1 = 1.0 - cnm2.beta[2] * in1 + cnm2.beta[0] * in2 * in1;
    const double a2 = 1.0 - cnm1.beta[2] * in + cnm1.beta[0] * in1 * in;
    const double b1 = 1.0 + in - cnm2.beta[2] * in1 * in + cnm2.beta[0] * in2 * in1 * in;
    const double b2 = -cnm1.beta[2] + cnm1.beta[0] * in1;
    return (2.0 + 3.0 * in * a1 * a2 + 3.0 * in * b1 * b2) / 12.0;
}

namespace detail {

inline void check_times(const std::array<double, 5>& t)
{
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (!(t[i] > t[i - 1])) {
            throw InvalidArgument("AB2-like predictor needs five strictly increasing time levels");
        }
    }
}

}  // namespace detail

/// Weights w with y_{n+1}^AB2 = w[0] y_{n-3} + w[1] y_{n-2} + w[2] y_{n-1} + w[3] y_n,
/// for times t = (t_{n-3}, t_{n-2}, t_{n-1}, t_n, t_{n+1}).
inline std::array<double, 4> ab2_like_weights(const std::array<double, 5>& t, Theta theta)
{
    detail::check_times(t);
    std::array<double, 5> s{};
    for (std::size_t i = 0; i < 5; ++i) s[i] = t[i] - t[3];

    const auto steps = StepHistory::from_times(t);
    const auto c1 = coefficients(theta, steps.k(1), steps.k(2));
    const auto c2 = coefficients(theta, steps.k(2), steps.k(3));
    const double tb1 = t_beta(c1, s[1], s[2], s[3]);
    const double tb2 = t_beta(c2, s[0], s[1], s[2]);

    const double scale = steps.k(0) / (2.0 * (tb1 - tb2));
    const double a = scale * (s[4] + s[3] - 2.0 * tb2) / c1.khat;
    const double b = -scale * (s[4] + s[3] - 2.0 * tb1) / c2.khat;

    return {b * c2.alpha[0], a * c1.alpha[0] + b * c2.alpha[1], a * c1.alpha[1] + b * c2.alpha[2],
            1.0 + a * c1.alpha[2]};
}

template <class V>
auto ab2_like_predict(const std::array<double, 5>& t, const V& y_nm3, const V& y_nm2, const V& y_nm1, const V& y_n,
                      Theta theta)
{
    dlnens::detail::require_same_size(y_nm3, y_nm2);
    dlnens::detail::require_same_size(y_nm2, y_nm1);
    dlnens::detail::require_same_size(y_nm1, y_n);
    const auto w = ab2_like_weights(t, theta);
    return dlnens::detail::materialize(w[0] * y_nm3 + w[1] * y_nm2 + w[2] * y_nm1 + w[3] * y_n);
}

enum class EstimatorForm {
    nominal,    ///< |G| / |G + R|
    calibrated  ///< |G| / |G - C|, C the predictor's own cubic error constant
};

struct EstimatorCoefficients {
    double g = 0.0;
    double r = 0.0;
    /// Error constant of the AB2-like predictor: (y_AB2 - y)(t_{n+1}) = C k_n^3 y''' on cubics.
    double predictor_constant = 0.0;

    double factor(EstimatorForm form) const
    {
        const double denom = form == EstimatorForm::nominal ? g + r : g - predictor_constant;
        return std::abs(g) / std::abs(denom);
    }
};

inline EstimatorCoefficients estimator_coefficients(const std::array<double, 5>& t, Theta theta)
{
    detail::check_times(t);
    const auto steps = StepHistory::from_times(t);
    const auto cn = coefficients(theta, steps.k(0), steps.k(1));
    const auto c1 = coefficients(theta, steps.k(1), steps.k(2));
    const auto c2 = coefficients(theta, steps.k(2), steps.k(3));

    EstimatorCoefficients e;
    e.g = g_coefficient(cn, steps.tau(0));
    e.r = r_coefficient(c1, c2, steps.tau(0), steps.tau(1), steps.tau(2));

    const auto w = ab2_like_weights(t, theta);
    const double k = steps.k(0);
    double cubic = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        const double s = (t[i] - t[3]) / k;
        cubic += w[i] * s * s * s;
    }
    e.predictor_constant = (cubic - 1.0) / 6.0;
    return e;
}

struct LteEstimate {
    double value = 0.0;
    std::vector<double> per_member;
};

/// Relative estimate from per-member gaps |y_DLN - y_AB2| / |y_DLN| and the factor |G|/|G+R|.
inline LteEstimate lte_estimate_from_gaps(std::vector<double> relative_gaps, double factor)
{
    LteEstimate e;
    e.per_member = std::move(relative_gaps);
    for (double& g : e.per_member) {
        g *= factor;
        e.value = std::max(e.value, g);
    }
    return e;
}

struct EuclideanNorm {
    template <class V>
    double operator()(const V& v) const
    {
        if constexpr (std::is_arithmetic_v<V>) {
            return std::abs(static_cast<double>(v));
        } else {
            return v.norm();
        }
    }
};

template <class V, class Norm = EuclideanNorm>
double relative_gap(const V& y_dln, const V& y_ab2, Norm norm = {})
{
    dlnens::detail::require_same_size(y_dln, y_ab2);
    const double denom = norm(y_dln);
    if (!(denom > 0.0)) {
        throw InvalidArgument("zero-norm DLN solution; relative estimator undefined");
    }
    return norm(dlnens::detail::materialize(y_dln - y_ab2)) / denom;
}

template <class V, class Norm = EuclideanNorm>
LteEstimate lte_estimate(const std::vector<V>& y_dln, const std::vector<V>& y_ab2, double g, double r,
                         Norm norm = {})
{
    if (y_dln.size() != y_ab2.size() || y_dln.empty()) {
        throw DimensionMismatch("member lists must be non-empty and of equal length");
    }
    std::vector<double> gaps;
    gaps.reserve(y_dln.size());
    for (std::size_t j = 0; j < y_dln.size(); ++j) {
        gaps.push_back(relative_gap(y_dln[j], y_ab2[j], norm));
    }
    return lte_estimate_from_gaps(std::move(gaps), std::abs(g) / std::abs(g + r));
}

struct StepRecord {
    std::size_t n = 0;  ///< index of the level being computed
    double t = 0.0;     ///< candidate time t_{n}
    double k = 0.0;
    double estimate = std::numeric_limits<double>::quiet_NaN();
    bool accepted = false;
    int rejections = 0;  ///< rejections of this level before this attempt
    bool forced = false;
};

struct RunReport {
    std::vector<StepRecord> records;
    std::size_t accepted_steps = 0;
    std::size_t rejections = 0;
    std::size_t forced_accepts = 0;
    bool aborted = false;
    std::string abort_reason;
    double t_final = 0.0;
    double min_accepted_step = std::numeric_limits<double>::infinity();
    double max_accepted_step = 0.0;

    std::size_t total_cost() const { return accepted_steps + rejections; }

    void write_csv(std::ostream& os) const
    {
        const auto old = os.precision(17);
        os << "n,t,k_n,estimate,accepted,rejections\n";
        for (const auto& r : records) {
            os << r.n << ',' << r.t << ',' << r.k << ',' << r.estimate << ',' << (r.accepted ? 1 : 0) << ','
               << r.rejections << '\n';
        }
        os.precision(old);
    }
};

/// A stepper owns the solution levels. attempt(k) computes a candidate level at t_n + k
/// without committing it; relative_gaps(w) compares the candidate with sum_i w_i y_{n-3+i}
/// per member; accept() commits the candidate.
template <class S>
concept AdaptiveStepper = requires(S& s, double k, const std::array<double, 4>& w) {
    s.attempt(k);
    { s.relative_gaps(w) } -> std::convertible_to<std::vector<double>>;
    s.accept();
};

struct LoopOptions {
    EstimatorForm form = EstimatorForm::nominal;
    /// Called after every accepted level with its record.
    std::function<void(const StepRecord&)> on_accept;
};

/// Adaptive run from two start levels at t0 and t0 + k_min to t_end. The first two DLN
/// steps use k_min; estimation starts once four levels exist.
template <AdaptiveStepper S>
RunReport adaptive_loop(S& stepper, double t0, double t_end, Theta theta, const AdaptiveConfig& cfg,
                        const LoopOptions& options = {})
{
    cfg.validate();
    if (!(t_end > t0 + 3.0 * cfg.k_min)) {
        throw InvalidArgument("interval too short for the start-up steps");
    }
    RunReport report;
    std::deque<double> times{t0, t0 + cfg.k_min};
    const double eps_t = 1e-13 * std::max(1.0, std::abs(t_end));

    auto commit = [&](StepRecord rec) {
        stepper.accept();
        rec.accepted = true;
        report.records.push_back(rec);
        ++report.accepted_steps;
        report.min_accepted_step = std::min(report.min_accepted_step, rec.k);
        report.max_accepted_step = std::max(report.max_accepted_step, rec.k);
        if (rec.forced) ++report.forced_accepts;
        times.push_back(rec.t);
        if (times.size() > 4) times.pop_front();
        if (options.on_accept) options.on_accept(rec);
    };

    std::size_t n = 2;
    try {
        for (; n < 4; ++n) {
            stepper.attempt(cfg.k_min);
            commit(StepRecord{n, times.back() + cfg.k_min, cfg.k_min});
        }

        double k = cfg.k_min;
        while (t_end - times.back() > eps_t) {
            const double remaining = t_end - times.back();
            double k_try = std::min(k, remaining);
            if (remaining - k_try < cfg.k_min && remaining - k_try > eps_t) {
                k_try = remaining <= cfg.k_max ? remaining : 0.5 * remaining;
            }
            int rejected = 0;
            for (;;) {
                stepper.attempt(k_try);
                const std::array<double, 5> t{times[0], times[1], times[2], times[3], times[3] + k_try};
                const double factor = estimator_coefficients(t, theta).factor(options.form);
                const auto est = lte_estimate_from_gaps(stepper.relative_gaps(ab2_like_weights(t, theta)), factor);

                StepRecord rec{n, t[4], k_try, est.value, false, rejected, false};
                const double proposal = next_step(k_try, est.value, cfg);
                if (est.value < cfg.tol) {
                    commit(rec);
                    k = proposal;
                    break;
                }
                if (k_try <= cfg.k_min * (1.0 + 1e-12) || !(proposal < k_try)) {
                    rec.forced = true;
                    commit(rec);
                    k = proposal;
                    break;
                }
                report.records.push_back(rec);
                ++report.rejections;
                ++rejected;
                k_try = proposal;
            }
            ++n;
        }
    } catch (const InstabilityError& e) {
        report.aborted = true;
        report.abort_reason = e.what();
    }
    report.t_final = times.back();
    return report;
}

/// Adaptive stepper for generic IVPs with a Euclidean estimator norm.
class OdeStepper {
public:
    OdeStepper(ode::IvpProblem problem, Theta theta, double t0, ode::Vector y0, double t1, ode::Vector y1,
               ode::NonlinearSolveOptions opts = {}, ode::StepForm form = ode::StepForm::direct)
        : problem_(std::move(problem)), theta_(theta), opts_(opts), form_(form)
    {
        levels_.push_back({t0, std::move(y0)});
        levels_.push_back({t1, std::move(y1)});
        trajectory_.assign(levels_.begin(), levels_.end());
    }

    void attempt(double k)
    {
        const auto& a = levels_[levels_.size() - 2];
        const auto& b = levels_.back();
        const ode::History h{a.t, a.y, b.t, b.y};
        ode::StepResult r = form_ == ode::StepForm::direct
                                ? ode::dln_step(problem_, h, k, theta_, opts_)
                                : static_cast<ode::StepResult>(ode::refactorized_step(problem_, h, k, theta_, opts_));
        if (!r.y_np1.allFinite()) {
            throw InstabilityError(trajectory_.size(), r.t_np1);
        }
        candidate_ = {r.t_np1, std::move(r.y_np1)};
    }

    std::vector<double> relative_gaps(const std::array<double, 4>& w) const
    {
        if (levels_.size() < 4) {
            throw InvalidArgument("AB2-like predictor needs four stored levels");
        }
        const ode::Vector pred = w[0] * levels_[0].y + w[1] * levels_[1].y + w[2] * levels_[2].y + w[3] * levels_[3].y;
        return {relative_gap(candidate_.y, pred)};
    }

    void accept()
    {
        levels_.push_back(candidate_);
        if (levels_.size() > 4) levels_.pop_front();
        trajectory_.push_back(std::move(candidate_));
    }

    const ode::Trajectory& trajectory() const { return trajectory_; }

private:
    ode::IvpProblem problem_;
    Theta theta_;
    ode::NonlinearSolveOptions opts_;
    ode::StepForm form_;
    std::deque<ode::TrajectoryPoint> levels_;
    ode::TrajectoryPoint candidate_{};
    ode::Trajectory trajectory_;
};

}  // namespace dlnens::adapt
