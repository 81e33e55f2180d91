#pragma once
// Manufactured Taylor-Green problems and the convergence, efficiency and adaptive drivers.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "dlnens/adaptivity.hpp"
#include "dlnens/ensemble_solver.hpp"

namespace dlnens::exp {

using ens::StepForm;
using fem::Operators;
using fem::Vector;

enum class Variant { sin_omega, lindberg1, lindberg2 };

inline const char* to_string(Variant v)
{
    switch (v) {
    case Variant::sin_omega: return "sin";
    case Variant::lindberg1: return "lindberg1";
    case Variant::lindberg2: return "lindberg2";
    }
    return "?";
}

inline Variant parse_variant(const std::string& s)
{
    if (s == "sin") return Variant::sin_omega;
    if (s == "lindberg1" || s == "G1") return Variant::lindberg1;
    if (s == "lindberg2" || s == "G2") return Variant::lindberg2;
    throw InvalidArgument("unknown variant '" + s + "'");
}

struct LindbergPhase {
    double g1, g2, dg1, dg2;
};

inline LindbergPhase lindberg_phase(double omega, double t)
{
    const double a = std::pow(10.0, omega);
    const double e = std::exp(-t);
    return {a * (t + 2.0 * e - 2.0), a * (1.0 - e - t * e), a * (1.0 - 2.0 * e), a * t * e};
}

/// G_1 or G_2 of the stiff Lindberg system.
inline double lindberg_time_factor(int which, double omega, double t)
{
    if (which != 1 && which != 2) throw InvalidArgument("Lindberg component must be 1 or 2");
    if (!(t >= 0.0)) throw InvalidArgument("Lindberg factor needs t >= 0");
    const auto ph = lindberg_phase(omega, t);
    if (ph.g1 > 700.0) throw Error("Lindberg factor overflows at t = " + std::to_string(t));
    const double s = which == 1 ? 1.0 : -1.0;
    return std::exp(ph.g1) * (std::cos(ph.g2) + s * std::sin(ph.g2));
}

/// Time profile s(t) of the velocity and q(t) of the pressure.
struct TimeProfile {
    Variant variant = Variant::sin_omega;
    double omega = 10.0;

    double value(double t) const
    {
        switch (variant) {
        case Variant::sin_omega: return std::sin(omega * t);
        case Variant::lindberg1: return lindberg_time_factor(1, omega, t);
        case Variant::lindberg2: return lindberg_time_factor(2, omega, t);
        }
        return 0.0;
    }

    double derivative(double t) const
    {
        if (variant == Variant::sin_omega) return omega * std::cos(omega * t);
        const auto ph = lindberg_phase(omega, t);
        const double g1 = lindberg_time_factor(1, omega, t), g2 = lindberg_time_factor(2, omega, t);
        return variant == Variant::lindberg1 ? ph.dg1 * g1 + ph.dg2 * g2 : ph.dg1 * g2 - ph.dg2 * g1;
    }

    double pressure(double t) const
    {
        const double s = value(t);
        return variant == Variant::sin_omega ? s * s : s;
    }
};

/// Uniform draws in [-bound, bound], sorted ascending.
inline std::vector<double> perturbations(int members, double bound, std::uint64_t seed)
{
    if (members < 1) throw InvalidArgument("need at least one member");
    if (!(bound >= 0.0)) throw InvalidArgument("perturbation bound must be non-negative");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-bound, bound);
    std::vector<double> d(static_cast<std::size_t>(members));
    for (auto& x : d) x = bound > 0.0 ? u(rng) : 0.0;
    std::sort(d.begin(), d.end());
    return d;
}

/// u^j = (1 + delta_j) s(t) U(x, y), p = q(t) P(x, y) with the Taylor-Green pair
/// U = (-cos(pi x) sin(pi y), sin(pi x) cos(pi y)), P = -(cos(2 pi x) + cos(2 pi y)) / 4.
class ManufacturedSolution {
public:
    ManufacturedSolution(TimeProfile profile, double nu, std::vector<double> delta)
        : profile_(profile), nu_(nu), delta_(std::move(delta))
    {
        if (!(nu_ > 0.0)) throw InvalidArgument("viscosity must be positive");
        if (delta_.empty()) throw InvalidArgument("need at least one member");
    }

    const TimeProfile& profile() const { return profile_; }
    double nu() const { return nu_; }
    int members() const { return static_cast<int>(delta_.size()); }
    const std::vector<double>& delta() const { return delta_; }
    double scale(int j) const { return 1.0 + delta_.at(static_cast<std::size_t>(j)); }

    static std::array<double, 2> shape(double x, double y)
    {
        return {-std::cos(M_PI * x) * std::sin(M_PI * y), std::sin(M_PI * x) * std::cos(M_PI * y)};
    }
    static std::array<double, 4> shape_gradient(double x, double y)
    {
        const double sx = std::sin(M_PI * x), cx = std::cos(M_PI * x);
        const double sy = std::sin(M_PI * y), cy = std::cos(M_PI * y);
        return {M_PI * sx * sy, -M_PI * cx * cy, M_PI * cx * cy, -M_PI * sx * sy};
    }
    static double pressure_shape(double x, double y) { return -0.25 * (std::cos(2.0 * M_PI * x) + std::cos(2.0 * M_PI * y)); }
    static std::array<double, 2> pressure_shape_gradient(double x, double y)
    {
        return {0.5 * M_PI * std::sin(2.0 * M_PI * x), 0.5 * M_PI * std::sin(2.0 * M_PI * y)};
    }

    std::array<double, 2> velocity(int j, double x, double y, double t) const
    {
        const double a = scale(j) * profile_.value(t);
        const auto u = shape(x, y);
        return {a * u[0], a * u[1]};
    }

    std::array<double, 4> velocity_gradient(int j, double x, double y, double t) const
    {
        const double a = scale(j) * profile_.value(t);
        auto g = shape_gradient(x, y);
        for (auto& v : g) v *= a;
        return g;
    }

    double pressure(double x, double y, double t) const { return profile_.pressure(t) * pressure_shape(x, y); }

    // (U.grad)U = -grad P and -Lap U = 2 pi^2 U.
    std::array<double, 2> forcing(int j, double x, double y, double t) const
    {
        const auto [cu, cp] = forcing_weights(j, t);
        const auto u = shape(x, y);
        const auto gp = pressure_shape_gradient(x, y);
        return {cu * u[0] + cp * gp[0], cu * u[1] + cp * gp[1]};
    }

    /// 1/2 |u^j(t)|^2 over the unit square.
    double kinetic_energy(int j, double t) const
    {
        const double a = scale(j) * profile_.value(t);
        return 0.25 * a * a;
    }

    ens::ExactSolution exact() const
    {
        return {[this](int j, double x, double y, double t) { return velocity(j, x, y, t); },
                [this](int, double x, double y, double t) { return pressure(x, y, t); }};
    }

    /// Physics with loads assembled once per shape and rescaled in time.
    ens::NsePhysics physics(const Operators& ops) const
    {
        ens::NsePhysics p;
        p.nu = nu_;
        const Vector lu = ops.load(shape);
        const Vector lp = ops.load(pressure_shape_gradient);
        const Vector iu = fem::interpolate_velocity(ops.spaces(), shape);
        const ManufacturedSolution self = *this;
        p.forcing_load = [self, lu, lp](int j, double t) {
            const auto [cu, cp] = self.forcing_weights(j, t);
            return Vector(cu * lu + cp * lp);
        };
        p.boundary_values = [self, iu](int j, double t) { return Vector(self.scale(j) * self.profile_.value(t) * iu); };
        return p;
    }

    /// Both start levels from the exact solution; pressures shifted to zero discrete mean.
    ens::EnsembleState initial_state(const Operators& ops, double t0, double k0) const
    {
        ens::EnsembleState s = ens::initialize_from_exact(ops.spaces(), exact(), members(), t0, k0);
        for (auto* levels : {&s.p_nm1, &s.p_n}) {
            for (auto& p : *levels) p.array() -= ops.pressure_integrals().dot(p);
        }
        return s;
    }

private:
    std::pair<double, double> forcing_weights(int j, double t) const
    {
        const double c = scale(j), s = profile_.value(t);
        return {c * (profile_.derivative(t) + 2.0 * M_PI * M_PI * nu_ * s), profile_.pressure(t) - c * c * s * s};
    }

    TimeProfile profile_;
    double nu_;
    std::vector<double> delta_;
};

/// log2(coarse / fine)
inline double rate(double e_coarse, double e_fine)
{
    if (!(e_coarse > 0.0) || !(e_fine > 0.0)) throw InvalidArgument("rates need positive errors");
    return std::log2(e_coarse / e_fine);
}

struct MemberErrors {
    double u_inf_l2 = 0.0;  ///< max_n |u - u_h|
    double u_inf_h1 = 0.0;  ///< max_n |u - u_h|_{H1}
    double p_l2_l2 = 0.0;   ///< (sum_n w_n |p - p_h|^2)^{1/2}
};

struct ErrorReport {
    std::vector<MemberErrors> members;

    MemberErrors average() const
    {
        MemberErrors a;
        for (const auto& m : members) {
            a.u_inf_l2 += m.u_inf_l2;
            a.u_inf_h1 += m.u_inf_h1;
            a.p_l2_l2 += m.p_l2_l2;
        }
        const double n = static_cast<double>(members.size());
        a.u_inf_l2 /= n;
        a.u_inf_h1 /= n;
        a.p_l2_l2 /= n;
        return a;
    }

    MemberErrors maximum() const
    {
        MemberErrors a;
        for (const auto& m : members) {
            a.u_inf_l2 = std::max(a.u_inf_l2, m.u_inf_l2);
            a.u_inf_h1 = std::max(a.u_inf_h1, m.u_inf_h1);
            a.p_l2_l2 = std::max(a.p_l2_l2, m.p_l2_l2);
        }
        return a;
    }
};

/// Running error norms over the levels of one run.
class ErrorTracker {
public:
    ErrorTracker(const Operators& ops, const ManufacturedSolution& sol)
        : ops_(&ops), sol_(&sol), p_sum_(static_cast<std::size_t>(sol.members()), 0.0),
          report_{std::vector<MemberErrors>(static_cast<std::size_t>(sol.members()))}
    {
    }

    void velocity_level(int j, double t, const Vector& u)
    {
        const auto e = fem::velocity_error(
            *ops_, u, [&](double x, double y) { return sol_->velocity(j, x, y, t); },
            [&](double x, double y) { return sol_->velocity_gradient(j, x, y, t); });
        auto& m = report_.members[static_cast<std::size_t>(j)];
        m.u_inf_l2 = std::max(m.u_inf_l2, e.l2);
        m.u_inf_h1 = std::max(m.u_inf_h1, e.h1);
    }

    /// Adds weight * |p(t) - p_h|^2 to member j's pressure sum.
    void pressure_level(int j, double t, const Vector& p, double weight)
    {
        const double e = fem::pressure_error(*ops_, p, [&](double x, double y) { return sol_->pressure(x, y, t); });
        p_sum_[static_cast<std::size_t>(j)] += weight * e * e;
    }

    ErrorReport report() const
    {
        ErrorReport r = report_;
        for (std::size_t j = 0; j < p_sum_.size(); ++j) r.members[j].p_l2_l2 = std::sqrt(p_sum_[j]);
        return r;
    }

private:
    const Operators* ops_;
    const ManufacturedSolution* sol_;
    std::vector<double> p_sum_;
    ErrorReport report_;
};

struct EnergyRow {
    double t = 0.0;
    double k = 0.0;
    double kinetic_mean = 0.0, kinetic_max = 0.0;
    double exact_mean = 0.0, exact_max = 0.0;
    double viscous_mean = 0.0, viscous_max = 0.0;
    double numerical_mean = 0.0, numerical_max = 0.0;
    double cfl_max = 0.0;
    std::size_t factorizations = 0;
    std::size_t solves = 0;

    double mean_error() const { return std::abs(exact_mean - kinetic_mean); }
    double max_error() const { return std::abs(exact_max - kinetic_max); }
};

inline EnergyRow energy_row(const Operators& ops, const ManufacturedSolution& sol, const ens::EnsembleState& before,
                            const ens::EnsembleStepResult& r, const ens::SolverCounters& counters)
{
    EnergyRow row;
    row.t = r.t_np1;
    row.k = r.coeffs.k_n;
    const int J = before.members();
    row.kinetic_max = row.exact_max = row.viscous_max = row.numerical_max = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < J; ++j) {
        const auto e = ens::member_energy(ops, sol.nu(), r.coeffs, before.u_nm1[j], before.u_n[j], r.u[j]);
        const double ex = sol.kinetic_energy(j, r.t_np1);
        row.kinetic_mean += e.kinetic / J;
        row.exact_mean += ex / J;
        row.viscous_mean += e.viscous_dissipation / J;
        row.numerical_mean += e.numerical_dissipation / J;
        row.kinetic_max = std::max(row.kinetic_max, e.kinetic);
        row.exact_max = std::max(row.exact_max, ex);
        row.viscous_max = std::max(row.viscous_max, e.viscous_dissipation);
        row.numerical_max = std::max(row.numerical_max, e.numerical_dissipation);
    }
    row.cfl_max = r.cfl.max();
    row.factorizations = counters.factorizations;
    row.solves = counters.solves;
    return row;
}

inline void write_energy_csv(std::ostream& os, const std::vector<EnergyRow>& rows)
{
    os << "t,k,kinetic_mean,kinetic_max,exact_mean,exact_max,log10_err_mean,log10_err_max,"
          "viscous_mean,viscous_max,numerical_mean,numerical_max,cfl_max,factorizations,solves\n";
    os.precision(10);
    for (const auto& r : rows) {
        os << r.t << ',' << r.k << ',' << r.kinetic_mean << ',' << r.kinetic_max << ',' << r.exact_mean << ','
           << r.exact_max << ',' << std::log10(r.mean_error()) << ',' << std::log10(r.max_error()) << ','
           << r.viscous_mean << ',' << r.viscous_max << ',' << r.numerical_mean << ',' << r.numerical_max << ','
           << r.cfl_max << ',' << r.factorizations << ',' << r.solves << '\n';
    }
}

struct ConstantRunResult {
    ErrorReport errors;
    ens::SolverCounters counters;
    std::vector<EnergyRow> energies;
    std::size_t steps = 0;  ///< DLN steps taken after the two start levels
    double k = 0.0;
    double t_final = 0.0;
    double wall_seconds = 0.0;
    bool aborted = false;
    std::string abort_reason;

    double final_energy_error() const
    {
        return energies.empty() ? std::numeric_limits<double>::quiet_NaN() : energies.back().mean_error();
    }
};

/// Constant steps k = (t_end - t0) / levels from exact levels at t0 and t0 + k. Pressure errors
/// are summed as k |p(t_n) - p_n|^2 over all levels.
inline ConstantRunResult run_constant(const Operators& ops, const ManufacturedSolution& sol, Theta theta, double t0,
                                      double t_end, int levels, StepForm form, bool record_energies = false)
{
    if (levels < 2) throw InvalidArgument("a constant-step run needs at least two intervals");
    const auto start = std::chrono::steady_clock::now();
    ConstantRunResult res;
    res.k = (t_end - t0) / levels;
    ens::EnsembleSolver solver(ops, sol.physics(ops), theta);
    ens::EnsembleState s = sol.initial_state(ops, t0, res.k);
    ErrorTracker err(ops, sol);
    for (int j = 0; j < s.members(); ++j) {
        err.velocity_level(j, s.t_nm1, s.u_nm1[j]);
        err.velocity_level(j, s.t_n, s.u_n[j]);
        err.pressure_level(j, s.t_nm1, s.p_nm1[j], res.k);
        err.pressure_level(j, s.t_n, s.p_n[j], res.k);
    }
    try {
        for (int n = 2; n <= levels; ++n) {
            const ens::EnsembleState before = record_energies ? s : ens::EnsembleState{};
            const double k = n == levels ? t_end - s.t_n : res.k;
            const auto r = solver.step(s, k, form);
            ++res.steps;
            for (int j = 0; j < s.members(); ++j) {
                err.velocity_level(j, s.t_n, s.u_n[j]);
                err.pressure_level(j, s.t_n, s.p_n[j], res.k);
            }
            if (record_energies) res.energies.push_back(energy_row(ops, sol, before, r, solver.counters()));
        }
    } catch (const InstabilityError& e) {
        res.aborted = true;
        res.abort_reason = e.what();
    }
    res.t_final = s.t_n;
    res.errors = err.report();
    res.counters = solver.counters();
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

struct ConvergenceConfig {
    double theta = 2.0 / 3.0;
    double nu = 5e-3;
    double omega = 10.0;
    int members = 10;
    double delta_bound = 1e-2;
    std::uint64_t seed = 20240601;
    std::vector<int> meshes{8, 16, 32};
    double t_end = 1.0;
    StepForm form = StepForm::refactorized;
};

struct ConvergenceRow {
    int m = 0;
    double h = 0.0;
    double k = 0.0;
    ErrorReport errors;
};

struct ConvergenceResult {
    std::vector<double> delta;
    std::vector<ConvergenceRow> rows;

    /// Table layout: blocks for member 1, member J and the average, each with rates.
    void write_csv(std::ostream& os) const
    {
        os << "block,h,u_inf_l2,rate_u_inf_l2,u_inf_h1,rate_u_inf_h1,p_l2_l2,rate_p_l2_l2\n";
        os.precision(6);
        const char* names[] = {"member_first", "member_last", "average"};
        for (int b = 0; b < 3; ++b) {
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const auto e = pick(rows[i].errors, b);
                os << names[b] << ",1/" << rows[i].m << ',' << e.u_inf_l2 << ',';
                if (i == 0) {
                    os << "-," << e.u_inf_h1 << ",-," << e.p_l2_l2 << ",-\n";
                } else {
                    const auto c = pick(rows[i - 1].errors, b);
                    os << rate(c.u_inf_l2, e.u_inf_l2) << ',' << e.u_inf_h1 << ',' << rate(c.u_inf_h1, e.u_inf_h1)
                       << ',' << e.p_l2_l2 << ',' << rate(c.p_l2_l2, e.p_l2_l2) << '\n';
                }
            }
        }
    }

    static MemberErrors pick(const ErrorReport& r, int block)
    {
        if (block == 0) return r.members.front();
        if (block == 1) return r.members.back();
        return r.average();
    }
};

inline ConvergenceResult run_convergence(const ConvergenceConfig& cfg)
{
    ConvergenceResult out;
    out.delta = perturbations(cfg.members, cfg.delta_bound, cfg.seed);
    const ManufacturedSolution sol({Variant::sin_omega, cfg.omega}, cfg.nu, out.delta);
    for (const int m : cfg.meshes) {
        const fem::FeSpaces sp(fem::generate_mesh(m));
        const Operators ops(sp);
        const int levels = static_cast<int>(std::lround(cfg.t_end * 2.0 * m));  // k = h / 2
        const auto r = run_constant(ops, sol, Theta(cfg.theta), 0.0, cfg.t_end, levels, cfg.form);
        if (r.aborted) throw InstabilityError(r.steps, r.t_final);
        out.rows.push_back({m, sp.h(), r.k, r.errors});
    }
    return out;
}

struct EfficiencyConfig {
    double theta = 2.0 / 3.0;
    double nu = 1e-3;
    double omega = 10.0;
    std::vector<int> members{1, 10, 50};
    double delta_bound = 0.1;
    std::uint64_t seed = 20240602;
    int mesh = 16;
    double t_end = 1.0;
    StepForm form = StepForm::refactorized;
};

struct EfficiencyRow {
    int members = 0;
    std::size_t steps = 0;
    ens::SolverCounters counters;
    double wall_seconds = 0.0;
    MemberErrors average;
    MemberErrors maximum;

    /// Factorization plus back-solve time.
    double solve_seconds() const { return counters.factor_seconds + counters.solve_seconds; }
};

struct EfficiencyResult {
    std::vector<EfficiencyRow> rows;

    void write_csv(std::ostream& os) const
    {
        os << "J,steps,factorizations,solves,assembly_s,factor_s,backsolve_s,solve_s,wall_s,"
              "avg_u_inf_l2,avg_u_inf_h1,avg_p_l2_l2,max_u_inf_l2,max_u_inf_h1,max_p_l2_l2\n";
        os.precision(6);
        for (const auto& r : rows) {
            os << r.members << ',' << r.steps << ',' << r.counters.factorizations << ',' << r.counters.solves << ','
               << r.counters.assembly_seconds << ',' << r.counters.factor_seconds << ',' << r.counters.solve_seconds
               << ',' << r.solve_seconds() << ',' << r.wall_seconds << ',' << r.average.u_inf_l2 << ','
               << r.average.u_inf_h1 << ',' << r.average.p_l2_l2 << ',' << r.maximum.u_inf_l2 << ','
               << r.maximum.u_inf_h1 << ',' << r.maximum.p_l2_l2 << '\n';
        }
    }
};

inline EfficiencyResult run_efficiency(const EfficiencyConfig& cfg)
{
    const fem::FeSpaces sp(fem::generate_mesh(cfg.mesh));
    const Operators ops(sp);
    const int levels = static_cast<int>(std::lround(cfg.t_end * 2.0 * cfg.mesh));
    EfficiencyResult out;
    for (const int J : cfg.members) {
        // fresh draws for every ensemble size
        const ManufacturedSolution sol({Variant::sin_omega, cfg.omega}, cfg.nu,
                                       perturbations(J, cfg.delta_bound, cfg.seed + static_cast<std::uint64_t>(J)));
        const auto r = run_constant(ops, sol, Theta(cfg.theta), 0.0, cfg.t_end, levels, cfg.form);
        if (r.aborted) throw InstabilityError(r.steps, r.t_final);
        out.rows.push_back({J, r.steps, r.counters, r.wall_seconds, r.errors.average(), r.errors.maximum()});
    }
    return out;
}

struct AdaptiveRunConfig {
    Variant variant = Variant::lindberg2;
    double theta = 2.0 / std::sqrt(5.0);
    double nu = 1e-3;
    double omega = 3.1;
    int members = 10;
    double delta_bound = 0.1;
    std::uint64_t seed = 20240603;
    int mesh = 50;
    double t0 = 1.58;
    double t_end = 1.602;
    adapt::AdaptiveConfig controller{};
    adapt::EstimatorForm estimator = adapt::EstimatorForm::nominal;
    StepForm form = StepForm::refactorized;
    bool run_constant = true;
};

struct AdaptiveRunResult {
    std::vector<double> delta;
    adapt::RunReport report;
    std::vector<EnergyRow> energies;
    ErrorReport errors;
    ens::SolverCounters counters;
    double wall_seconds = 0.0;
    bool has_constant = false;
    ConstantRunResult constant;

    double final_energy_error() const
    {
        return energies.empty() ? std::numeric_limits<double>::quiet_NaN() : energies.back().mean_error();
    }
};

/// Adaptive run from exact levels at t0 and t0 + k_min, plus the constant-step run with the
/// same total cost in steps. Pressure errors use the (k_n + k_{n-1})-weighted sum at t_{n,beta}.
inline AdaptiveRunResult run_adaptive(const AdaptiveRunConfig& cfg)
{
    cfg.controller.validate();
    const auto start = std::chrono::steady_clock::now();
    AdaptiveRunResult out;
    out.delta = perturbations(cfg.members, cfg.delta_bound, cfg.seed);
    const ManufacturedSolution sol({cfg.variant, cfg.omega}, cfg.nu, out.delta);
    const fem::FeSpaces sp(fem::generate_mesh(cfg.mesh));
    const Operators ops(sp);
    const Theta theta(cfg.theta);

    ens::EnsembleSolver solver(ops, sol.physics(ops), theta);
    ens::EnsembleState s0 = sol.initial_state(ops, cfg.t0, cfg.controller.k_min);
    ErrorTracker err(ops, sol);
    for (int j = 0; j < s0.members(); ++j) {
        err.velocity_level(j, s0.t_nm1, s0.u_nm1[j]);
        err.velocity_level(j, s0.t_n, s0.u_n[j]);
    }
    ens::EnsembleAdaptiveStepper stepper(solver, std::move(s0), cfg.form);
    stepper.set_accept_hook([&](const ens::EnsembleState& before, const ens::EnsembleStepResult& r) {
        const double tb = t_beta(r.coeffs, before.t_nm1, before.t_n, r.t_np1);
        const double w = r.coeffs.k_n + r.coeffs.k_nm1;
        for (int j = 0; j < before.members(); ++j) {
            err.velocity_level(j, r.t_np1, r.u[j]);
            err.pressure_level(j, tb, blend_beta(r.coeffs, before.p_nm1[j], before.p_n[j], r.p[j]), w);
        }
        out.energies.push_back(energy_row(ops, sol, before, r, solver.counters()));
    });
    adapt::LoopOptions opts;
    opts.form = cfg.estimator;
    out.report = adapt::adaptive_loop(stepper, cfg.t0, cfg.t_end, theta, cfg.controller, opts);
    out.errors = err.report();
    out.counters = solver.counters();
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (cfg.run_constant) {
        const auto cost = static_cast<int>(std::max<std::size_t>(out.report.total_cost(), 2));
        out.constant = run_constant(ops, sol, theta, cfg.t0, cfg.t_end, cost, cfg.form, true);
        out.has_constant = true;
    }
    return out;
}

}  // namespace dlnens::exp
