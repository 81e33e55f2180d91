#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dlnens/experiments.hpp"

namespace fs = std::filesystem;
using namespace dlnens;
using namespace dlnens::exp;

namespace {

struct Shared {
    std::optional<double> theta;
    std::optional<double> re;
    std::optional<double> omega;
    std::vector<int> mesh;
    std::vector<int> members;
    std::optional<std::uint64_t> seed;
    std::optional<double> delta;
    std::optional<double> t_end;
    std::string form = "refactorized";
    std::string out_dir = "out";
};

StepForm parse_form(const std::string& s)
{
    if (s == "direct") return StepForm::direct;
    if (s == "refactorized") return StepForm::refactorized;
    throw InvalidArgument("unknown step form '" + s + "'");
}

std::ofstream open_csv(const std::string& dir, const std::string& name)
{
    fs::create_directories(dir);
    const fs::path p = fs::path(dir) / name;
    std::ofstream os(p);
    if (!os) throw Error("cannot write " + p.string());
    std::cout << "wrote " << p.string() << '\n';
    return os;
}

void write_delta(const std::string& dir, const std::string& name, const std::vector<double>& d)
{
    auto os = open_csv(dir, name);
    os.precision(17);
    os << "j,delta\n";
    for (std::size_t j = 0; j < d.size(); ++j) os << j + 1 << ',' << d[j] << '\n';
}

int converge(const Shared& sh)
{
    ConvergenceConfig cfg;
    cfg.theta = sh.theta.value_or(cfg.theta);
    if (sh.re) cfg.nu = 1.0 / *sh.re;
    cfg.omega = sh.omega.value_or(cfg.omega);
    if (!sh.mesh.empty()) cfg.meshes = sh.mesh;
    if (!sh.members.empty()) cfg.members = sh.members.front();
    cfg.seed = sh.seed.value_or(cfg.seed);
    cfg.delta_bound = sh.delta.value_or(cfg.delta_bound);
    cfg.t_end = sh.t_end.value_or(cfg.t_end);
    cfg.form = parse_form(sh.form);

    const auto r = run_convergence(cfg);
    auto os = open_csv(sh.out_dir, "convergence.csv");
    r.write_csv(os);
    write_delta(sh.out_dir, "convergence_delta.csv", r.delta);
    r.write_csv(std::cout);
    return 0;
}

int efficiency(const Shared& sh)
{
    EfficiencyConfig cfg;
    cfg.theta = sh.theta.value_or(cfg.theta);
    if (sh.re) cfg.nu = 1.0 / *sh.re;
    cfg.omega = sh.omega.value_or(cfg.omega);
    if (!sh.mesh.empty()) cfg.mesh = sh.mesh.front();
    if (!sh.members.empty()) cfg.members = sh.members;
    cfg.seed = sh.seed.value_or(cfg.seed);
    cfg.delta_bound = sh.delta.value_or(cfg.delta_bound);
    cfg.t_end = sh.t_end.value_or(cfg.t_end);
    cfg.form = parse_form(sh.form);

    const auto r = run_efficiency(cfg);
    auto os = open_csv(sh.out_dir, "efficiency.csv");
    r.write_csv(os);
    r.write_csv(std::cout);
    return 0;
}

struct AdaptiveFlags {
    std::string variant = "lindberg2";
    std::optional<double> t0;
    std::optional<double> tol, kappa, kmin, kmax;
    std::string estimator = "nominal";
    bool skip_constant = false;
};

int adaptive(const Shared& sh, const AdaptiveFlags& af)
{
    AdaptiveRunConfig cfg;
    cfg.variant = parse_variant(af.variant);
    if (cfg.variant == Variant::lindberg1) {
        cfg.t0 = 1.59;
        cfg.t_end = 1.6032;
    } else if (cfg.variant == Variant::sin_omega) {
        cfg.t0 = 0.0;
        cfg.t_end = 1.0;
    }
    cfg.theta = sh.theta.value_or(cfg.theta);
    if (sh.re) cfg.nu = 1.0 / *sh.re;
    cfg.omega = sh.omega.value_or(cfg.variant == Variant::sin_omega ? 10.0 : cfg.omega);
    if (!sh.mesh.empty()) cfg.mesh = sh.mesh.front();
    if (!sh.members.empty()) cfg.members = sh.members.front();
    cfg.seed = sh.seed.value_or(cfg.seed);
    cfg.delta_bound = sh.delta.value_or(cfg.delta_bound);
    cfg.t0 = af.t0.value_or(cfg.t0);
    cfg.t_end = sh.t_end.value_or(cfg.t_end);
    cfg.controller.tol = af.tol.value_or(cfg.controller.tol);
    cfg.controller.kappa = af.kappa.value_or(cfg.controller.kappa);
    cfg.controller.k_min = af.kmin.value_or(cfg.controller.k_min);
    cfg.controller.k_max = af.kmax.value_or(cfg.controller.k_max);
    if (af.estimator == "nominal") {
        cfg.estimator = adapt::EstimatorForm::nominal;
    } else if (af.estimator == "calibrated") {
        cfg.estimator = adapt::EstimatorForm::calibrated;
    } else {
        throw InvalidArgument("unknown estimator '" + af.estimator + "'");
    }
    cfg.form = parse_form(sh.form);
    cfg.run_constant = !af.skip_constant;

    const auto r = run_adaptive(cfg);
    {
        auto os = open_csv(sh.out_dir, "adaptive_steps.csv");
        r.report.write_csv(os);
    }
    {
        auto os = open_csv(sh.out_dir, "adaptive_energy.csv");
        write_energy_csv(os, r.energies);
    }
    if (r.has_constant) {
        auto os = open_csv(sh.out_dir, "constant_energy.csv");
        write_energy_csv(os, r.constant.energies);
    }
    write_delta(sh.out_dir, "adaptive_delta.csv", r.delta);

    const auto avg = r.errors.average();
    auto os = open_csv(sh.out_dir, "adaptive_summary.csv");
    os.precision(10);
    os << "run,steps,rejections,forced,total_cost,aborted,t_final,min_step,max_step,final_energy_error,"
          "avg_u_inf_l2,avg_u_inf_h1,avg_p_l2_l2,wall_s\n";
    os << "adaptive," << r.report.accepted_steps << ',' << r.report.rejections << ',' << r.report.forced_accepts << ','
       << r.report.total_cost() << ',' << r.report.aborted << ',' << r.report.t_final << ','
       << r.report.min_accepted_step << ',' << r.report.max_accepted_step << ',' << r.final_energy_error() << ','
       << avg.u_inf_l2 << ',' << avg.u_inf_h1 << ',' << avg.p_l2_l2 << ',' << r.wall_seconds << '\n';
    if (r.has_constant) {
        const auto c = r.constant.errors.average();
        os << "constant," << r.constant.steps << ",0,0," << r.constant.steps << ',' << r.constant.aborted << ','
           << r.constant.t_final << ',' << r.constant.k << ',' << r.constant.k << ','
           << r.constant.final_energy_error() << ',' << c.u_inf_l2 << ',' << c.u_inf_h1 << ',' << c.p_l2_l2 << ','
           << r.constant.wall_seconds << '\n';
    }
    std::cout << "adaptive: steps " << r.report.accepted_steps << ", rejections " << r.report.rejections
              << ", total cost " << r.report.total_cost() << ", forced accepts " << r.report.forced_accepts
              << (r.report.aborted ? ", aborted: " + r.report.abort_reason : std::string()) << '\n';
    if (r.has_constant) {
        std::cout << "constant: k " << r.constant.k
                  << (r.constant.aborted ? ", aborted: " + r.constant.abort_reason : std::string())
                  << ", final kinetic energy error " << r.constant.final_energy_error() << " (adaptive "
                  << r.final_energy_error() << ")\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Ensemble DLN solver for Navier-Stokes test problems"};
    app.set_config("--config", "", "key=value file; command-line flags take precedence");
    app.require_subcommand(1);
    app.fallthrough();

    Shared sh;
    app.add_option("--theta", sh.theta, "DLN parameter in [0, 1]");
    app.add_option("--re", sh.re, "Reynolds number, nu = 1 / Re");
    app.add_option("--omega", sh.omega, "time-factor frequency (sin) or stiffness exponent (Lindberg)");
    app.add_option("--mesh", sh.mesh, "cells per side; a list for converge")->delimiter(',');
    app.add_option("--j", sh.members, "ensemble size; a list for efficiency")->delimiter(',');
    app.add_option("--seed", sh.seed, "perturbation seed");
    app.add_option("--delta", sh.delta, "perturbation bound");
    app.add_option("--t-end", sh.t_end, "final time");
    app.add_option("--form", sh.form, "direct or refactorized")->check(CLI::IsMember({"direct", "refactorized"}));
    app.add_option("--out-dir", sh.out_dir, "directory for CSV output");

    auto* conv = app.add_subcommand("converge", "constant-step errors and rates on a mesh sequence");
    auto* eff = app.add_subcommand("efficiency", "cost of one shared factorization across ensemble sizes");
    auto* ad = app.add_subcommand("adaptive", "adaptive run on a stiff problem plus the matched constant-step run");

    AdaptiveFlags af;
    ad->add_option("--variant", af.variant, "lindberg1, lindberg2 or sin");
    ad->add_option("--t0", af.t0, "start time");
    ad->add_option("--tol", af.tol, "estimator tolerance");
    ad->add_option("--kappa", af.kappa, "safety factor");
    ad->add_option("--kmin", af.kmin, "minimum step");
    ad->add_option("--kmax", af.kmax, "maximum step");
    ad->add_option("--estimator", af.estimator, "nominal or calibrated")
        ->check(CLI::IsMember({"nominal", "calibrated"}));
    ad->add_flag("--no-constant", af.skip_constant, "skip the matched constant-step run");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*conv) return converge(sh);
        if (*eff) return efficiency(sh);
        if (*ad) return adaptive(sh, af);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
