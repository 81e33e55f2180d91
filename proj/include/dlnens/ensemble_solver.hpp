#pragma once
// DLN-Ensemble time step for J Navier-Stokes systems sharing one coefficient matrix:
// ensemble-mean convection is implicit, each member's fluctuation is lagged to the
// right-hand side, so one factorization serves all J solves.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <ostream>
#include <utility>
#include <vector>

#include "dlnens/adaptivity.hpp"
#include "dlnens/dln_core.hpp"
#include "dlnens/error.hpp"
#include "dlnens/fem2d.hpp"

namespace dlnens::ens {

using fem::Operators;
using fem::SparseMatrix;
using fem::Vector;

/// Viscosity, forcing and Dirichlet data per member. Both callbacks return full
/// velocity-space vectors: forcing_load gives (f_j(t), phi_i); boundary_values is read
/// only on Dirichlet dofs.
struct NsePhysics {
    double nu = 1.0;
    std::function<Vector(int member, double t)> forcing_load;
    std::function<Vector(int member, double t)> boundary_values;

    /// Physics from pointwise callables; f sampled at quadrature points, g interpolated.
    static NsePhysics pointwise(const Operators& ops, double nu,
                                std::function<std::array<double, 2>(int, double, double, double)> f,
                                std::function<std::array<double, 2>(int, double, double, double)> g)
    {
        NsePhysics p;
        p.nu = nu;
        const Operators* o = &ops;
        p.forcing_load = [o, f](int j, double t) {
            return o->load([&](double x, double y) { return f(j, x, y, t); });
        };
        p.boundary_values = [o, g](int j, double t) {
            return fem::interpolate_velocity(o->spaces(), [&](double x, double y) { return g(j, x, y, t); });
        };
        return p;
    }

    void validate() const
    {
        if (!(nu > 0.0)) throw InvalidArgument("viscosity must be positive");
        if (!forcing_load || !boundary_values) throw InvalidArgument("physics callbacks must be set");
    }
};

/// Two most recent levels for every member.
struct EnsembleState {
    double t_nm1 = 0.0;
    double t_n = 0.0;
    std::vector<Vector> u_nm1, u_n, p_nm1, p_n;
    std::size_t step = 1;  ///< index n of the newest level

    int members() const { return static_cast<int>(u_n.size()); }
    double previous_step() const { return t_n - t_nm1; }

    void validate(const fem::FeSpaces& sp) const
    {
        const std::size_t j = u_n.size();
        if (j == 0) throw InvalidArgument("ensemble needs at least one member");
        if (u_nm1.size() != j || p_n.size() != j || p_nm1.size() != j) {
            throw DimensionMismatch("member lists differ in length");
        }
        for (std::size_t i = 0; i < j; ++i) {
            if (u_n[i].size() != sp.velocity_dofs() || u_nm1[i].size() != sp.velocity_dofs() ||
                p_n[i].size() != sp.pressure_dofs() || p_nm1[i].size() != sp.pressure_dofs()) {
                throw DimensionMismatch("member vectors do not match the spaces");
            }
        }
        if (!(t_n > t_nm1)) throw InvalidArgument("state times must be increasing");
    }
};

/// Mean over members of the extrapolated velocities z_{n,*}.
inline Vector ensemble_mean_star(const EnsembleState& s, const DlnCoefficients& c)
{
    Vector mean = Vector::Zero(s.u_n.front().size());
    for (int j = 0; j < s.members(); ++j) mean += blend_star(c, s.u_nm1[j], s.u_n[j]);
    return mean / s.members();
}

struct CflIndicator {
    /// (khat / (h nu)) |grad(u_{n,*}^j - <u>_{n,*})|^2 per member
    std::vector<double> values;
    /// ((1 + eps theta) / (1 - eps))^2
    double ratio_factor = 0.0;
    /// eps too close to 1 for the ratio factor to be meaningful
    bool degenerate = false;

    double max() const { return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end()); }
};

inline CflIndicator cfl_indicator(const EnsembleState& s, const DlnCoefficients& c, const Operators& ops, double nu)
{
    CflIndicator ind;
    const Vector mean = ensemble_mean_star(s, c);
    const double scale = c.khat / (ops.spaces().h() * nu);
    for (int j = 0; j < s.members(); ++j) {
        const Vector d = blend_star(c, s.u_nm1[j], s.u_n[j]) - mean;
        ind.values.push_back(scale * d.dot(ops.apply_block(ops.stiffness(), d)));
    }
    const double gap = 1.0 - c.eps;
    ind.degenerate = gap < 1e-12;
    ind.ratio_factor = ind.degenerate ? std::numeric_limits<double>::infinity()
                                      : std::pow((1.0 + c.eps * c.theta) / gap, 2);
    return ind;
}

/// Saddle-point matrix on a fixed pattern:
///   [ a M + b K + c N   -g D^T   0 ]
///   [ -d D               0       1 ]   (1 = column of (psi_q, 1))
///   [ 0                  1^T     0 ]
/// with Dirichlet velocity rows replaced by identity rows and their columns moved to the rhs.
class SaddleSystem {
public:
    struct Coefficients {
        double mass = 0.0;
        double stiffness = 0.0;
        double convection = 0.0;
        double gradient = 1.0;
        double divergence = 1.0;
    };

    explicit SaddleSystem(const Operators& ops) : ops_(&ops) { build_pattern(); }

    int size() const { return matrix_.rows(); }
    int velocity_size() const { return nv_; }
    int pressure_size() const { return np_; }
    const SparseMatrix& matrix() const { return matrix_; }

    void fill(const Coefficients& k, const SparseMatrix& conv)
    {
        coeffs_ = k;
        conv_ = &conv;
        auto& val = matrix_.values();
        std::fill(val.begin(), val.end(), 0.0);
        const auto& m = ops_->mass().values();
        const auto& st = ops_->stiffness().values();
        const auto& n = conv.values();
        const std::size_t ns = m.size();
        for (int c = 0; c < 2; ++c) {
            for (std::size_t p = 0; p < ns; ++p) {
                const long pos = vel_pos_[c * ns + p];
                if (pos >= 0) val[pos] = k.mass * m[p] + k.stiffness * st[p] + k.convection * n[p];
            }
        }
        for (long pos : diag_pos_) val[pos] = 1.0;
        const auto& dv = dt_.values();
        for (std::size_t p = 0; p < dv.size(); ++p) {
            if (dt_pos_[p] >= 0) val[dt_pos_[p]] = -k.gradient * dv[p];
        }
        const auto& d = ops_->divergence().values();
        for (std::size_t p = 0; p < d.size(); ++p) {
            if (d_pos_[p] >= 0) val[d_pos_[p]] = -k.divergence * d[p];
        }
        const Vector& ci = ops_->pressure_integrals();
        for (int q = 0; q < np_; ++q) {
            val[lam_col_pos_[q]] = ci[q];
            val[lam_row_pos_[q]] = ci[q];
        }
    }

    /// Right-hand side from momentum load r_u, continuity load r_p and Dirichlet values g.
    Vector rhs(const Vector& r_u, const Vector& r_p, const Vector& g) const
    {
        if (conv_ == nullptr) throw Error("fill must precede rhs");
        const auto& mask = ops_->spaces().dirichlet_mask();
        Vector g_ext = Vector::Zero(nv_);
        for (int i = 0; i < nv_; ++i) {
            if (mask[i]) g_ext[i] = g[i];
        }
        Vector b(size());
        const Vector lift = coeffs_.mass * ops_->apply_block(ops_->mass(), g_ext) +
                            coeffs_.stiffness * ops_->apply_block(ops_->stiffness(), g_ext) +
                            coeffs_.convection * ops_->apply_block(*conv_, g_ext);
        for (int i = 0; i < nv_; ++i) b[i] = mask[i] ? g[i] : r_u[i] - lift[i];
        b.segment(nv_, np_) = r_p + coeffs_.divergence * (ops_->divergence() * g_ext);
        b[nv_ + np_] = 0.0;
        return b;
    }

private:
    void build_pattern()
    {
        const auto& sp = ops_->spaces();
        const auto& mask = sp.dirichlet_mask();
        const int nn = sp.num_nodes();
        nv_ = sp.velocity_dofs();
        np_ = sp.pressure_dofs();
        const int n = nv_ + np_ + 1;
        dt_ = ops_->divergence().transpose();
        const auto& s = ops_->mass();
        const auto& d = ops_->divergence();

        std::vector<fem::Triplet> t;
        for (int c = 0; c < 2; ++c) {
            for (int r = 0; r < nn; ++r) {
                const int row = c * nn + r;
                if (mask[row]) {
                    t.push_back({row, row, 0.0});
                    continue;
                }
                for (int p = s.row_ptr()[r]; p < s.row_ptr()[r + 1]; ++p) {
                    const int col = c * nn + s.col_idx()[p];
                    if (!mask[col]) t.push_back({row, col, 0.0});
                }
                for (int p = dt_.row_ptr()[row]; p < dt_.row_ptr()[row + 1]; ++p) {
                    t.push_back({row, nv_ + dt_.col_idx()[p], 0.0});
                }
            }
        }
        for (int q = 0; q < np_; ++q) {
            for (int p = d.row_ptr()[q]; p < d.row_ptr()[q + 1]; ++p) {
                if (!mask[d.col_idx()[p]]) t.push_back({nv_ + q, d.col_idx()[p], 0.0});
            }
            t.push_back({nv_ + q, n - 1, 0.0});
            t.push_back({n - 1, nv_ + q, 0.0});
        }
        matrix_ = SparseMatrix::from_triplets(n, n, std::move(t));

        const std::size_t ns = s.nonzeros();
        vel_pos_.assign(2 * ns, -1);
        for (int c = 0; c < 2; ++c) {
            for (int r = 0; r < nn; ++r) {
                const int row = c * nn + r;
                if (mask[row]) {
                    diag_pos_.push_back(matrix_.find(row, row));
                    continue;
                }
                for (int p = s.row_ptr()[r]; p < s.row_ptr()[r + 1]; ++p) {
                    const int col = c * nn + s.col_idx()[p];
                    if (!mask[col]) vel_pos_[c * ns + p] = matrix_.find(row, col);
                }
            }
        }
        dt_pos_.assign(dt_.nonzeros(), -1);
        for (int row = 0; row < nv_; ++row) {
            if (mask[row]) continue;
            for (int p = dt_.row_ptr()[row]; p < dt_.row_ptr()[row + 1]; ++p) {
                dt_pos_[p] = matrix_.find(row, nv_ + dt_.col_idx()[p]);
            }
        }
        d_pos_.assign(d.nonzeros(), -1);
        for (int q = 0; q < np_; ++q) {
            for (int p = d.row_ptr()[q]; p < d.row_ptr()[q + 1]; ++p) {
                if (!mask[d.col_idx()[p]]) d_pos_[p] = matrix_.find(nv_ + q, d.col_idx()[p]);
            }
            lam_col_pos_.push_back(matrix_.find(nv_ + q, n - 1));
            lam_row_pos_.push_back(matrix_.find(n - 1, nv_ + q));
        }
    }

    const Operators* ops_;
    int nv_ = 0;
    int np_ = 0;
    SparseMatrix matrix_;
    SparseMatrix dt_;
    std::vector<long> vel_pos_, diag_pos_, dt_pos_, d_pos_, lam_col_pos_, lam_row_pos_;
    Coefficients coeffs_;
    const SparseMatrix* conv_ = nullptr;
};

enum class StepForm { direct, refactorized };

struct EnsembleStepResult {
    double t_np1 = 0.0;
    std::vector<Vector> u;
    std::vector<Vector> p;
    DlnCoefficients coeffs;
    CflIndicator cfl;
    double max_multiplier = 0.0;  ///< largest |lambda| of the mean-zero constraint
};

struct SolverCounters {
    std::size_t steps = 0;
    std::size_t factorizations = 0;
    std::size_t solves = 0;
    double assembly_seconds = 0.0;
    double factor_seconds = 0.0;
    double solve_seconds = 0.0;
};

class EnsembleSolver {
public:
    EnsembleSolver(const Operators& ops, NsePhysics physics, Theta theta)
        : ops_(&ops), physics_(std::move(physics)), theta_(theta), saddle_(ops), conv_(ops.mass())
    {
        physics_.validate();
    }

    Theta theta() const { return theta_; }
    const NsePhysics& physics() const { return physics_; }
    const Operators& operators() const { return *ops_; }
    const SolverCounters& counters() const { return counters_; }
    void reset_counters() { counters_ = {}; }

    /// Computes level n+1 for every member without modifying the state.
    EnsembleStepResult compute_step(const EnsembleState& s, double k_n, StepForm form = StepForm::direct)
    {
        using clock = std::chrono::steady_clock;
        s.validate(ops_->spaces());
        if (!(k_n > 0.0)) throw InvalidArgument("step must be positive");
        const int J = s.members();
        const auto c = coefficients(theta_, k_n, s.previous_step());
        const double t_np1 = s.t_n + k_n;
        const double tb = t_beta(c, s.t_nm1, s.t_n, t_np1);
        const double nu = physics_.nu;

        auto t0 = clock::now();
        const Vector mean = ensemble_mean_star(s, c);
        ops_->convection_into(mean, conv_);

        SaddleSystem::Coefficients k;
        const double k_be = c.k_be();
        if (form == StepForm::direct) {
            k = {c.alpha[2] / c.khat, c.beta[2] * nu, c.beta[2], 1.0, c.beta[2]};
        } else {
            k = {1.0 / k_be, nu, 1.0, 1.0, 1.0};
        }
        saddle_.fill(k, conv_);

        const int nv = saddle_.velocity_size(), np = saddle_.pressure_size();
        Eigen::MatrixXd rhs(saddle_.size(), J);
        std::vector<Vector> known_beta(J);
        for (int j = 0; j < J; ++j) {
            const Vector star = blend_star(c, s.u_nm1[j], s.u_n[j]);
            known_beta[j] = c.beta[1] * s.u_n[j] + c.beta[0] * s.u_nm1[j];
            Vector r_u = physics_.forcing_load(j, tb) - ops_->convection_apply(star - mean, star);
            Vector r_p, g;
            const Vector g_np1 = physics_.boundary_values(j, t_np1);
            if (form == StepForm::direct) {
                const Vector known_alpha = c.alpha[1] * s.u_n[j] + c.alpha[0] * s.u_nm1[j];
                r_u -= ops_->apply_block(ops_->mass(), known_alpha) / c.khat;
                r_u -= nu * ops_->apply_block(ops_->stiffness(), known_beta[j]) + ops_->apply_block(conv_, known_beta[j]);
                r_p = ops_->divergence() * known_beta[j];
                g = g_np1;
            } else {
                const auto pre = c.prefilter();
                const Vector u_old = pre[1] * s.u_n[j] + pre[0] * s.u_nm1[j];
                r_u += ops_->apply_block(ops_->mass(), u_old) / k_be;
                r_p = Vector::Zero(np);
                g = c.beta[2] * g_np1 + known_beta[j];
            }
            rhs.col(j) = saddle_.rhs(r_u, r_p, g);
        }
        if (!mean.allFinite() || !rhs.allFinite()) throw InstabilityError(s.step + 1, t_np1);
        auto t1 = clock::now();
        lu_.factor(saddle_.matrix());
        auto t2 = clock::now();
        const Eigen::MatrixXd x = lu_.solve_many(rhs);
        auto t3 = clock::now();

        counters_.assembly_seconds += std::chrono::duration<double>(t1 - t0).count();
        counters_.factor_seconds += std::chrono::duration<double>(t2 - t1).count();
        counters_.solve_seconds += std::chrono::duration<double>(t3 - t2).count();
        ++counters_.factorizations;
        counters_.solves += static_cast<std::size_t>(J);

        EnsembleStepResult r;
        r.t_np1 = t_np1;
        r.coeffs = c;
        r.cfl = cfl_indicator(s, c, *ops_, nu);
        r.u.resize(J);
        r.p.resize(J);
        for (int j = 0; j < J; ++j) {
            if (!x.col(j).allFinite()) throw InstabilityError(s.step + 1, t_np1);
            const Vector v = x.col(j).head(nv);
            r.u[j] = form == StepForm::direct ? v : Vector((v - known_beta[j]) / c.beta[2]);
            const Vector pb = x.col(j).segment(nv, np);
            r.p[j] = (pb - c.beta[1] * s.p_n[j] - c.beta[0] * s.p_nm1[j]) / c.beta[2];
            r.max_multiplier = std::max(r.max_multiplier, std::abs(x(nv + np, j)));
        }
        return r;
    }

    static void advance(EnsembleState& s, const EnsembleStepResult& r)
    {
        s.t_nm1 = s.t_n;
        s.t_n = r.t_np1;
        s.u_nm1 = std::move(s.u_n);
        s.u_n = r.u;
        s.p_nm1 = std::move(s.p_n);
        s.p_n = r.p;
        ++s.step;
    }

    EnsembleStepResult step(EnsembleState& s, double k_n, StepForm form = StepForm::direct)
    {
        EnsembleStepResult r = compute_step(s, k_n, form);
        advance(s, r);
        ++counters_.steps;
        return r;
    }

private:
    const Operators* ops_;
    NsePhysics physics_;
    Theta theta_;
    SaddleSystem saddle_;
    SparseMatrix conv_;
    fem::Factorization lu_;
    SolverCounters counters_;
};

/// Independent single-system semi-implicit DLN step with unknowns (u_{n+1}, p_{n+1}),
/// assembled from whole vector-level matrices. Returns (u_{n+1}, p_{n+1}).
inline std::pair<Vector, Vector> semi_implicit_dln_step(const Operators& ops, const NsePhysics& physics, Theta theta,
                                                        double t_nm1, double t_n, const Vector& u_nm1,
                                                        const Vector& u_n, const Vector& p_nm1, const Vector& p_n,
                                                        double k_n, int member = 0)
{
    const auto c = coefficients(theta, k_n, t_n - t_nm1);
    const double t_np1 = t_n + k_n;
    const double tb = t_beta(c, t_nm1, t_n, t_np1);
    const double nu = physics.nu;
    const Vector star = blend_star(c, u_nm1, u_n);

    const SparseMatrix m = fem::assemble_mass(ops);
    const SparseMatrix k = fem::assemble_stiffness(ops);
    const SparseMatrix n = fem::assemble_convection(ops, star);
    const SparseMatrix d = ops.divergence();
    const int nv = m.rows(), np = d.rows(), size = nv + np + 1;

    std::vector<fem::Triplet> t;
    auto add_block = [&](const SparseMatrix& a, int r0, int c0, double s, bool transpose) {
        for (int r = 0; r < a.rows(); ++r) {
            for (int p = a.row_ptr()[r]; p < a.row_ptr()[r + 1]; ++p) {
                const int rr = transpose ? a.col_idx()[p] : r;
                const int cc = transpose ? r : a.col_idx()[p];
                t.push_back({r0 + rr, c0 + cc, s * a.values()[p]});
            }
        }
    };
    add_block(m, 0, 0, c.alpha[2] / c.khat, false);
    add_block(k, 0, 0, c.beta[2] * nu, false);
    add_block(n, 0, 0, c.beta[2], false);
    add_block(d, 0, nv, -c.beta[2], true);
    add_block(d, nv, 0, c.beta[2], false);
    for (int q = 0; q < np; ++q) {
        t.push_back({nv + q, size - 1, ops.pressure_integrals()[q]});
        t.push_back({size - 1, nv + q, ops.pressure_integrals()[q]});
    }

    const Vector known_alpha = c.alpha[1] * u_n + c.alpha[0] * u_nm1;
    const Vector known_beta = c.beta[1] * u_n + c.beta[0] * u_nm1;
    const Vector known_p = c.beta[1] * p_n + c.beta[0] * p_nm1;
    Vector b = Vector::Zero(size);
    b.head(nv) = physics.forcing_load(member, tb) - m * known_alpha / c.khat - nu * (k * known_beta) -
                 n * known_beta + d.transpose() * known_p;
    b.segment(nv, np) = -(d * known_beta);

    // Dirichlet rows: drop the row, move the column to the rhs, put 1 on the diagonal.
    const auto& mask = ops.spaces().dirichlet_mask();
    const Vector g = physics.boundary_values(member, t_np1);
    std::vector<fem::Triplet> kept;
    kept.reserve(t.size());
    for (const auto& e : t) {
        if (e.row < nv && mask[e.row]) continue;
        if (e.col < nv && mask[e.col]) {
            b[e.row] -= e.value * g[e.col];
            continue;
        }
        kept.push_back(e);
    }
    for (int i = 0; i < nv; ++i) {
        if (mask[i]) {
            kept.push_back({i, i, 1.0});
            b[i] = g[i];
        }
    }
    fem::Factorization lu;
    lu.factor(SparseMatrix::from_triplets(size, size, std::move(kept)));
    const Vector x = lu.solve(b);
    return {x.head(nv), x.segment(nv, np)};
}

/// Exact velocity and pressure of member j.
struct ExactSolution {
    std::function<std::array<double, 2>(int member, double x, double y, double t)> velocity;
    std::function<double(int member, double x, double y, double t)> pressure;
};

/// Both start levels interpolated from the exact solution at t0 and t0 + k0.
inline EnsembleState initialize_from_exact(const fem::FeSpaces& sp, const ExactSolution& exact, int members,
                                           double t0, double k0)
{
    if (members < 1) throw InvalidArgument("ensemble needs at least one member");
    if (!(k0 > 0.0)) throw InvalidArgument("start step must be positive");
    EnsembleState s;
    s.t_nm1 = t0;
    s.t_n = t0 + k0;
    for (int j = 0; j < members; ++j) {
        for (const double t : {s.t_nm1, s.t_n}) {
            Vector u = fem::interpolate_velocity(sp, [&](double x, double y) { return exact.velocity(j, x, y, t); });
            Vector p = fem::interpolate_pressure(sp, [&](double x, double y) { return exact.pressure(j, x, y, t); });
            (t == s.t_nm1 ? s.u_nm1 : s.u_n).push_back(std::move(u));
            (t == s.t_nm1 ? s.p_nm1 : s.p_n).push_back(std::move(p));
        }
    }
    return s;
}

struct MemberEnergy {
    double kinetic = 0.0;               ///< 1/2 |u|^2
    double viscous_dissipation = 0.0;   ///< nu |grad u|^2
    double numerical_dissipation = 0.0; ///< |sum gamma_l u_{n-1+l}|^2 / khat
};

inline MemberEnergy member_energy(const Operators& ops, double nu, const DlnCoefficients& c, const Vector& u_nm1,
                                  const Vector& u_n, const Vector& u_np1)
{
    MemberEnergy e;
    e.kinetic = 0.5 * u_np1.dot(ops.apply_block(ops.mass(), u_np1));
    e.viscous_dissipation = nu * u_np1.dot(ops.apply_block(ops.stiffness(), u_np1));
    const Vector g = blend_gamma(c, u_nm1, u_n, u_np1);
    e.numerical_dissipation = std::max(0.0, g.dot(ops.apply_block(ops.mass(), g))) / c.khat;
    return e;
}

/// Adaptive stepper over the ensemble, estimating with the mass-weighted L2 norm.
class EnsembleAdaptiveStepper {
public:
    using AcceptHook = std::function<void(const EnsembleState&, const EnsembleStepResult&)>;

    EnsembleAdaptiveStepper(EnsembleSolver& solver, EnsembleState initial, StepForm form = StepForm::direct)
        : solver_(&solver), state_(std::move(initial)), form_(form)
    {
        history_.push_back(state_.u_nm1);
        history_.push_back(state_.u_n);
    }

    void set_accept_hook(AcceptHook hook) { hook_ = std::move(hook); }

    void attempt(double k) { candidate_ = solver_->compute_step(state_, k, form_); }

    std::vector<double> relative_gaps(const std::array<double, 4>& w) const
    {
        if (history_.size() < 4) throw InvalidArgument("AB2-like predictor needs four stored levels");
        const auto& ops = solver_->operators();
        std::vector<double> gaps;
        for (std::size_t j = 0; j < candidate_.u.size(); ++j) {
            const Vector pred = w[0] * history_[0][j] + w[1] * history_[1][j] + w[2] * history_[2][j] +
                                w[3] * history_[3][j];
            gaps.push_back(adapt::relative_gap(candidate_.u[j], pred,
                                               [&ops](const Vector& v) { return fem::l2_norm(ops, v); }));
        }
        return gaps;
    }

    void accept()
    {
        history_.push_back(candidate_.u);
        if (history_.size() > 4) history_.pop_front();
        const EnsembleState before = hook_ ? state_ : EnsembleState{};
        EnsembleSolver::advance(state_, candidate_);
        if (hook_) hook_(before, candidate_);
    }

    const EnsembleState& state() const { return state_; }

private:
    EnsembleSolver* solver_;
    EnsembleState state_;
    StepForm form_;
    std::deque<std::vector<Vector>> history_;
    EnsembleStepResult candidate_;
    AcceptHook hook_;
};

}  // namespace dlnens::ens
