#pragma once
// Discrete inf-sup proxy: generalized eigenvalues of D K^{-1} D^T against the pressure
// mass matrix, with K the vector Laplacian on interior velocity dofs.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "dlnens/fem2d/assembly.hpp"

namespace dlnens::fem {

struct InfSupResult {
    double beta = 0.0;                 ///< sqrt of the smallest eigenvalue above the constant mode
    std::vector<double> eigenvalues;   ///< ascending, including the constant mode
};

inline InfSupResult inf_sup_proxy(const Operators& ops)
{
    const FeSpaces& sp = ops.spaces();
    const auto& mask = sp.dirichlet_mask();
    const int nn = sp.num_nodes();
    std::vector<int> free_index(mask.size(), -1);
    int n_free = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) free_index[i] = n_free++;
    }

    std::vector<Triplet> kt;
    const auto& k = ops.stiffness();
    for (int c = 0; c < 2; ++c) {
        for (int r = 0; r < nn; ++r) {
            const int fr = free_index[c * nn + r];
            if (fr < 0) continue;
            for (int p = k.row_ptr()[r]; p < k.row_ptr()[r + 1]; ++p) {
                const int fc = free_index[c * nn + k.col_idx()[p]];
                if (fc >= 0) kt.push_back({fr, fc, k.values()[p]});
            }
        }
    }
    Factorization lu;
    lu.factor(SparseMatrix::from_triplets(n_free, n_free, std::move(kt)));

    const auto& d = ops.divergence();
    const int np = d.rows();
    Eigen::MatrixXd dt = Eigen::MatrixXd::Zero(n_free, np);
    for (int q = 0; q < np; ++q) {
        for (int p = d.row_ptr()[q]; p < d.row_ptr()[q + 1]; ++p) {
            const int f = free_index[d.col_idx()[p]];
            if (f >= 0) dt(f, q) += d.values()[p];
        }
    }
    const Eigen::MatrixXd s = dt.transpose() * lu.solve_many(dt);
    const Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, ops.pressure_mass().to_dense());
    if (es.info() != Eigen::Success) throw Error("inf-sup eigenproblem failed");

    InfSupResult r;
    r.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    r.beta = std::sqrt(std::max(0.0, r.eigenvalues.at(1)));
    return r;
}

}  // namespace dlnens::fem
