#pragma once

#include "lattlab/hamiltonian.hpp"
#include "lattlab/rng.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace lattlab {

struct SolverMeta {
    std::string method = "shift-invert-block-krylov";
    std::uint64_t seed = 0;
    int restarts = 0;
    int inverse_applications = 0;
    double tolerance = 0.0;
};

struct EigenpairSet {
    std::vector<double> energies;
    std::vector<Wavefunction> states;
    std::vector<double> residuals;
    SolverMeta meta;
};

class NonConvergenceError : public std::runtime_error {
public:
    NonConvergenceError(const std::string& what, std::vector<double> best)
        : std::runtime_error(what), best_residuals(std::move(best)) {}
    std::vector<double> best_residuals;
};

struct SolverOptions {
    std::uint64_t seed = 12345;
    int block_size = 4;
    int max_restarts = 60;
    int extra_basis = 0;   // 0 -> automatic: max(50, n_states/2)
    int max_states_cap = 1200;
};

namespace detail {

/// Orthogonalize the columns of W against Q (two CGS passes) and against each
/// other; rank-deficient columns are replaced with fresh random vectors.
inline void orthonormalize_block(const Eigen::MatrixXd& Q, int q_cols,
                                 Eigen::MatrixXd& W, Rng& rng) {
    const auto N = W.rows();
    for (int pass = 0; pass < 2; ++pass) {
        if (q_cols > 0) {
            Eigen::MatrixXd coef = Q.leftCols(q_cols).transpose() * W;
            W.noalias() -= Q.leftCols(q_cols) * coef;
        }
    }
    for (int j = 0; j < W.cols(); ++j) {
        for (int attempt = 0; attempt < 3; ++attempt) {
            for (int i = 0; i < j; ++i)
                W.col(j) -= W.col(i).dot(W.col(j)) * W.col(i);
            const double nrm = W.col(j).norm();
            if (nrm > 1e-12) {
                W.col(j) /= nrm;
                break;
            }
            for (Eigen::Index r = 0; r < N; ++r) W(r, j) = rng.normal();
            if (q_cols > 0) {
                Eigen::MatrixXd coef = Q.leftCols(q_cols).transpose() * W.col(j);
                W.col(j).noalias() -= Q.leftCols(q_cols) * coef;
            }
        }
    }
}

}  // namespace detail

/// Lowest n_states eigenpairs of the discrete Hamiltonian.
///
/// Factorizes H - sigma I (sigma below min V, so the shifted operator is
/// positive definite) and runs a block Krylov iteration on its inverse with
/// full reorthogonalization, explicit Rayleigh-Ritz projections of H, and
/// thick restarts that keep the current Ritz vectors. Deterministic up to
/// eigenvector sign for a fixed seed; signs are fixed by making the
/// largest-magnitude component positive.
inline EigenpairSet solve_lowest(const HamiltonianOperator& op, int n_states, double tol,
                                 const SolverOptions& opts = {}) {
    const int N = op.grid.num_points();
    if (n_states < 1)
        throw std::invalid_argument("solve_lowest: n_states must be >= 1");
    if (n_states > N / 5)
        throw std::invalid_argument("solve_lowest: n_states exceeds 20% of grid dimension");
    if (n_states > opts.max_states_cap)
        throw std::invalid_argument("solve_lowest: n_states exceeds desk-scale cap of " +
                                    std::to_string(opts.max_states_cap));
    if (!(tol > 0.0)) throw std::invalid_argument("solve_lowest: tol must be positive");

    const double h = op.grid.spacing;
    const double sigma = op.potential.values.minCoeff() - 1.0;
    Eigen::SparseMatrix<double> H = assemble_sparse(op);
    Eigen::SparseMatrix<double> Hs = H;
    for (int k = 0; k < N; ++k) Hs.coeffRef(k, k) -= sigma;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Hs);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("solve_lowest: factorization of shifted operator failed");

    const int p = std::max(1, std::min(opts.block_size, n_states));
    const int extra = opts.extra_basis > 0 ? opts.extra_basis
                                           : std::max(50, n_states / 2);
    const int m_max = std::min(N, n_states + extra);
    const int keep = std::min(m_max - p, n_states + std::min(30, extra / 2));

    Rng rng(opts.seed);
    Eigen::MatrixXd Q(N, m_max);
    int q_cols = 0;

    Eigen::MatrixXd P(N, p);
    for (int j = 0; j < p; ++j)
        for (int i = 0; i < N; ++i) P(i, j) = rng.normal();
    detail::orthonormalize_block(Q, 0, P, rng);

    SolverMeta meta;
    meta.seed = opts.seed;
    meta.tolerance = tol;

    Eigen::VectorXd ritz_vals;
    Eigen::MatrixXd Y;          // Ritz vectors of the lowest `keep` pairs
    std::vector<double> resid(n_states, 1e300);

    const int chunk = 32;
    for (int restart = 0; restart <= opts.max_restarts; ++restart) {
        // Expand the basis with inverse applications of the pending block.
        while (q_cols + p <= m_max) {
            Eigen::MatrixXd W(N, p);
            for (int j = 0; j < p; ++j) W.col(j) = ldlt.solve(P.col(j));
            meta.inverse_applications += p;
            detail::orthonormalize_block(Q, q_cols, W, rng);
            Q.middleCols(q_cols, p) = W;
            q_cols += p;
            P = W;
        }

        // Rayleigh-Ritz on H over the current basis.
        Eigen::MatrixXd A(q_cols, q_cols);
        {
            Eigen::VectorXd hy(N);
            Eigen::MatrixXd HQ(N, chunk);
            for (int c0 = 0; c0 < q_cols; c0 += chunk) {
                const int w = std::min(chunk, q_cols - c0);
                for (int j = 0; j < w; ++j) {
                    apply_hamiltonian_into(op, Q.col(c0 + j), hy);
                    HQ.col(j) = hy;
                }
                A.middleCols(c0, w).noalias() = Q.leftCols(q_cols).transpose() * HQ.leftCols(w);
            }
            A = 0.5 * (A + A.transpose()).eval();
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
        const int k = std::min(keep, q_cols);
        ritz_vals = es.eigenvalues().head(k);
        Y.noalias() = Q.leftCols(q_cols) * es.eigenvectors().leftCols(k);

        // Residuals of the wanted pairs (quadrature norm).
        bool converged = true;
        int worst = 0;
        {
            Eigen::VectorXd hy(N);
            for (int j = 0; j < n_states; ++j) {
                apply_hamiltonian_into(op, Y.col(j), hy);
                hy -= ritz_vals[j] * Y.col(j);
                resid[j] = h * hy.norm();
                if (resid[j] > resid[worst]) worst = j;
                if (resid[j] >= tol) converged = false;
            }
        }
        meta.restarts = restart;
        if (converged) break;
        if (restart == opts.max_restarts)
            throw NonConvergenceError(
                "solve_lowest: not converged after " + std::to_string(opts.max_restarts) +
                " restarts (worst residual " + std::to_string(resid[worst]) + ")", resid);

        // Thick restart: compress to the Ritz vectors, continue the iteration
        // from the worst unconverged states.
        Q.leftCols(k) = Y;
        q_cols = k;
        std::vector<int> order(n_states);
        for (int j = 0; j < n_states; ++j) order[j] = j;
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return resid[a] > resid[b]; });
        for (int j = 0; j < p; ++j) P.col(j) = Y.col(order[j % n_states]);
    }

    EigenpairSet out;
    out.meta = meta;
    out.energies.resize(n_states);
    out.residuals.resize(n_states);
    out.states.reserve(n_states);
    for (int j = 0; j < n_states; ++j) {
        out.energies[j] = ritz_vals[j];
        out.residuals[j] = resid[j];
        Wavefunction psi(op.grid);
        psi.values = Y.col(j) / h;  // unit l2 -> unit quadrature norm
        int imax = 0;
        psi.values.cwiseAbs().maxCoeff(&imax);
        if (psi.values[imax] < 0.0) psi.values = -psi.values;
        out.states.push_back(std::move(psi));
    }
    return out;
}

}  // namespace lattlab
