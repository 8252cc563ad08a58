#pragma once

#include "lattlab/grid.hpp"

#include <Eigen/Sparse>

#include <stdexcept>

namespace lattlab {

/// H = -1/2 Laplacian + V on the interior grid, 5-point stencil with
/// Dirichlet walls (out-of-domain neighbors are zero).
struct HamiltonianOperator {
    Grid2D grid;
    ScalarField potential;

    explicit HamiltonianOperator(const ScalarField& v) : grid(v.grid), potential(v) {
        if (!potential.values.allFinite())
            throw std::invalid_argument("HamiltonianOperator: potential has NaN/Inf");
    }
};

inline void apply_hamiltonian_into(const HamiltonianOperator& op,
                                   const Eigen::VectorXd& psi, Eigen::VectorXd& out) {
    const int n = op.grid.points_per_axis;
    const double c = 0.5 / (op.grid.spacing * op.grid.spacing);
    const double* v = op.potential.values.data();
    const double* p = psi.data();
    double* o = out.data();
    for (int iy = 0; iy < n; ++iy) {
        const int row = iy * n;
        for (int ix = 0; ix < n; ++ix) {
            const int k = row + ix;
            double lap = -4.0 * p[k];
            if (ix > 0) lap += p[k - 1];
            if (ix < n - 1) lap += p[k + 1];
            if (iy > 0) lap += p[k - n];
            if (iy < n - 1) lap += p[k + n];
            o[k] = -c * lap + v[k] * p[k];
        }
    }
}

inline Wavefunction apply_hamiltonian(const HamiltonianOperator& op, const Wavefunction& psi) {
    require_same_grid(op.grid, psi.grid, "apply_hamiltonian");
    Wavefunction out(op.grid);
    apply_hamiltonian_into(op, psi.values, out.values);
    return out;
}

inline Eigen::SparseMatrix<double> assemble_sparse(const HamiltonianOperator& op) {
    const int n = op.grid.points_per_axis;
    const int N = n * n;
    const double c = 0.5 / (op.grid.spacing * op.grid.spacing);
    Eigen::SparseMatrix<double> H(N, N);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(5) * N);
    for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n; ++ix) {
            const int k = iy * n + ix;
            trips.emplace_back(k, k, 4.0 * c + op.potential.values[k]);
            if (ix > 0) trips.emplace_back(k, k - 1, -c);
            if (ix < n - 1) trips.emplace_back(k, k + 1, -c);
            if (iy > 0) trips.emplace_back(k, k - n, -c);
            if (iy < n - 1) trips.emplace_back(k, k + n, -c);
        }
    }
    H.setFromTriplets(trips.begin(), trips.end());
    return H;
}

/// L2 (quadrature-norm) residual ||H psi - e psi||.
inline double residual_norm(const HamiltonianOperator& op, const Wavefunction& psi, double e) {
    require_same_grid(op.grid, psi.grid, "residual_norm");
    Eigen::VectorXd r(psi.values.size());
    apply_hamiltonian_into(op, psi.values, r);
    r -= e * psi.values;
    return op.grid.spacing * r.norm();
}

}  // namespace lattlab
