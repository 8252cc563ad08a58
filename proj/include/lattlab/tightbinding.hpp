#pragma once

#include "lattlab/potential.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace lattlab {

/// Deep-well reduction of the continuum model: L x L lattice, uniform
/// nearest-neighbor hopping t, on-site energies e0 + (local bump amplitudes),
/// open (hard-wall) boundaries.
struct TBModel {
    int L = 0;
    std::vector<double> onsite;   // L*L entries, row-major over wells
    double hopping = 0.0;
    bool deep_well_violated = false;  // some well holds more than one bump

    int site(int i, int j) const { return j * L + i; }
};

/// On-site energies pick up only amplitudes of bumps lying within r0 of a
/// well center; bumps on barriers are ignored. Two bumps in one well add and
/// set the deep-well warning flag.
inline TBModel reduce_to_tb(const FermiParams& fermi, const DisorderRealization& real,
                            double e0, double t) {
    fermi.validate();
    TBModel m;
    m.L = fermi.L;
    m.hopping = t;
    m.onsite.assign(static_cast<std::size_t>(fermi.L) * fermi.L, e0);
    std::vector<int> bumps_in_well(m.onsite.size(), 0);
    for (const auto& b : real.bumps) {
        const int i = static_cast<int>(std::floor(b.x / fermi.a));
        const int j = static_cast<int>(std::floor(b.y / fermi.a));
        if (i < 0 || i >= fermi.L || j < 0 || j >= fermi.L) continue;
        const double cx = (i + 0.5) * fermi.a;
        const double cy = (j + 0.5) * fermi.a;
        if (std::hypot(b.x - cx, b.y - cy) >= fermi.r0) continue;
        const int s = m.site(i, j);
        m.onsite[s] += b.amplitude;
        if (++bumps_in_well[s] > 1) m.deep_well_violated = true;
    }
    return m;
}

struct TBSpectrum {
    std::vector<double> energies;
    Eigen::MatrixXd vectors;  // columns are site-basis eigenvectors
};

inline Eigen::MatrixXd tb_matrix(const TBModel& m) {
    const int N = m.L * m.L;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(N, N);
    for (int j = 0; j < m.L; ++j)
        for (int i = 0; i < m.L; ++i) {
            const int s = m.site(i, j);
            H(s, s) = m.onsite[s];
            if (i + 1 < m.L) {
                H(s, m.site(i + 1, j)) = m.hopping;
                H(m.site(i + 1, j), s) = m.hopping;
            }
            if (j + 1 < m.L) {
                H(s, m.site(i, j + 1)) = m.hopping;
                H(m.site(i, j + 1), s) = m.hopping;
            }
        }
    return H;
}

inline TBSpectrum tb_spectrum(const TBModel& m) {
    const long N = static_cast<long>(m.L) * m.L;
    if (N > 10000)
        throw std::invalid_argument("tb_spectrum: dense diagonalization cap is L^2 <= 10^4");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tb_matrix(m));
    TBSpectrum out;
    out.energies.assign(es.eigenvalues().data(), es.eigenvalues().data() + N);
    out.vectors = es.eigenvectors();
    return out;
}

/// Lattice IPR: sum |c_i|^4 for a normalized site-basis vector, in [1/L^2, 1].
inline double tb_ipr(const Eigen::VectorXd& state) {
    return state.array().square().square().sum();
}

}  // namespace lattlab
