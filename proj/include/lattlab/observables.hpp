#pragma once

#include "lattlab/grid.hpp"
#include "lattlab/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

namespace lattlab {

/// IPR_q = integral of |psi|^(2q); small for extended states, large for
/// localized ones.
inline double ipr(const Wavefunction& psi, int q = 2) {
    if (q < 2) throw std::invalid_argument("ipr: q must be >= 2");
    const double h = psi.grid.spacing;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < psi.values.size(); ++i) {
        const double d = psi.values[i] * psi.values[i];
        double t = d;
        for (int m = 1; m < q; ++m) t *= d;
        sum += t;
    }
    return sum * h * h;
}

inline double normalized_energy(double e, double e_min, double e_max) {
    if (!(e_max > e_min))
        throw std::invalid_argument("normalized_energy: degenerate energy range");
    if (e < e_min || e > e_max)
        throw std::invalid_argument("normalized_energy: e outside [e_min, e_max]");
    return (e - e_min) / (e_max - e_min);
}

/// <psi, -1/2 Laplacian psi> with the same stencil as the Hamiltonian, so
/// <T> + <V> = E holds within the solver residual.
inline double kinetic_expectation(const Wavefunction& psi) {
    ScalarField zero(psi.grid);
    HamiltonianOperator t_only(zero);
    Eigen::VectorXd tpsi(psi.values.size());
    apply_hamiltonian_into(t_only, psi.values, tpsi);
    const double h = psi.grid.spacing;
    return psi.values.dot(tpsi) * h * h;
}

inline double potential_expectation(const Wavefunction& psi, const ScalarField& v) {
    require_same_grid(psi.grid, v.grid, "potential_expectation");
    const double h = psi.grid.spacing;
    return (psi.values.array().square() * v.values.array()).sum() * h * h;
}

/// lambda(E) = 2 pi / sqrt(2 (E - <V>)); absent in the classically
/// forbidden regime E <= <V>.
inline std::optional<double> de_broglie(double e, double v_mean) {
    if (e <= v_mean) return std::nullopt;
    return 2.0 * M_PI / std::sqrt(2.0 * (e - v_mean));
}

struct RadialProfile {
    std::vector<double> r;        // bin centers
    std::vector<double> mean;     // angular average of |psi|^2
    std::vector<long> count;      // samples per annulus
    double bin_width = 0.0;
    double center_x = 0.0;
    double center_y = 0.0;
};

inline std::pair<double, double> probability_centroid(const Wavefunction& psi) {
    const auto& g = psi.grid;
    double wx = 0.0, wy = 0.0, wtot = 0.0;
    for (int iy = 0; iy < g.points_per_axis; ++iy)
        for (int ix = 0; ix < g.points_per_axis; ++ix) {
            const double w = psi.values[g.index(ix, iy)] * psi.values[g.index(ix, iy)];
            wx += w * g.x(ix);
            wy += w * g.y(iy);
            wtot += w;
        }
    if (!(wtot > 0.0)) throw std::invalid_argument("probability_centroid: zero field");
    return {wx / wtot, wy / wtot};
}

/// Angular average of |psi|^2 in equal-width annuli about `center`
/// (default: probability centroid — localized states sit off-center).
inline RadialProfile radial_profile(const Wavefunction& psi,
                                    std::optional<std::pair<double, double>> center = {},
                                    int n_bins = 48) {
    if (n_bins < 8) throw std::invalid_argument("radial_profile: n_bins must be >= 8");
    const auto& g = psi.grid;
    auto [cx, cy] = center ? *center : probability_centroid(psi);
    if (cx < 0.0 || cx > g.side_length || cy < 0.0 || cy > g.side_length)
        throw std::invalid_argument("radial_profile: center outside domain");
    const double r_max = std::hypot(std::max(cx, g.side_length - cx),
                                    std::max(cy, g.side_length - cy));
    RadialProfile prof;
    prof.bin_width = r_max / n_bins;
    prof.center_x = cx;
    prof.center_y = cy;
    prof.r.resize(n_bins);
    prof.mean.assign(n_bins, 0.0);
    prof.count.assign(n_bins, 0);
    for (int k = 0; k < n_bins; ++k) prof.r[k] = (k + 0.5) * prof.bin_width;
    for (int iy = 0; iy < g.points_per_axis; ++iy)
        for (int ix = 0; ix < g.points_per_axis; ++ix) {
            const double r = std::hypot(g.x(ix) - cx, g.y(iy) - cy);
            int k = static_cast<int>(r / prof.bin_width);
            if (k >= n_bins) k = n_bins - 1;
            prof.mean[k] += psi.values[g.index(ix, iy)] * psi.values[g.index(ix, iy)];
            prof.count[k] += 1;
        }
    for (int k = 0; k < n_bins; ++k)
        if (prof.count[k] > 0) prof.mean[k] /= static_cast<double>(prof.count[k]);
    return prof;
}

struct TailWindowPolicy {
    int min_bins = 8;
    double slope_variation = 0.15;  // relative spread of local slopes
    double r2_min = 0.98;
    double density_floor = 1e-30;
    double xi_max = 0.0;            // 0 -> side_length of the profile's grid
};

struct TailFit {
    double xi = 0.0;
    double r_lo = 0.0;
    double r_hi = 0.0;
    double r2 = 0.0;
    double intercept = 0.0;         // ln C at r = 0
};

enum class TailFitFailure { None, TooFewBins, NoQualifyingWindow, NonDecaying };

struct TailFitResult {
    std::optional<TailFit> fit;
    TailFitFailure reason = TailFitFailure::None;
};

namespace detail {

struct LineFit {
    double slope = 0.0, intercept = 0.0, r2 = 0.0;
};

inline LineFit least_squares_line(const std::vector<double>& x, const std::vector<double>& y,
                                  int lo, int hi) {
    const int n = hi - lo + 1;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (int i = lo; i <= hi; ++i) {
        sx += x[i]; sy += y[i]; sxx += x[i] * x[i]; sxy += x[i] * y[i]; syy += y[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    LineFit f;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    const double ss_tot = syy - sy * sy / n;
    double ss_res = 0.0;
    for (int i = lo; i <= hi; ++i) {
        const double d = y[i] - (f.slope * x[i] + f.intercept);
        ss_res += d * d;
    }
    f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

}  // namespace detail

/// Fit ln|psi(r)|^2 = ln C - r / xi on the longest contiguous run of bins
/// whose local slope is uniform, with R^2 above the floor. Slope uniformity
/// compares the least-squares slopes of the two window halves: adjacent-bin
/// differences are far too noisy on real states, while the half-window slopes
/// average the noise but still expose curvature or stitched segments.
/// Replaces a by-eye linear-window choice with an automated one.
inline TailFitResult fit_tail(const RadialProfile& profile, double side_length,
                              const TailWindowPolicy& policy = {}) {
    const double xi_max = policy.xi_max > 0.0 ? policy.xi_max : side_length;
    // Keep only populated bins above the density floor; the window must be
    // contiguous in the original binning.
    std::vector<double> r, lny;
    std::vector<int> bin_of;
    for (std::size_t k = 0; k < profile.r.size(); ++k) {
        if (profile.count[k] > 0 && profile.mean[k] > policy.density_floor) {
            r.push_back(profile.r[k]);
            lny.push_back(std::log(profile.mean[k]));
            bin_of.push_back(static_cast<int>(k));
        }
    }
    const int n = static_cast<int>(r.size());
    if (n < policy.min_bins) return {std::nullopt, TailFitFailure::TooFewBins};

    int best_lo = -1, best_hi = -1;
    detail::LineFit best{};
    for (int lo = 0; lo + policy.min_bins - 1 < n; ++lo) {
        for (int hi = lo + policy.min_bins - 1; hi < n; ++hi) {
            if (bin_of[hi] - bin_of[lo] != hi - lo) break;  // gap in original bins
            const auto f = detail::least_squares_line(r, lny, lo, hi);
            if (f.r2 < policy.r2_min || !(f.slope < 0.0)) continue;
            // Half-window slopes must agree within the policy fraction.
            const int mid = lo + (hi - lo) / 2;
            const double s1 = detail::least_squares_line(r, lny, lo, mid).slope;
            const double s2 = detail::least_squares_line(r, lny, mid, hi).slope;
            if (std::abs(s2 - s1) > policy.slope_variation * std::abs(f.slope)) continue;
            if (-1.0 / f.slope > xi_max) continue;  // max-xi guard (near-flat tail)
            if (hi - lo > best_hi - best_lo ||
                (hi - lo == best_hi - best_lo && f.r2 > best.r2)) {
                best_lo = lo;
                best_hi = hi;
                best = f;
            }
        }
    }
    if (best_lo < 0) return {std::nullopt, TailFitFailure::NoQualifyingWindow};
    TailFit fit;
    fit.xi = -1.0 / best.slope;
    fit.r_lo = r[best_lo];
    fit.r_hi = r[best_hi];
    fit.r2 = best.r2;
    fit.intercept = best.intercept;
    return {fit, TailFitFailure::None};
}

/// IPR2 * 8 pi * xi^2; equals 1 for the idealized exponential envelope
/// |psi(r)|^2 = e^(-r/xi) / (2 pi xi^2).
inline double ipr_xi_consistency(double ipr2, double xi) {
    if (!(ipr2 > 0.0) || !(xi > 0.0))
        throw std::invalid_argument("ipr_xi_consistency: inputs must be positive");
    return ipr2 * 8.0 * M_PI * xi * xi;
}

/// Per-state diagnostic record, one row of the diagnostics table.
struct StateDiagnostics {
    int index = 0;
    double energy = 0.0;
    double e_norm = 0.0;
    double ipr2 = 0.0;
    std::map<int, double> ipr_q;
    double t_exp = 0.0;
    double v_exp = 0.0;
    double tv_ratio = 0.0;
    std::optional<double> lambda_db;
    std::optional<double> xi_tail;
    std::optional<double> tail_fit_quality;
};

inline StateDiagnostics compute_diagnostics(int index, double energy, const Wavefunction& psi,
                                            const ScalarField& v, double e_min, double e_max,
                                            const std::vector<int>& q_list = {2, 3, 4},
                                            const TailWindowPolicy& tail_policy = {}) {
    StateDiagnostics d;
    d.index = index;
    d.energy = energy;
    d.e_norm = normalized_energy(energy, e_min, e_max);
    for (int q : q_list) d.ipr_q[q] = ipr(psi, q);
    d.ipr2 = d.ipr_q.count(2) ? d.ipr_q[2] : ipr(psi, 2);
    d.t_exp = kinetic_expectation(psi);
    d.v_exp = potential_expectation(psi, v);
    d.tv_ratio = d.v_exp != 0.0 ? d.t_exp / d.v_exp : std::numeric_limits<double>::infinity();
    d.lambda_db = de_broglie(energy, d.v_exp);
    const auto prof = radial_profile(psi);
    const auto tail = fit_tail(prof, psi.grid.side_length, tail_policy);
    if (tail.fit) {
        d.xi_tail = tail.fit->xi;
        d.tail_fit_quality = tail.fit->r2;
    }
    return d;
}

}  // namespace lattlab
