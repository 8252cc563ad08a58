#pragma once

#include "lattlab/observables.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lattlab {

struct ScalingFit {
    int q = 2;
    double slope = 0.0;     // d log IPR_q / d log L
    double dim_est = 0.0;   // D_q = -slope / (q - 1)
    double stderr_slope = 0.0;
    std::string class_filter;
};

/// Least-squares line on (log L, log IPR_q); D_q = -slope/(q-1).
inline ScalingFit fit_fractal_dimension(const std::vector<std::pair<double, double>>& points,
                                        int q) {
    if (points.size() < 3)
        throw std::invalid_argument("fit_fractal_dimension: need at least 3 sizes");
    if (q < 2) throw std::invalid_argument("fit_fractal_dimension: q must be >= 2");
    const int n = static_cast<int>(points.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [L, v] : points) {
        if (!(L > 0.0) || !(v > 0.0))
            throw std::invalid_argument("fit_fractal_dimension: sizes and values must be positive");
        const double x = std::log(L), y = std::log(v);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    if (!(denom > 0.0))
        throw std::invalid_argument("fit_fractal_dimension: sizes must be distinct");
    ScalingFit f;
    f.q = q;
    f.slope = (n * sxy - sx * sy) / denom;
    f.dim_est = -f.slope / (q - 1);
    double ss_res = 0.0;
    const double intercept = (sy - f.slope * sx) / n;
    for (const auto& [L, v] : points) {
        const double d = std::log(v) - (f.slope * std::log(L) + intercept);
        ss_res += d * d;
    }
    if (n > 2) f.stderr_slope = std::sqrt(ss_res / (n - 2) / (sxx - sx * sx / n));
    return f;
}

/// 1 - lambda_min/lambda_max of the second-moment (inertia) tensor of
/// |psi|^2: zero for isotropic densities, near one for quasi-1D channels.
inline double density_anisotropy(const Wavefunction& psi) {
    const auto& g = psi.grid;
    auto [cx, cy] = probability_centroid(psi);
    double mxx = 0, myy = 0, mxy = 0, w = 0;
    for (int iy = 0; iy < g.points_per_axis; ++iy)
        for (int ix = 0; ix < g.points_per_axis; ++ix) {
            const double p = psi.values[g.index(ix, iy)] * psi.values[g.index(ix, iy)];
            const double dx = g.x(ix) - cx, dy = g.y(iy) - cy;
            mxx += p * dx * dx;
            myy += p * dy * dy;
            mxy += p * dx * dy;
            w += p;
        }
    mxx /= w; myy /= w; mxy /= w;
    const double tr = mxx + myy;
    const double disc = std::sqrt(std::max(0.0, (mxx - myy) * (mxx - myy) + 4.0 * mxy * mxy));
    const double lmax = 0.5 * (tr + disc), lmin = 0.5 * (tr - disc);
    if (!(lmax > 0.0)) return 0.0;
    return 1.0 - lmin / lmax;
}

/// Clean-system percentile curve of tv_ratio vs normalized energy, used as
/// the scar-score baseline.
struct CleanBaseline {
    std::vector<double> e_norm_edges;  // n_bins + 1 edges on [0,1]
    std::vector<double> p90;           // 90th percentile per bin
    double global_p90 = 0.0;

    double p90_at(double e_norm) const {
        if (e_norm_edges.size() < 2) return global_p90;
        const int n_bins = static_cast<int>(p90.size());
        int k = static_cast<int>(e_norm * n_bins);
        k = std::clamp(k, 0, n_bins - 1);
        return std::isnan(p90[static_cast<std::size_t>(k)]) ? global_p90
                                                            : p90[static_cast<std::size_t>(k)];
    }
};

inline double percentile(std::vector<double> v, double p) {
    if (v.empty()) throw std::invalid_argument("percentile: empty input");
    std::sort(v.begin(), v.end());
    const double pos = p * (static_cast<double>(v.size()) - 1.0);
    const auto lo = static_cast<std::size_t>(pos);
    const auto hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

inline CleanBaseline make_clean_baseline(const std::vector<StateDiagnostics>& clean_diags,
                                         int n_bins = 20) {
    CleanBaseline b;
    b.e_norm_edges.resize(n_bins + 1);
    for (int k = 0; k <= n_bins; ++k) b.e_norm_edges[k] = static_cast<double>(k) / n_bins;
    std::vector<std::vector<double>> groups(n_bins);
    std::vector<double> all;
    for (const auto& d : clean_diags) {
        int k = std::clamp(static_cast<int>(d.e_norm * n_bins), 0, n_bins - 1);
        groups[static_cast<std::size_t>(k)].push_back(d.tv_ratio);
        all.push_back(d.tv_ratio);
    }
    b.global_p90 = percentile(all, 0.90);
    b.p90.assign(n_bins, std::nan(""));
    for (int k = 0; k < n_bins; ++k)
        if (!groups[static_cast<std::size_t>(k)].empty())
            b.p90[static_cast<std::size_t>(k)] = percentile(groups[static_cast<std::size_t>(k)], 0.90);
    return b;
}

struct ScarScoreBreakdown {
    double tv_excess = 0.0;
    double anisotropy = 0.0;
    double score = 0.0;
};

/// score = w1 * max(0, tv_ratio - clean 90th percentile at the same e_norm)
///       + w2 * anisotropy.
inline ScarScoreBreakdown scar_score(const Wavefunction& psi, const StateDiagnostics& diag,
                                     const CleanBaseline& baseline,
                                     double w1 = 0.5, double w2 = 0.5) {
    if (baseline.p90.empty())
        throw std::invalid_argument("scar_score: missing clean baseline");
    ScarScoreBreakdown s;
    s.tv_excess = std::max(0.0, diag.tv_ratio - baseline.p90_at(diag.e_norm));
    s.anisotropy = density_anisotropy(psi);
    s.score = w1 * s.tv_excess + w2 * s.anisotropy;
    return s;
}

enum class StateLabel { Anderson, Delocalized, Scarred, Ambiguous };

inline const char* to_string(StateLabel l) {
    switch (l) {
        case StateLabel::Anderson: return "anderson";
        case StateLabel::Delocalized: return "delocalized";
        case StateLabel::Scarred: return "scarred";
        case StateLabel::Ambiguous: return "ambiguous";
    }
    return "?";
}

struct StateClass {
    StateLabel label = StateLabel::Ambiguous;
    bool tail_ok = false;
    double ipr_band = 0.0;   // ipr2 * side^2, 1 for a uniform state
    double scar_score = 0.0;
};

struct ClassifyThresholds {
    double consistency_lo = 0.5;
    double consistency_hi = 2.0;
    double xi_max_fraction = 1.0 / 3.0;     // xi_tail < side/3
    double scar_score_min = 0.5;
    double deloc_ipr_band = 3.0;            // ipr2 < 3 / side^2
};

/// Decision rule: anderson, then scarred, then delocalized, else ambiguous.
/// Every state receives exactly one label; scores are kept for audit.
inline StateClass classify_state(const StateDiagnostics& diag, double side_length,
                                 double scar_score_value,
                                 const ClassifyThresholds& th = {}) {
    StateClass c;
    c.scar_score = scar_score_value;
    c.ipr_band = diag.ipr2 * side_length * side_length;
    if (diag.xi_tail && diag.tail_fit_quality) {
        const double ratio = ipr_xi_consistency(diag.ipr2, *diag.xi_tail);
        c.tail_ok = ratio >= th.consistency_lo && ratio <= th.consistency_hi &&
                    *diag.xi_tail < th.xi_max_fraction * side_length;
    }
    if (c.tail_ok)
        c.label = StateLabel::Anderson;
    else if (scar_score_value > th.scar_score_min)
        c.label = StateLabel::Scarred;
    else if (c.ipr_band < th.deloc_ipr_band)
        c.label = StateLabel::Delocalized;
    else
        c.label = StateLabel::Ambiguous;
    return c;
}

/// Scar-eligible energy window: true when the de Broglie wavelength is
/// strictly shorter than the lattice period.
inline bool wavelength_gate(double e, double v_mean, double a) {
    const auto lambda = de_broglie(e, v_mean);
    return lambda.has_value() && *lambda < a;
}

}  // namespace lattlab
