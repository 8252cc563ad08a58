#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace lattlab {

enum class ReferenceEnsemble { Poisson, Goe };

/// Unfolding-free spacing-ratio statistics over a spectral window.
struct SpectrumStats {
    std::vector<double> ratios;      // s_n = delta_n / delta_{n-1}
    std::vector<double> sym_ratios;  // min(s, 1/s) in (0,1]
    double mean_sym = 0.0;
    std::vector<double> hist_centers;
    std::vector<double> hist_density;
    double retained_fraction = 1.0;  // histogram mass inside [0, s_max]
    int window_lo = 0;
    int window_hi = 0;
    int n_dropped = 0;
};

struct SpacingRatios {
    std::vector<double> ratios;
    int n_dropped = 0;
};

/// Ratios of consecutive spacings; spacings below eps_deg (relative to the
/// spectral span) are treated as degeneracies and dropped from denominators.
inline SpacingRatios spacing_ratios(const std::vector<double>& energies) {
    if (energies.size() < 3)
        throw std::invalid_argument("spacing_ratios: need at least 3 levels");
    for (std::size_t i = 1; i < energies.size(); ++i)
        if (energies[i] < energies[i - 1])
            throw std::invalid_argument("spacing_ratios: energies must be sorted ascending");
    const double span = energies.back() - energies.front();
    const double eps_deg = 1e-12 * span;
    SpacingRatios out;
    out.ratios.reserve(energies.size() - 2);
    for (std::size_t n = 1; n + 1 < energies.size(); ++n) {
        const double prev = energies[n] - energies[n - 1];
        const double next = energies[n + 1] - energies[n];
        if (prev <= eps_deg) {
            ++out.n_dropped;
            continue;
        }
        out.ratios.push_back(next / prev);
    }
    return out;
}

inline double symmetrized_ratio(double s) { return s <= 1.0 ? s : 1.0 / s; }

inline double symmetrized_mean(const std::vector<double>& ratios) {
    if (ratios.empty()) throw std::invalid_argument("symmetrized_mean: empty input");
    double sum = 0.0;
    for (double s : ratios) sum += symmetrized_ratio(s);
    return sum / static_cast<double>(ratios.size());
}

/// Exact spacing-ratio densities: Poisson 1/(1+s)^2 and the GOE Wigner-like
/// surmise (27/8) (s+s^2) / (1+s+s^2)^(5/2).
inline double reference_pdf(ReferenceEnsemble kind, double s) {
    if (!(s >= 0.0)) throw std::invalid_argument("reference_pdf: s must be >= 0");
    if (kind == ReferenceEnsemble::Poisson) {
        const double u = 1.0 + s;
        return 1.0 / (u * u);
    }
    const double u = 1.0 + s + s * s;
    return (27.0 / 8.0) * (s + s * s) / (u * u * std::sqrt(u));
}

/// CDF of the reference densities on [0, s]; both are closed form. For the
/// GOE surmise, substituting u = s + 1/2 gives the antiderivative
/// (27/8) u (4u^2 - 9) / (27 (u^2 + 3/4)^{3/2}), which vanishes at s = 0
/// after adding the constant 4/27 and tends to 1 as s -> infinity.
inline double reference_cdf(ReferenceEnsemble kind, double s) {
    if (!(s >= 0.0)) throw std::invalid_argument("reference_cdf: s must be >= 0");
    if (kind == ReferenceEnsemble::Poisson) return s / (1.0 + s);
    const double u = s + 0.5;
    const double g = u * (4.0 * u * u - 9.0) / (27.0 * std::pow(u * u + 0.75, 1.5));
    return (27.0 / 8.0) * (g + 4.0 / 27.0);
}

struct Histogram {
    std::vector<double> centers;
    std::vector<double> density;
    double bin_width = 0.0;
    double retained_fraction = 1.0;
    std::size_t n_total = 0;
};

/// Normalized histogram on [0, s_max]: sum(density * bin_width) equals the
/// fraction of samples inside the range; overflow mass is reported separately.
inline Histogram empirical_pdf(const std::vector<double>& values, int n_bins, double s_max) {
    if (values.empty()) throw std::invalid_argument("empirical_pdf: empty input");
    if (n_bins < 1 || !(s_max > 0.0))
        throw std::invalid_argument("empirical_pdf: need n_bins >= 1 and s_max > 0");
    Histogram h;
    h.bin_width = s_max / n_bins;
    h.n_total = values.size();
    h.centers.resize(n_bins);
    h.density.assign(n_bins, 0.0);
    for (int k = 0; k < n_bins; ++k) h.centers[k] = (k + 0.5) * h.bin_width;
    std::size_t inside = 0;
    for (double v : values) {
        if (v < 0.0 || v >= s_max) continue;
        ++inside;
        h.density[static_cast<std::size_t>(v / h.bin_width)] += 1.0;
    }
    h.retained_fraction = static_cast<double>(inside) / static_cast<double>(values.size());
    const double norm = 1.0 / (static_cast<double>(values.size()) * h.bin_width);
    for (auto& d : h.density) d *= norm;
    return h;
}

/// Total-variation distance between the empirical histogram and the
/// bin-integrated reference, including the tail mass beyond s_max.
inline double distribution_distance(const Histogram& h, ReferenceEnsemble kind) {
    double tv = 0.0;
    double prev_cdf = 0.0;
    for (std::size_t k = 0; k < h.centers.size(); ++k) {
        const double hi = (static_cast<double>(k) + 1.0) * h.bin_width;
        const double cdf = reference_cdf(kind, hi);
        const double ref_mass = cdf - prev_cdf;
        prev_cdf = cdf;
        tv += std::abs(h.density[k] * h.bin_width - ref_mass);
    }
    const double tail_emp = 1.0 - h.retained_fraction;
    const double tail_ref = 1.0 - prev_cdf;
    tv += std::abs(tail_emp - tail_ref);
    return 0.5 * tv;
}

/// Full windowed statistics for a spectrum slice [window_lo, window_hi].
inline SpectrumStats spectrum_stats(const std::vector<double>& energies,
                                    int window_lo, int window_hi,
                                    int n_bins = 40, double s_max = 5.0) {
    if (window_lo < 0 || window_hi >= static_cast<int>(energies.size()) ||
        window_hi - window_lo + 1 < 3)
        throw std::invalid_argument("spectrum_stats: window must contain >= 3 levels");
    std::vector<double> slice(energies.begin() + window_lo,
                              energies.begin() + window_hi + 1);
    const auto sr = spacing_ratios(slice);
    if (sr.ratios.empty()) throw std::invalid_argument("spectrum_stats: all spacings degenerate");
    SpectrumStats st;
    st.ratios = sr.ratios;
    st.n_dropped = sr.n_dropped;
    st.window_lo = window_lo;
    st.window_hi = window_hi;
    st.sym_ratios.reserve(sr.ratios.size());
    for (double s : sr.ratios) st.sym_ratios.push_back(symmetrized_ratio(s));
    st.mean_sym = symmetrized_mean(sr.ratios);
    const auto h = empirical_pdf(sr.ratios, n_bins, s_max);
    st.hist_centers = h.centers;
    st.hist_density = h.density;
    st.retained_fraction = h.retained_fraction;
    return st;
}

}  // namespace lattlab
