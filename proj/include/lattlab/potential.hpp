#pragma once

#include "lattlab/grid.hpp"
#include "lattlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lattlab {

/// Symmetrized Fermi well: radius r0, edge steepness d, depth V0,
/// arranged with lattice period a, L wells per axis.
struct FermiParams {
    double r0 = 0.8;
    double d = 0.03;
    double V0 = 20.0;
    double a = 2.0;
    int L = 5;

    void validate() const {
        if (!(r0 > 0.0) || !(d > 0.0) || !(V0 > 0.0) || !(a > 0.0) || L < 1)
            throw std::invalid_argument("FermiParams: need r0,d,V0,a > 0 and L >= 1");
    }
    double side_length() const { return a * L; }
};

/// V0 * coth(r0/2d) * sinh(r0/d) / (cosh(r/d) + cosh(r0/d)).
/// cosh overflows f64 near an argument of 710; for large r0/d or r/d the
/// ratio is evaluated with the dominant exponential factored out so every
/// remaining exponent is <= 0.
inline double fermi_well_value(const FermiParams& p, double r) {
    p.validate();
    if (!(r >= 0.0)) throw std::invalid_argument("fermi_well_value: r must be >= 0");
    const double alpha = p.r0 / p.d;
    const double beta = r / p.d;
    // coth(alpha/2) = (1 + e^{-alpha}) / (1 - e^{-alpha}), safe for alpha > 0.
    const double ea = std::exp(-alpha);
    const double coth_half = (1.0 + ea) / (1.0 - ea);
    if (alpha < 30.0 && beta < 30.0) {
        return p.V0 * coth_half * std::sinh(alpha) / (std::cosh(beta) + std::cosh(alpha));
    }
    const double m = std::max(alpha, beta);
    const double num = std::exp(alpha - m) - std::exp(-alpha - m);
    const double den = std::exp(beta - m) + std::exp(-beta - m) +
                       std::exp(alpha - m) + std::exp(-alpha - m);
    return p.V0 * coth_half * 0.5 * num / (0.5 * den);
}

/// Clean lattice potential: wells are dips of depth V0 below a barrier
/// plateau at V0, centered at ((i+1/2)a, (j+1/2)a).
inline ScalarField build_lattice_potential(const FermiParams& p, const Grid2D& grid) {
    p.validate();
    if (std::abs(grid.side_length - p.side_length()) > 1e-12 * p.side_length())
        throw std::invalid_argument("build_lattice_potential: grid side must equal a*L");
    ScalarField v(grid);
    // The profile decays like exp(-(r-r0)/d); beyond r_cut a well contributes
    // less than ~1e-16 * V0.
    const double r_cut = p.r0 + 40.0 * p.d;
    const int n = grid.points_per_axis;
    for (int iy = 0; iy < n; ++iy) {
        const double y = grid.y(iy);
        for (int ix = 0; ix < n; ++ix) {
            const double x = grid.x(ix);
            double sum = 0.0;
            const int j_lo = std::max(0, static_cast<int>(std::floor((y - r_cut) / p.a - 0.5)));
            const int j_hi = std::min(p.L - 1, static_cast<int>(std::ceil((y + r_cut) / p.a - 0.5)));
            const int i_lo = std::max(0, static_cast<int>(std::floor((x - r_cut) / p.a - 0.5)));
            const int i_hi = std::min(p.L - 1, static_cast<int>(std::ceil((x + r_cut) / p.a - 0.5)));
            for (int j = j_lo; j <= j_hi; ++j) {
                const double cy = (j + 0.5) * p.a;
                for (int i = i_lo; i <= i_hi; ++i) {
                    const double cx = (i + 0.5) * p.a;
                    const double r = std::hypot(x - cx, y - cy);
                    if (r <= r_cut) sum += fermi_well_value(p, r);
                }
            }
            v.values[grid.index(ix, iy)] = p.V0 - sum;
        }
    }
    return v;
}

struct GaussianBump {
    double x = 0.0;
    double y = 0.0;
    double amplitude = 0.0;
    double width = 0.0;
};

enum class AmplitudeDist { Uniform, Constant, HalfNormal };
enum class WidthDist { Constant, Uniform };

inline AmplitudeDist amplitude_dist_from_string(const std::string& s) {
    if (s == "uniform") return AmplitudeDist::Uniform;
    if (s == "constant") return AmplitudeDist::Constant;
    if (s == "half_normal") return AmplitudeDist::HalfNormal;
    throw std::invalid_argument("unknown amplitude distribution: " + s);
}

inline WidthDist width_dist_from_string(const std::string& s) {
    if (s == "constant") return WidthDist::Constant;
    if (s == "uniform") return WidthDist::Uniform;
    throw std::invalid_argument("unknown width distribution: " + s);
}

/// One seeded disorder realization: bump count is round(rho * side^2),
/// so ensemble variance comes only from positions and amplitudes.
struct DisorderRealization {
    std::vector<GaussianBump> bumps;
    std::uint64_t seed = 0;
    double density = 0.0;
    double amp_mean = 0.0;
    double width_mean = 0.0;
    double side_length = 0.0;
};

inline DisorderRealization sample_disorder(double density, double amp_mean, double width,
                                           std::uint64_t seed, double side_length,
                                           AmplitudeDist amp_dist = AmplitudeDist::Uniform,
                                           WidthDist width_dist = WidthDist::Constant) {
    if (density < 0.0 || amp_mean < 0.0 || !(width > 0.0) || !(side_length > 0.0))
        throw std::invalid_argument("sample_disorder: need rho,amp >= 0 and sigma,side > 0");
    DisorderRealization real;
    real.seed = seed;
    real.density = density;
    real.amp_mean = amp_mean;
    real.width_mean = width;
    real.side_length = side_length;
    const auto count = static_cast<std::size_t>(
        std::llround(density * side_length * side_length));
    Rng rng(seed);
    real.bumps.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        GaussianBump b;
        b.x = rng.uniform_open() * side_length;
        b.y = rng.uniform_open() * side_length;
        switch (amp_dist) {
            case AmplitudeDist::Uniform: b.amplitude = rng.uniform(0.0, 2.0 * amp_mean); break;
            case AmplitudeDist::Constant: b.amplitude = amp_mean; break;
            case AmplitudeDist::HalfNormal:
                // E|N(0,s)| = s*sqrt(2/pi); s chosen so the mean is amp_mean.
                b.amplitude = std::abs(rng.normal()) * amp_mean * std::sqrt(M_PI / 2.0);
                break;
        }
        switch (width_dist) {
            case WidthDist::Constant: b.width = width; break;
            case WidthDist::Uniform: b.width = rng.uniform(0.5 * width, 1.5 * width); break;
        }
        real.bumps.push_back(b);
    }
    return real;
}

/// V_imp(r) = sum_i A_i exp(-|r-r_i|^2 / (2 sigma_i^2)), each bump truncated
/// at 6 sigma (relative error < 1e-8).
inline ScalarField render_disorder(const DisorderRealization& real, const Grid2D& grid) {
    if (std::abs(real.side_length - grid.side_length) > 1e-12 * grid.side_length)
        throw std::invalid_argument("render_disorder: realization domain does not match grid");
    ScalarField v(grid);
    const int n = grid.points_per_axis;
    const double h = grid.spacing;
    for (const auto& b : real.bumps) {
        const double r_cut = 6.0 * b.width;
        const double inv2s2 = 1.0 / (2.0 * b.width * b.width);
        const int ix_lo = std::max(0, static_cast<int>(std::ceil((b.x - r_cut) / h - 1.0)));
        const int ix_hi = std::min(n - 1, static_cast<int>(std::floor((b.x + r_cut) / h - 1.0)));
        const int iy_lo = std::max(0, static_cast<int>(std::ceil((b.y - r_cut) / h - 1.0)));
        const int iy_hi = std::min(n - 1, static_cast<int>(std::floor((b.y + r_cut) / h - 1.0)));
        const double cut2 = r_cut * r_cut;
        for (int iy = iy_lo; iy <= iy_hi; ++iy) {
            const double dy = grid.y(iy) - b.y;
            for (int ix = ix_lo; ix <= ix_hi; ++ix) {
                const double dx = grid.x(ix) - b.x;
                const double r2 = dx * dx + dy * dy;
                if (r2 <= cut2)
                    v.values[grid.index(ix, iy)] += b.amplitude * std::exp(-r2 * inv2s2);
            }
        }
    }
    return v;
}

inline ScalarField total_potential(const ScalarField& v_ext, const ScalarField& v_imp) {
    require_same_grid(v_ext.grid, v_imp.grid, "total_potential");
    ScalarField out = v_ext;
    out.values += v_imp.values;
    return out;
}

// ---------------------------------------------------------------------------
// Line-oriented text serialization of a realization: header comment with the
// sampling parameters, then one "x y A sigma" row per bump.
// ---------------------------------------------------------------------------

inline void write_disorder(const std::string& path, const DisorderRealization& r) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_disorder: cannot open " + path);
    char buf[256];
    std::snprintf(buf, sizeof buf, "# seed=%llu rho=%.17g amp_mean=%.17g sigma=%.17g side=%.17g\n",
                  static_cast<unsigned long long>(r.seed), r.density, r.amp_mean,
                  r.width_mean, r.side_length);
    out << buf;
    for (const auto& b : r.bumps) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g\n",
                      b.x, b.y, b.amplitude, b.width);
        out << buf;
    }
}

inline DisorderRealization read_disorder(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_disorder: cannot open " + path);
    DisorderRealization r;
    std::string line;
    if (!std::getline(in, line) || line.rfind("# seed=", 0) != 0)
        throw std::runtime_error("read_disorder: missing header in " + path);
    unsigned long long seed = 0;
    if (std::sscanf(line.c_str(), "# seed=%llu rho=%lg amp_mean=%lg sigma=%lg side=%lg",
                    &seed, &r.density, &r.amp_mean, &r.width_mean, &r.side_length) != 5)
        throw std::runtime_error("read_disorder: malformed header in " + path);
    r.seed = seed;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        GaussianBump b;
        if (std::sscanf(line.c_str(), "%lg %lg %lg %lg", &b.x, &b.y, &b.amplitude, &b.width) != 4)
            throw std::runtime_error("read_disorder: malformed row in " + path);
        r.bumps.push_back(b);
    }
    return r;
}

}  // namespace lattlab
