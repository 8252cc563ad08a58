#include "lattlab/potential.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

using namespace lattlab;

namespace {
const FermiParams kDefaults{};  // r0=0.8, d=0.03, V0=20, a=2
}

TEST_CASE("fermi well profile: plateau, half point, far field") {
    // Frozen from a 50-digit evaluation: f(0) = 20.0 to >= 12 significant
    // digits (coth(r0/2d) - 1 ~ 2e-12 at r0/d = 26.67), f(r0)/f(0) = 1/2 to
    // ~2.6e-12 relative.
    CHECK(fermi_well_value(kDefaults, 0.0) == Catch::Approx(20.0).epsilon(1e-9));
    CHECK(fermi_well_value(kDefaults, kDefaults.r0) ==
          Catch::Approx(0.5 * fermi_well_value(kDefaults, 0.0)).epsilon(1e-6));
    CHECK(fermi_well_value(kDefaults, 50.0) == Catch::Approx(0.0).margin(1e-200));
    CHECK(fermi_well_value(kDefaults, 1e6) == 0.0);  // overflow-safe far field
}

TEST_CASE("fermi well profile matches the direct formula where it is safe") {
    FermiParams p;
    p.r0 = 0.5;
    p.d = 0.1;  // r0/d = 5, well inside the direct-evaluation regime
    for (double r : {0.0, 0.2, 0.5, 1.0, 2.5}) {
        const double direct = p.V0 * (1.0 / std::tanh(p.r0 / (2 * p.d))) *
                              std::sinh(p.r0 / p.d) /
                              (std::cosh(r / p.d) + std::cosh(p.r0 / p.d));
        CHECK(fermi_well_value(p, r) == Catch::Approx(direct).epsilon(1e-14));
    }
}

TEST_CASE("fermi well rejects bad inputs") {
    CHECK_THROWS_AS(fermi_well_value(kDefaults, -1.0), std::invalid_argument);
    FermiParams bad;
    bad.d = 0.0;
    CHECK_THROWS_AS(fermi_well_value(bad, 1.0), std::invalid_argument);
}

TEST_CASE("lattice potential: well bottoms near 0, barriers near V0") {
    FermiParams p = kDefaults;
    p.L = 3;
    const auto g = make_grid(p.side_length(), 299);
    const auto v = build_lattice_potential(p, g);

    auto value_at = [&](double x, double y) {
        // closest grid point
        const int ix = static_cast<int>(std::lround(x / g.spacing - 1.0));
        const int iy = static_cast<int>(std::lround(y / g.spacing - 1.0));
        return v.values[g.index(ix, iy)];
    };
    // Exactly at a well center the sum is one on-center profile (= V0 to
    // ~1e-12) plus exponentially small neighbor tails.
    CHECK(value_at(3.0, 3.0) == Catch::Approx(0.0).margin(1e-3));
    // Cell corner: all wells at distance >= sqrt(2) * a/2 = 1.414.
    CHECK(value_at(2.0, 2.0) == Catch::Approx(p.V0).margin(1e-3));
    CHECK_THROWS_AS(build_lattice_potential(p, make_grid(5.0, 64)), std::invalid_argument);
}

TEST_CASE("single-well potential has 4-fold dihedral symmetry") {
    FermiParams p = kDefaults;
    p.L = 1;
    const int n = 65;  // odd so the well center is a grid point
    const auto g = make_grid(p.a, n);
    const auto v = build_lattice_potential(p, g);
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix <= iy; ++ix) {
            const double val = v.values[g.index(ix, iy)];
            REQUIRE(v.values[g.index(iy, ix)] == Catch::Approx(val).margin(1e-12));
            REQUIRE(v.values[g.index(n - 1 - ix, iy)] == Catch::Approx(val).margin(1e-12));
        }
}

TEST_CASE("disorder sampling: deterministic count and seed reproducibility") {
    const auto r = sample_disorder(0.4, 6.0, 0.2, 77, 10.0);
    CHECK(r.bumps.size() == 40);  // round(0.4 * 100)
    const auto r2 = sample_disorder(0.4, 6.0, 0.2, 77, 10.0);
    REQUIRE(r2.bumps.size() == r.bumps.size());
    for (std::size_t i = 0; i < r.bumps.size(); ++i) {
        CHECK(r.bumps[i].x == r2.bumps[i].x);
        CHECK(r.bumps[i].y == r2.bumps[i].y);
        CHECK(r.bumps[i].amplitude == r2.bumps[i].amplitude);
        CHECK(r.bumps[i].width == r2.bumps[i].width);
    }
    for (const auto& b : r.bumps) {
        CHECK(b.x > 0.0);
        CHECK(b.x < 10.0);
        CHECK(b.amplitude >= 0.0);
        CHECK(b.amplitude <= 12.0);
        CHECK(b.width == 0.2);
    }
}

TEST_CASE("empty disorder renders to an identically zero field") {
    const auto r = sample_disorder(0.0, 6.0, 0.2, 1, 10.0);
    CHECK(r.bumps.empty());
    const auto g = make_grid(10.0, 64);
    const auto v = render_disorder(r, g);
    CHECK(v.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ensemble amplitude mean converges to <A>") {
    const double amp_mean = 6.0;
    const auto r = sample_disorder(100.0, amp_mean, 0.2, 31, 10.0);  // 1e4 bumps
    REQUIRE(r.bumps.size() == 10000);
    double sum = 0.0, sum2 = 0.0;
    for (const auto& b : r.bumps) {
        sum += b.amplitude;
        sum2 += b.amplitude * b.amplitude;
    }
    const double mean = sum / 1e4;
    const double se = std::sqrt((sum2 / 1e4 - mean * mean) / 1e4);
    CHECK(std::abs(mean - amp_mean) < 3.0 * se);
}

TEST_CASE("render_disorder: on-center value, sigma falloff, linearity") {
    const auto g = make_grid(10.0, 99);
    // Place the bump on an exact grid point.
    const double bx = g.x(49), by = g.y(49);
    DisorderRealization r;
    r.side_length = 10.0;
    r.bumps.push_back({bx, by, 1.0, 0.2});
    const auto v = render_disorder(r, g);
    CHECK(v.values[g.index(49, 49)] == Catch::Approx(1.0).margin(1e-8));
    // Value at distance sigma: the grid spacing is 0.1, so (51,49) sits at
    // exactly 2 spacings = 0.2 = sigma from the bump.
    CHECK(v.values[g.index(51, 49)] == Catch::Approx(std::exp(-0.5)).epsilon(1e-10));

    DisorderRealization rr = r;
    rr.bumps.push_back(r.bumps[0]);
    const auto v2 = render_disorder(rr, g);
    CHECK((v2.values - 2.0 * v.values).cwiseAbs().maxCoeff() == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("total_potential is a pointwise sum with grid checking") {
    const auto g = make_grid(4.0, 32);
    ScalarField a(g), b(g);
    a.values.setConstant(3.0);
    const auto s = total_potential(a, b);
    CHECK((s.values - a.values).norm() == 0.0);
    b.values.setConstant(1.5);
    CHECK(total_potential(a, b).values[0] == Catch::Approx(4.5));
    ScalarField c(make_grid(4.0, 33));
    CHECK_THROWS_AS(total_potential(a, c), std::invalid_argument);
}

TEST_CASE("bump inside a well adds on top of the well value") {
    FermiParams p = kDefaults;
    p.L = 1;
    const int n = 65;
    const auto g = make_grid(p.a, n);
    const auto v_ext = build_lattice_potential(p, g);
    const double cx = g.x(32), cy = g.y(32);
    DisorderRealization r;
    r.side_length = p.a;
    r.bumps.push_back({cx, cy, 2.5, 0.2});
    const auto v = total_potential(v_ext, render_disorder(r, g));
    CHECK(v.values[g.index(32, 32)] ==
          Catch::Approx(v_ext.values[g.index(32, 32)] + 2.5).margin(1e-8));
}

TEST_CASE("clean lattice is periodic cell to cell") {
    FermiParams p = kDefaults;
    p.L = 4;
    // 50 points per cell period -> cells are congruent point sets.
    const int per_cell = 50;
    const auto g = make_grid(p.side_length(), p.L * per_cell - 1);
    const auto v = build_lattice_potential(p, g);
    // Compare the two interior cells (indices offset by one period).
    double max_diff = 0.0;
    for (int iy = per_cell; iy < 2 * per_cell; ++iy)
        for (int ix = per_cell; ix < 2 * per_cell; ++ix)
            max_diff = std::max(max_diff,
                                std::abs(v.values[g.index(ix, iy)] -
                                         v.values[g.index(ix + per_cell, iy + per_cell)]));
    CHECK(max_diff < 1e-8);
}

TEST_CASE("disorder realizations round-trip through the text format") {
    namespace fs = std::filesystem;
    const auto r = sample_disorder(0.4, 6.0, 0.2, 123, 6.0);
    const auto path = (fs::temp_directory_path() / "lattlab_disorder_test.txt").string();
    write_disorder(path, r);
    const auto back = read_disorder(path);
    REQUIRE(back.bumps.size() == r.bumps.size());
    CHECK(back.seed == r.seed);
    CHECK(back.density == r.density);
    for (std::size_t i = 0; i < r.bumps.size(); ++i) {
        CHECK(back.bumps[i].x == r.bumps[i].x);
        CHECK(back.bumps[i].y == r.bumps[i].y);
        CHECK(back.bumps[i].amplitude == r.bumps[i].amplitude);
        CHECK(back.bumps[i].width == r.bumps[i].width);
    }
    fs::remove(path);
}

TEST_CASE("amplitude distribution alternatives") {
    const auto c = sample_disorder(1.0, 3.0, 0.2, 5, 5.0, AmplitudeDist::Constant);
    for (const auto& b : c.bumps) CHECK(b.amplitude == 3.0);
    const auto hn = sample_disorder(20.0, 3.0, 0.2, 5, 10.0, AmplitudeDist::HalfNormal);
    double mean = 0.0;
    for (const auto& b : hn.bumps) {
        CHECK(b.amplitude >= 0.0);
        mean += b.amplitude;
    }
    mean /= static_cast<double>(hn.bumps.size());
    CHECK(mean == Catch::Approx(3.0).epsilon(0.1));
}
