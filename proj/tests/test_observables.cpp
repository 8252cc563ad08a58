#include "lattlab/observables.hpp"
#include "lattlab/potential.hpp"
#include "lattlab/eigensolver.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace lattlab;

namespace {

Wavefunction analytic_box_ground(const Grid2D& g) {
    Wavefunction psi(g);
    const double W = g.side_length;
    for (int iy = 0; iy < g.points_per_axis; ++iy)
        for (int ix = 0; ix < g.points_per_axis; ++ix)
            psi.values[g.index(ix, iy)] =
                (2.0 / W) * std::sin(M_PI * g.x(ix) / W) * std::sin(M_PI * g.y(iy) / W);
    return psi;
}

/// |psi(r)|^2 = e^(-r/xi) / (2 pi xi^2) about the domain center, then
/// renormalized on the grid.
Wavefunction exponential_state(const Grid2D& g, double xi) {
    Wavefunction psi(g);
    const double c = 0.5 * g.side_length;
    for (int iy = 0; iy < g.points_per_axis; ++iy)
        for (int ix = 0; ix < g.points_per_axis; ++ix) {
            const double r = std::hypot(g.x(ix) - c, g.y(iy) - c);
            psi.values[g.index(ix, iy)] =
                std::exp(-0.5 * r / xi) / std::sqrt(2.0 * M_PI * xi * xi);
        }
    return normalize(psi);
}

Wavefunction uniform_state(const Grid2D& g) {
    Wavefunction psi(g);
    psi.values.setConstant(1.0);
    return normalize(psi);
}

}  // namespace

TEST_CASE("IPR of a uniform state is the inverse covered area") {
    const auto g = make_grid(5.0, 64);
    const auto psi = uniform_state(g);
    const double covered = std::pow(64 * g.spacing, 2);
    CHECK(ipr(psi, 2) == Catch::Approx(1.0 / covered).epsilon(1e-12));
    CHECK(ipr(psi, 3) == Catch::Approx(1.0 / (covered * covered)).epsilon(1e-12));
    CHECK_THROWS_AS(ipr(psi, 1), std::invalid_argument);
}

TEST_CASE("IPR of the analytic box ground state") {
    const double W = 10.0;
    const auto g = make_grid(W, 256);
    const auto psi = analytic_box_ground(g);
    // integral of sin^4 over a period gives IPR2 = (3/2W)^2, IPR3 = (5W/16)^2 (2/W)^6.
    CHECK(ipr(psi, 2) == Catch::Approx(9.0 / (4.0 * W * W)).epsilon(0.005));
    CHECK(ipr(psi, 3) == Catch::Approx(25.0 / (4.0 * W * W * W * W)).epsilon(0.005));
}

TEST_CASE("IPR obeys the Holder bound IPR_{q+1} <= max|psi|^2 IPR_q") {
    const auto g = make_grid(4.0, 48);
    Wavefunction psi(g);
    Rng rng(5);
    for (int i = 0; i < g.num_points(); ++i) psi.values[i] = rng.normal();
    psi = normalize(psi);
    const double peak = psi.values.array().square().maxCoeff();
    for (int q = 2; q <= 5; ++q)
        CHECK(ipr(psi, q + 1) <= peak * ipr(psi, q) * (1.0 + 1e-12));
    CHECK(ipr(psi, 2) >= 1.0 / (g.side_length * g.side_length));
}

TEST_CASE("normalized_energy") {
    CHECK(normalized_energy(5.0, 0.0, 20.0) == 0.25);
    CHECK(normalized_energy(0.0, 0.0, 20.0) == 0.0);
    CHECK(normalized_energy(20.0, 0.0, 20.0) == 1.0);
    CHECK_THROWS_AS(normalized_energy(1.0, 2.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(normalized_energy(-1.0, 0.0, 20.0), std::invalid_argument);
}

TEST_CASE("kinetic expectation of a discrete box mode equals its FD energy") {
    const auto g = make_grid(10.0, 63);
    const int n = g.points_per_axis;
    for (auto [k, m] : {std::pair{1, 1}, {3, 2}}) {
        Wavefunction psi(g);
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix)
                psi.values[g.index(ix, iy)] =
                    std::sin(M_PI * k * (ix + 1) / (n + 1.0)) *
                    std::sin(M_PI * m * (iy + 1) / (n + 1.0));
        psi = normalize(psi);
        const double h = g.spacing;
        const double e_fd = (1.0 / (h * h)) * ((1.0 - std::cos(M_PI * k / (n + 1.0))) +
                                               (1.0 - std::cos(M_PI * m / (n + 1.0))));
        CHECK(kinetic_expectation(psi) == Catch::Approx(e_fd).margin(1e-10));
        CHECK(kinetic_expectation(psi) > 0.0);
    }
}

TEST_CASE("energy partition <T> + <V> = E on a solved state") {
    FermiParams p;
    p.L = 1;
    const auto g = make_grid(p.a, 48);
    const auto v = build_lattice_potential(p, g);
    const double tol = 1e-9;
    const auto eig = solve_lowest(HamiltonianOperator(v), 3, tol);
    for (int i = 0; i < 3; ++i) {
        const double t = kinetic_expectation(eig.states[i]);
        const double u = potential_expectation(eig.states[i], v);
        CHECK(std::abs(t + u - eig.energies[i]) <= 10 * tol);
    }
}

TEST_CASE("potential expectation trivial cases") {
    const auto g = make_grid(3.0, 24);
    const auto psi = uniform_state(g);
    ScalarField v(g);
    CHECK(potential_expectation(psi, v) == 0.0);
    v.values.setConstant(4.25);
    CHECK(potential_expectation(psi, v) == Catch::Approx(4.25).epsilon(1e-12));
    ScalarField other(make_grid(3.0, 25));
    CHECK_THROWS_AS(potential_expectation(psi, other), std::invalid_argument);
}

TEST_CASE("de Broglie wavelength") {
    const double v_mean = 20.0;
    const auto lam = de_broglie(v_mean + 2.0 * M_PI * M_PI, v_mean);
    REQUIRE(lam.has_value());
    CHECK(*lam == Catch::Approx(1.0).epsilon(1e-12));
    const auto lam2 = de_broglie(22.0, 20.0);
    REQUIRE(lam2.has_value());
    CHECK(*lam2 == Catch::Approx(M_PI).epsilon(1e-12));
    CHECK_FALSE(de_broglie(20.0, 20.0).has_value());
    CHECK_FALSE(de_broglie(19.0, 20.0).has_value());
    // Strictly decreasing in E at fixed <V>.
    double prev = 1e300;
    for (double e = 20.5; e < 30.0; e += 0.5) {
        const double cur = *de_broglie(e, 20.0);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("radial profile of an isotropic Gaussian matches the analytic curve") {
    const auto g = make_grid(10.0, 256);
    const double w = 0.8, c = 5.0;
    Wavefunction psi(g);
    for (int iy = 0; iy < 256; ++iy)
        for (int ix = 0; ix < 256; ++ix) {
            const double r2 = std::pow(g.x(ix) - c, 2) + std::pow(g.y(iy) - c, 2);
            psi.values[g.index(ix, iy)] = std::exp(-0.5 * r2 / (w * w));
        }
    psi = normalize(psi);
    // psi ~ exp(-r^2 / 2w^2), so the normalized density is exp(-r^2/w^2) / (pi w^2).
    const double peak = 1.0 / (M_PI * w * w);
    const auto prof = radial_profile(psi, std::pair{c, c});
    CHECK(prof.center_x == c);
    for (std::size_t k = 0; k < prof.r.size(); ++k) {
        if (prof.r[k] > 3.0 * w || prof.count[k] == 0) continue;
        const double expected = peak * std::exp(-prof.r[k] * prof.r[k] / (w * w));
        // 4% headroom: averaging a steep Gaussian over a finite annulus biases
        // the bin mean upward by up to ~3% near 3w.
        CHECK(prof.mean[k] == Catch::Approx(expected).epsilon(0.04));
    }
    // Quadrature identity: sum over annuli of mean * count * h^2 is the norm.
    double total = 0.0;
    for (std::size_t k = 0; k < prof.r.size(); ++k) total += prof.mean[k] * prof.count[k];
    CHECK(total * g.spacing * g.spacing == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("radial profile guards and flat case") {
    const auto g = make_grid(4.0, 32);
    const auto psi = uniform_state(g);
    CHECK_THROWS_AS(radial_profile(psi, std::pair{9.0, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(radial_profile(psi, std::pair{2.0, 2.0}, 4), std::invalid_argument);
    const auto prof = radial_profile(psi, std::pair{2.0, 2.0});
    const double level = psi.values[0] * psi.values[0];
    for (std::size_t k = 0; k < prof.r.size(); ++k)
        if (prof.count[k] > 0) CHECK(prof.mean[k] == Catch::Approx(level).epsilon(1e-12));
}

TEST_CASE("tail fit recovers the decay length of an exponential state") {
    const double xi = 0.7;
    const auto g = make_grid(10.0, 256);
    const auto psi = exponential_state(g, xi);
    const auto prof = radial_profile(psi, std::pair{5.0, 5.0});
    const auto res = fit_tail(prof, g.side_length);
    REQUIRE(res.fit.has_value());
    CHECK(res.fit->xi == Catch::Approx(xi).epsilon(0.02));
    CHECK(res.fit->r2 > 0.98);
    // Intercept extrapolates to ln C with C = 1/(2 pi xi^2).
    const double ln_c = std::log(1.0 / (2.0 * M_PI * xi * xi));
    CHECK(res.fit->intercept == Catch::Approx(ln_c).margin(0.05 * std::abs(ln_c)));
}

TEST_CASE("tail fit plus IPR gives a consistency ratio near one across xi") {
    for (double xi : {0.2, 0.5, 1.0, 2.0}) {
        const double side = 25.0 * xi;
        const auto g = make_grid(side, 384);
        const auto psi = exponential_state(g, xi);
        const auto prof = radial_profile(psi, std::pair{0.5 * side, 0.5 * side});
        const auto res = fit_tail(prof, side);
        REQUIRE(res.fit.has_value());
        CHECK(res.fit->xi == Catch::Approx(xi).epsilon(0.02));
        const double ratio = ipr_xi_consistency(ipr(psi, 2), res.fit->xi);
        CHECK(ratio == Catch::Approx(1.0).margin(0.05));
    }
}

TEST_CASE("tail fit rejects a uniform state via the max-xi guard") {
    const auto g = make_grid(6.0, 96);
    const auto psi = uniform_state(g);
    const auto prof = radial_profile(psi, std::pair{3.0, 3.0});
    const auto res = fit_tail(prof, g.side_length);
    CHECK_FALSE(res.fit.has_value());
    CHECK(res.reason != TailFitFailure::None);
}

TEST_CASE("consistency ratio closed forms") {
    CHECK(ipr_xi_consistency(1.0 / (8.0 * M_PI * 4.0), 2.0) == Catch::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(ipr_xi_consistency(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(ipr_xi_consistency(1.0, -1.0), std::invalid_argument);
    // Uniform state paired with any order-one xi is flagged far from one.
    const auto g = make_grid(10.0, 64);
    const double r = ipr_xi_consistency(ipr(uniform_state(g), 2), 1.0);
    CHECK(r < 0.5);
}

TEST_CASE("compute_diagnostics fills the full record") {
    const auto g = make_grid(10.0, 128);
    const auto psi = exponential_state(g, 0.6);
    ScalarField v(g);
    v.values.setConstant(2.0);
    const auto d = compute_diagnostics(7, 12.0, psi, v, 0.0, 20.0);
    CHECK(d.index == 7);
    CHECK(d.e_norm == Catch::Approx(0.6));
    CHECK(d.ipr_q.size() == 3);
    CHECK(d.ipr2 == d.ipr_q.at(2));
    CHECK(d.v_exp == Catch::Approx(2.0).epsilon(1e-10));
    CHECK(d.tv_ratio == Catch::Approx(d.t_exp / d.v_exp));
    REQUIRE(d.lambda_db.has_value());
    CHECK(*d.lambda_db == Catch::Approx(2.0 * M_PI / std::sqrt(20.0)).epsilon(1e-10));
    REQUIRE(d.xi_tail.has_value());
    CHECK(*d.xi_tail == Catch::Approx(0.6).epsilon(0.03));
}
