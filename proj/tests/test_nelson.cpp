#include "nodelab/nelson.hpp"
#include "nodelab/states.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace nodelab;
using std::numbers::pi;

namespace {

const Grid line256 = Grid::line(256, -10.0, 10.0);

// KS distance against the exact ground-state CDF, independent of the library.
double ks_gaussian(std::vector<Point> samples)
{
    std::sort(samples.begin(), samples.end(), [](const Point& a, const Point& b) { return a[0] < b[0]; });
    const auto n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double F = 0.5 * std::erfc(-samples[i][0]);
        d = std::max({d, F - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - F});
    }
    return d;
}

} // namespace

TEST_CASE("configuration invariants")
{
    NelsonConfig cfg;
    CHECK_NOTHROW(validate(cfg));
    cfg.drift_clamp = 2e3;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg = NelsonConfig{};
    cfg.nu = 0.0;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg = NelsonConfig{};
    cfg.n_paths = 0;
    CHECK_THROWS_AS(simulate(states::harmonic_eigenstate(line256, 0), cfg), std::invalid_argument);
}

TEST_CASE("drift")
{
    SUBCASE("plane wave drifts at its group velocity")
    {
        const Grid g = Grid::line(128, 0.0, 10.0);
        const double k = 2 * pi * 3 / 10.0;
        const auto psi = states::plane_wave(g, 3);
        for (double x : {0.0, 1.234, 7.77, 9.99}) {
            CHECK(std::abs(drift(psi, {x, 0.0})[0] - k) < 1e-10);
        }
    }
    SUBCASE("ground state osmotic drift is -x")
    {
        const DriftField b(states::harmonic_eigenstate(line256, 0), 0.5);
        double worst = 0.0;
        for (double x = -3.0; x <= 3.0; x += 0.0137) {
            worst = std::max(worst, std::abs(b({x, 0.0})[0] + x));
        }
        CHECK(worst < 1e-3);
        CHECK(std::abs(b({0.0, 0.0})[0]) < 1e-12);
    }
    SUBCASE("real even state has no drift at the origin")
    {
        const auto psi = normalize(add(states::harmonic_eigenstate(line256, 0), scale(states::harmonic_eigenstate(line256, 2), 0.4)));
        CHECK(std::abs(drift(psi, {0.0, 0.0})[0]) < 1e-12);
    }
    SUBCASE("2D vortex: current plus osmotic drift")
    {
        const Grid g = Grid::square(64, -6.0, 6.0);
        const DriftField b(states::vortex(g, 1), 0.5);
        // v = (-y, x)/r^2, u = (1/r^2 - 1)(x, y).
        const Point p{0.71, -0.43};
        const double r2 = p[0] * p[0] + p[1] * p[1];
        const Point exact{-p[1] / r2 + (1.0 / r2 - 1.0) * p[0], p[0] / r2 + (1.0 / r2 - 1.0) * p[1]};
        const Point got = b(p);
        CHECK(std::hypot(got[0] - exact[0], got[1] - exact[1]) < 0.05 * std::hypot(exact[0], exact[1]));
        // The node cell is finite and clamped.
        const Point near = b({1e-6, 1e-6});
        CHECK(std::isfinite(near[0]));
        CHECK(std::hypot(near[0], near[1]) <= 1e3 * g.spacing(0) * (1 + 1e-12));
    }
    SUBCASE("outside the box")
    {
        const Grid open = Grid::line(64, -5.0, 5.0, false);
        const DriftField b(states::harmonic_eigenstate(open, 0), 0.5);
        CHECK_THROWS_AS(b({5.5, 0.0}), std::out_of_range);
        CHECK_THROWS_AS(b({-5.01, 0.0}), std::out_of_range);
    }
}

TEST_CASE("equivariance statistic")
{
    const auto psi = states::harmonic_eigenstate(line256, 0);
    SUBCASE("exact samples pass the KS critical value")
    {
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            const auto samples = sample_density(psi, 20000, seed);
            const double crit = 1.63 / std::sqrt(20000.0);
            CHECK(equivariance_stat(samples, psi) < crit);
            CHECK(ks_gaussian(samples) < crit);
        }
    }
    SUBCASE("degenerate ensemble")
    {
        const std::vector<Point> at_edge(500, Point{-8.0, 0.0});
        CHECK(equivariance_stat(at_edge, psi) > 0.99);
        const std::vector<Point> at_centre(500, Point{0.0, 0.0});
        CHECK(equivariance_stat(at_centre, psi) == doctest::Approx(0.5).epsilon(1e-3));
    }
    SUBCASE("empty ensemble")
    {
        CHECK_THROWS_AS(equivariance_stat({}, psi), std::invalid_argument);
    }
    SUBCASE("2D chi-square p-value")
    {
        const Grid g = Grid::square(64, -6.0, 6.0);
        const auto vort = states::vortex(g, 1);
        const auto samples = sample_density(vort, 50000, 9);
        CHECK(equivariance_stat(samples, vort) > 0.01);
        // Samples of the nodeless ground state fail against the vortex density.
        CHECK(equivariance_stat(sample_density(states::ground_state_2d(g), 50000, 9), vort) < 1e-6);
    }
}

TEST_CASE("mass within a disc")
{
    const Grid g = Grid::square(128, -6.0, 6.0);
    const auto vort = states::vortex(g, 1);
    for (double a : {0.1, 0.2, 0.5, 1.0}) {
        // |psi|^2 = r^2 exp(-r^2) / pi.
        const double exact = 1.0 - std::exp(-a * a) * (1.0 + a * a);
        CHECK(mass_within(vort, {0.0, 0.0}, a, 16) == doctest::Approx(exact).epsilon(0.02));
    }
    const auto ground = states::harmonic_eigenstate(line256, 0);
    CHECK(mass_within(ground, {0.0, 0.0}, 1.0) == doctest::Approx(std::erf(1.0)).epsilon(1e-4));
}

TEST_CASE("simulate")
{
    const auto psi = states::harmonic_eigenstate(line256, 0);
    SUBCASE("ground-state ensemble stays Gaussian")
    {
        NelsonConfig cfg;
        cfg.n_paths = 20000;
        cfg.n_steps = 5000;
        cfg.record_every = 1000;
        cfg.seed = 4;
        const auto ens = simulate(psi, cfg);
        REQUIRE(ens.records() == 6);
        CHECK(ens.times.back() == doctest::Approx(5.0));
        const double crit = 1.63 / std::sqrt(20000.0);
        for (std::size_t r = 0; r < ens.records(); ++r) {
            const auto s = ens.slice(r);
            CHECK(s.size() == cfg.n_paths);
            CHECK(ks_gaussian(s) < crit);
        }
    }
    SUBCASE("vanishing diffusion leaves a current-free state frozen")
    {
        NelsonConfig cfg;
        cfg.nu = 1e-20;
        cfg.n_paths = 4;
        cfg.n_steps = 1000;
        cfg.record_every = 500;
        const std::vector<Point> starts{{-2.0, 0.0}, {0.3, 0.0}, {1.7, 0.0}, {4.1, 0.0}};
        const auto ens = simulate(psi, cfg, starts);
        for (std::size_t p = 0; p < 4; ++p) {
            CHECK(std::abs(ens.position(2, p)[0] - starts[p][0]) < 1e-9);
        }
    }
    SUBCASE("bit-identical across runs and thread counts")
    {
        NelsonConfig cfg;
        cfg.n_paths = 256;
        cfg.n_steps = 200;
        cfg.record_every = 50;
        cfg.seed = 77;
        const auto a = simulate(psi, cfg);
        cfg.jobs = 3;
        const auto b = simulate(psi, cfg);
        CHECK(a.positions == b.positions);
        CHECK(a.alive == b.alive);
        cfg.seed = 78;
        CHECK(simulate(psi, cfg).positions != a.positions);
    }
    SUBCASE("paths leaving an open grid die")
    {
        const Grid open = Grid::line(64, -5.0, 5.0, false);
        NelsonConfig cfg;
        cfg.n_paths = 8;
        cfg.n_steps = 100;
        cfg.record_every = 100;
        cfg.nu = 2.0;
        const auto ens = simulate(states::harmonic_eigenstate(open, 0), cfg, std::vector<Point>{{4.8, 0.0}});
        std::size_t dead = 0;
        for (auto a : ens.alive) {
            dead += a == 0 ? 1 : 0;
        }
        CHECK(dead > 0);
        CHECK(ens.slice(1).size() == 8 - dead);
    }
    SUBCASE("periodic wrap keeps paths in the box")
    {
        const Grid g = Grid::line(128, 0.0, 10.0);
        NelsonConfig cfg;
        cfg.n_paths = 64;
        cfg.n_steps = 2000;
        cfg.record_every = 100;
        const auto ens = simulate(states::plane_wave(g, 3), cfg);
        for (double x : ens.positions) {
            CHECK(x >= 0.0);
            CHECK(x < 10.0);
        }
    }
}

TEST_CASE("vortex node avoidance")
{
    const Grid g = Grid::square(128, -6.0, 6.0);
    const auto vort = states::vortex(g, 1);
    NelsonConfig cfg;
    cfg.n_paths = 20000;
    cfg.n_steps = 1000;
    cfg.record_every = 250;
    cfg.seed = 12;
    const auto ens = simulate(vort, cfg);
    const auto n = static_cast<double>(cfg.n_paths);
    for (double a : {0.1, 0.2, 0.5}) {
        const double p = mass_within(vort, {0.0, 0.0}, a, 16);
        const double se = std::sqrt(p * (1.0 - p) / n);
        for (std::size_t r = 0; r < ens.records(); ++r) {
            const double f = fraction_within(ens.slice(r), {0.0, 0.0}, a, 2);
            CHECK(std::abs(f - p) <= 3.0 * se + 1.0 / n);
        }
    }
    CHECK(equivariance_stat(ens.slice(ens.records() - 1), vort) > 1e-3);
}

TEST_CASE("KS shrinks as dt decreases")
{
    // Euler-Maruyama widens the stationary Gaussian by O(dt). A coarse grid
    // keeps the drift clamp out of the bulk at the largest step.
    const Grid g = Grid::line(64, -16.0, 16.0);
    const auto psi = states::harmonic_eigenstate(g, 0);
    std::vector<double> ks;
    for (double dt : {0.16, 0.08, 0.04}) {
        NelsonConfig cfg;
        cfg.dt = dt;
        cfg.n_paths = 200000;
        cfg.n_steps = static_cast<std::size_t>(std::lround(3.0 / dt));
        cfg.record_every = cfg.n_steps;
        cfg.drift_clamp = 1.0 / dt;
        cfg.seed = 5;
        ks.push_back(ks_gaussian(simulate(psi, cfg).slice(1)));
    }
    CHECK(ks[0] > ks[1]);
    CHECK(ks[1] > ks[2]);
}
