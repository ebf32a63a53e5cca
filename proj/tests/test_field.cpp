#include "nodelab/field.hpp"
#include "nodelab/io.hpp"
#include "nodelab/zeros.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

using namespace nodelab;
using namespace nodelab::field;
using std::numbers::pi;

namespace {

const auto basis16 = build_modes(LatticeSpec{1, 16, 1.0, 1.0});

double vacuum_peak(const ModeBasis& b)
{
    double v = 1.0;
    for (const auto& m : b.modes()) {
        v *= std::pow(m.omega / pi, 0.25);
    }
    return v;
}

// Min of |psi|^2 over the grid with its position.
std::pair<double, Point> grid_min(const Wavefunction& w)
{
    const auto [v, i] = min_density(w);
    return {v, w.grid().coords(i)};
}

} // namespace

TEST_CASE("lattice parameters")
{
    CHECK_THROWS_AS(build_modes(LatticeSpec{0, 8, 1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(build_modes(LatticeSpec{4, 8, 1.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(build_modes(LatticeSpec{1, 8, 0.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(build_modes(LatticeSpec{1, 8, 1.0, -1.0}), std::invalid_argument);
}

TEST_CASE("normal modes")
{
    SUBCASE("1D dispersion")
    {
        const auto b = build_modes(LatticeSpec{1, 8, 1.0, 1.0});
        CHECK(b->size() == 8);
        CHECK((*b)[b->find({0, 0, 0}, Parity::constant)].omega == doctest::Approx(1.0).epsilon(1e-15));
        const auto& edge = (*b)[b->find({4, 0, 0}, Parity::cos)];
        CHECK(edge.omega * edge.omega == doctest::Approx(5.0).epsilon(1e-14));
        CHECK_THROWS_AS(b->find({4, 0, 0}, Parity::sin), std::out_of_range);
        CHECK(b->find({-3, 0, 0}, Parity::sin) == b->find({3, 0, 0}, Parity::sin));
    }
    for (const auto& spec : {LatticeSpec{1, 16, 1.0, 1.0}, LatticeSpec{2, 8, 0.5, 0.3}, LatticeSpec{3, 4, 1.0, 2.0},
                             LatticeSpec{1, 9, 1.0, 1.0}, LatticeSpec{1, 64, 1.0, 0.5}}) {
        CAPTURE(spec.dim);
        CAPTURE(spec.sites);
        const auto b = build_modes(spec);
        REQUIRE(b->size() == spec.volume_sites());
        const double cell = std::pow(spec.spacing, spec.dim);
        double worst = 0.0;
        for (std::size_t i = 0; i < b->size(); ++i) {
            for (std::size_t j = 0; j < b->size(); ++j) {
                double s = 0.0;
                for (std::size_t x = 0; x < spec.volume_sites(); ++x) {
                    s += (*b)[i].profile[x] * (*b)[j].profile[x];
                }
                worst = std::max(worst, std::abs(s * cell - (i == j ? 1.0 : 0.0)));
            }
        }
        CHECK(worst < 1e-10);
        for (const auto& m : b->modes()) {
            double k2 = 0.0;
            double s2 = 0.0;
            for (int j = 0; j < spec.dim; ++j) {
                const double k = 2 * pi * m.n[static_cast<std::size_t>(j)] / (spec.sites * spec.spacing);
                k2 += k * k;
                s2 += std::pow(std::sin(0.5 * k * spec.spacing), 2);
            }
            CHECK(m.omega * m.omega == doctest::Approx(spec.mass * spec.mass + 4.0 / (spec.spacing * spec.spacing) * s2));
            if (std::sqrt(k2) * spec.spacing <= 0.3) {
                CHECK(std::abs(m.omega * m.omega - (spec.mass * spec.mass + k2)) / (m.omega * m.omega) < 0.01);
            }
        }
    }
    SUBCASE("projection round trip")
    {
        std::mt19937_64 rng(3);
        std::normal_distribution<double> n;
        std::vector<double> phi(16);
        for (double& p : phi) {
            p = n(rng);
        }
        const auto back = basis16->synthesize(basis16->project(phi));
        for (std::size_t x = 0; x < 16; ++x) {
            CHECK(std::abs(back[x] - phi[x]) < 1e-12);
        }
    }
}

TEST_CASE("vacuum")
{
    const auto vac = vacuum(basis16);
    CHECK(vac.normalized());
    CHECK(vac.evaluate({}).real() == doctest::Approx(vacuum_peak(*basis16)).epsilon(1e-13));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        ModeCoords q(basis16->size());
        for (std::size_t k = 0; k < q.size(); ++k) {
            q[k] = 6.0 * u(rng) / std::sqrt((*basis16)[k].omega);
        }
        const cplx v = vac.evaluate(q);
        CHECK(v.real() > 0.0);
        CHECK(v.imag() == 0.0);
        CHECK(std::isfinite(vac.log_evaluate(q).first));
    }
    double zero_point = 0.0;
    for (const auto& m : basis16->modes()) {
        zero_point += 0.5 * m.omega;
    }
    CHECK(std::abs(energy(vac) - zero_point) < 1e-8);
    CHECK_THROWS_WITH(vacuum(build_modes(LatticeSpec{1, 8, 1.0, 0.0})), "massless zero mode");
    // Far out in configuration space the log stays finite where exp underflows.
    ModeCoords far(basis16->size(), 60.0);
    CHECK(vac.evaluate(far) == 0.0);
    CHECK(std::isfinite(vac.log_evaluate(far).first));
}

TEST_CASE("creation")
{
    const auto vac = vacuum(basis16);
    const std::size_t k = basis16->find({2, 0, 0}, Parity::cos);
    const double w = (*basis16)[k].omega;
    const auto one = apply_creation(vac, k);
    CHECK(one.normalized());
    ModeCoords q(basis16->size(), 0.3);
    q[k] = 0.0;
    CHECK(one.evaluate(q) == 0.0);
    q[k] = 0.7;
    // psi_1 / psi_0 = sqrt(2 omega) q.
    CHECK(std::abs(one.evaluate(q) - std::sqrt(2 * w) * 0.7 * vac.evaluate(q)) < 1e-14);
    const auto two = apply_creation(one, k);
    CHECK(two.normalized());
    for (double s : {1.0, -1.0}) {
        q[k] = s / std::sqrt(2 * w);
        CHECK(std::abs(two.evaluate(q)) < 1e-15);
    }
    // (2 omega q^2 - 1)/sqrt(2) relative to the vacuum.
    q[k] = 1.3;
    CHECK(std::abs(two.evaluate(q) - (2 * w * 1.69 - 1) / std::sqrt(2.0) * vac.evaluate(q)) < 1e-13);
    CHECK(energy(two) == doctest::Approx(energy(vac) + 2 * w).epsilon(1e-10));
    CHECK_THROWS_AS(apply_creation(vac, 99), std::out_of_range);
}

TEST_CASE("superposition")
{
    const auto vac = vacuum(basis16);
    const std::size_t c = basis16->find({1, 0, 0}, Parity::cos);
    const std::size_t s = basis16->find({1, 0, 0}, Parity::sin);
    const auto one = apply_creation(vac, c);
    SUBCASE("identity")
    {
        const auto same = superpose({{1.0, vac}});
        CHECK(same.terms().size() == 1);
        CHECK(same.evaluate({0.1, 0.2}) == vac.evaluate({0.1, 0.2}));
    }
    SUBCASE("standing node is filled by an imaginary vacuum admixture")
    {
        for (double eps : {1e-1, 1e-2, 1e-3}) {
            const auto f = superpose({{1.0, one}, {cplx{0.0, eps}, vac}});
            CHECK(f.normalized());
            ModeCoords q(basis16->size(), 0.0);
            const double expected = eps * eps * std::norm(vac.evaluate(q)) / (1 + eps * eps);
            CHECK(std::norm(f.evaluate(q)) == doctest::Approx(expected).epsilon(1e-12));
            // Minimum along the q_c axis is at the node.
            double lo = 1e300;
            for (double x = -2.0; x <= 2.0; x += 1e-3) {
                q[c] = x;
                lo = std::min(lo, std::norm(f.evaluate(q)));
            }
            CHECK(lo == doctest::Approx(expected).epsilon(1e-9));
        }
    }
    SUBCASE("two distinct one-particle modes")
    {
        const auto f = superpose({{1.0, one}, {1.0, apply_creation(vac, s)}});
        const auto sec = section(f, c, s, {}, 3.0, 60);
        // Real functional: its zero set is the line q_c + q_s = 0, not a point.
        const auto [v, p] = grid_min(sec);
        CHECK(v < 1e-28);
        CHECK(std::abs(p[0] + p[1]) < 1e-12);
        CHECK(plaquette_charges(sec).empty());
        // A quarter-turn relative phase leaves only the codimension-2 set
        // q_1 = q_2 = 0.
        const std::size_t d = basis16->find({3, 0, 0}, Parity::cos);
        const auto g = superpose({{1.0, one}, {cplx{0.0, 1.0}, apply_creation(vac, d)}});
        const auto charges = plaquette_charges(section(g, c, d, {}, 3.0, 60));
        REQUIRE(charges.size() == 1);
        CHECK(std::abs(charges[0].charge) == 1);
        CHECK(std::hypot(charges[0].position[0], charges[0].position[1]) < 1e-10);
    }
    SUBCASE("basis mismatch")
    {
        const auto other = vacuum(build_modes(LatticeSpec{1, 8, 1.0, 1.0}));
        CHECK_THROWS_AS(superpose({{1.0, vac}, {1.0, other}}), std::invalid_argument);
    }
}

TEST_CASE("traveling mode")
{
    const std::size_t c = basis16->find({1, 0, 0}, Parity::cos);
    const std::size_t s = basis16->find({1, 0, 0}, Parity::sin);
    const double w = (*basis16)[c].omega;
    const auto vac = vacuum(basis16);
    const auto t = traveling_state(basis16, c, s);
    CHECK(t.normalized());
    ModeCoords q(basis16->size(), 0.0);
    q[c] = 1.0;
    q[s] = 1.0;
    CHECK(std::abs(t.evaluate(q)) == doctest::Approx(std::sqrt(2.0) * std::sqrt(w) * vac.evaluate(q).real()).epsilon(1e-13));

    SUBCASE("section has one +1 zero at the origin")
    {
        const auto sec = section(t, c, s, {}, 3.0, 64);
        const auto charges = plaquette_charges(sec);
        REQUIRE(charges.size() == 1);
        CHECK(charges[0].charge == 1);
        CHECK(std::hypot(charges[0].position[0], charges[0].position[1]) < 1e-10);
    }
    SUBCASE("vacuum admixture moves the zero to the linear root")
    {
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> u(-0.5, 0.5);
        std::vector<cplx> alphas{0.2, {0.0, 0.5}, {-0.35, 0.35}, {0.5, 0.0}};
        for (int i = 0; i < 6; ++i) {
            alphas.emplace_back(u(rng), u(rng));
        }
        for (const cplx alpha : alphas) {
            CAPTURE(alpha);
            const auto f = superpose({{1.0, t}, {alpha, vac}});
            // (T + alpha Psi_0) ~ (sqrt(w)(q_c + i q_s) + alpha) Psi_0.
            const cplx root = -alpha / std::sqrt(w);
            const auto sec = section(f, c, s, {}, 3.0, 96);
            const auto charges = plaquette_charges(sec);
            REQUIRE(charges.size() == 1);
            CHECK(charges[0].charge == 1);
            const double dx = charges[0].position[0] - root.real();
            const double dy = charges[0].position[1] - root.imag();
            CHECK(std::hypot(dx, dy) <= 0.02 * std::abs(root) + 1e-12);
        }
    }
    SUBCASE("sidecar metadata")
    {
        const auto dir = std::filesystem::temp_directory_path() / "nodelab_test_field";
        std::filesystem::remove_all(dir);
        const auto sec = section(t, c, s, {0.0, 0.1}, 2.0, 16);
        write_section(dir / "sec", sec, c, s, {0.0, 0.1});
        const auto meta = io::read_json(dir / "sec.json");
        CHECK(meta.at("mode_1") == c);
        CHECK(meta.at("mode_2") == s);
        CHECK(meta.at("base_point").size() == 2);
        CHECK(io::read_wavefunction(dir / "sec").values() == sec.values());
        std::filesystem::remove_all(dir);
    }
}

TEST_CASE("standing node section")
{
    const auto vac = vacuum(basis16);
    const std::size_t k = basis16->find({2, 0, 0}, Parity::cos);
    const std::size_t other = basis16->find({3, 0, 0}, Parity::sin);
    const auto one = apply_creation(vac, k);
    const auto envelope = section(vac, k, other, {}, 2.0, 64);
    for (double eps : {1e-1, 1e-2, 1e-3}) {
        const auto f = superpose({{1.0, one}, {cplx{0.0, eps}, vac}});
        const auto sec = section(f, k, other, {}, 2.0, 64);
        // |Psi|^2 / |Psi_0|^2 = (2 omega q_k^2 + eps^2) / (1 + eps^2), smallest on q_k = 0.
        double lo = 1e300;
        std::size_t at = 0;
        for (std::size_t i = 0; i < sec.size(); ++i) {
            const double r = std::norm(sec[i]) / std::norm(envelope[i]);
            if (r < lo) {
                lo = r;
                at = i;
            }
        }
        CHECK(lo == doctest::Approx(eps * eps / (1 + eps * eps)).epsilon(1e-10));
        CHECK(sec.grid().coords(at)[0] == 0.0);
        // At the base point itself.
        const std::size_t base = sec.grid().index(32, 32);
        CHECK(std::norm(sec[base]) == doctest::Approx(eps * eps * std::norm(vac.evaluate({})) / (1 + eps * eps)).epsilon(1e-10));
        CHECK(plaquette_charges(sec).empty());
    }
}

TEST_CASE("mode-coordinate reduction")
{
    const std::size_t a = basis16->find({1, 0, 0}, Parity::cos);
    const std::size_t b = basis16->find({5, 0, 0}, Parity::sin);
    const auto vac = vacuum(basis16);
    const auto f = superpose({{1.0, apply_creation(vac, a)}, {cplx{0.3, 0.2}, apply_creation(apply_creation(vac, b), b)}});
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n;
    for (int trial = 0; trial < 20; ++trial) {
        ModeCoords q(basis16->size());
        for (double& x : q) {
            x = n(rng);
        }
        ModeCoords r = q;
        for (std::size_t k = 0; k < r.size(); ++k) {
            if (k != a && k != b) {
                r[k] = n(rng);
            }
        }
        const cplx ratio = f.evaluate(q) / f.evaluate(r);
        CHECK(std::abs(ratio - vac.evaluate(q) / vac.evaluate(r)) < 1e-10 * std::abs(ratio));
    }
}
