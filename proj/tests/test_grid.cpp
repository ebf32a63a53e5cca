#include "nodelab/grid.hpp"
#include "nodelab/io.hpp"
#include "nodelab/spectral.hpp"
#include "nodelab/states.hpp"

#include <doctest.h>
#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

using namespace nodelab;
using std::numbers::pi;

namespace {

// Closed-form oscillator eigenfunctions, independent of states::hermite_function.
double ho0(double x) { return std::pow(pi, -0.25) * std::exp(-0.5 * x * x); }
double ho1(double x) { return std::pow(pi, -0.25) * std::sqrt(2.0) * x * std::exp(-0.5 * x * x); }

Wavefunction random_smooth(const Grid& g, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    const double c = n(rng);
    const double s = 0.5 + 0.5 * std::abs(n(rng));
    const double k = n(rng);
    return Wavefunction::sample(g, [&](double x) { return std::exp(cplx{-(x - c) * (x - c) / (4 * s * s), k * x}); });
}

} // namespace

TEST_CASE("grid invariants")
{
    const Grid g = Grid::line(256, -10.0, 10.0);
    CHECK(g.size() == 256);
    CHECK(g.spacing(0) == doctest::Approx(20.0 / 256));
    CHECK(g.coords(0)[0] == -10.0);
    CHECK(g.coords(128)[0] == 0.0);
    CHECK_THROWS_AS(Grid::line(4, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Grid::line(16, 1.0, 1.0), std::invalid_argument);

    const Grid p = Grid::plane(Axis{16, 0.0, 4.0}, Axis{32, -1.0, 1.0});
    CHECK(p.size() == 512);
    // Row-major, x slow.
    CHECK(p.index(1, 0) == 32);
    CHECK(p.unflatten(33) == std::array<std::size_t, 2>{1, 1});
    CHECK(p.coords(33)[0] == 0.25);
    CHECK(p.coords(33)[1] == -1.0 + 2.0 / 32);
}

TEST_CASE("wavefunction rejects bad amplitudes")
{
    const Grid g = Grid::line(16, 0.0, 1.0);
    CHECK_THROWS_AS(Wavefunction(g, std::vector<cplx>(15)), std::invalid_argument);
    std::vector<cplx> a(16, 1.0);
    a[3] = cplx{std::nan(""), 0.0};
    CHECK_THROWS_AS(Wavefunction(g, a), std::invalid_argument);
}

TEST_CASE("normalize")
{
    const double L = 8.0;
    const Grid g = Grid::line(64, 0.0, L);
    SUBCASE("constant")
    {
        const auto psi = normalize(Wavefunction(g, std::vector<cplx>(64, 1.0)));
        for (const auto& a : psi.values()) {
            CHECK(std::abs(a - 1.0 / std::sqrt(L)) < 1e-15);
        }
        CHECK(std::abs(norm(psi) - 1.0) < 1e-12);
    }
    SUBCASE("identity and scaling")
    {
        const Grid gg = Grid::line(256, -10.0, 10.0);
        const auto phi = normalize(states::gaussian(gg, 0.3, 1.1, 0.7));
        const auto again = normalize(phi);
        const auto from_double = normalize(scale(phi, 2.0));
        for (std::size_t i = 0; i < phi.size(); ++i) {
            CHECK(std::abs(again[i] - phi[i]) < 1e-15);
            CHECK(std::abs(from_double[i] - phi[i]) < 1e-15);
        }
    }
    SUBCASE("zero norm")
    {
        CHECK_THROWS_WITH(normalize(Wavefunction(g, std::vector<cplx>(64, 0.0))), "zero norm");
    }
}

TEST_CASE("inner product")
{
    const Grid g = Grid::line(256, -10.0, 10.0);
    const auto psi0 = Wavefunction::sample(g, [](double x) { return cplx{ho0(x)}; });
    const auto psi1 = Wavefunction::sample(g, [](double x) { return cplx{ho1(x)}; });
    CHECK(std::abs(inner_product(psi0, psi1)) < 1e-10);

    const auto psi = random_smooth(g, 7);
    const cplx self = inner_product(psi, psi);
    CHECK(self.real() >= 0.0);
    CHECK(std::abs(self.imag()) < 1e-15 * self.real());
    CHECK(std::abs(inner_product(psi, scale(psi, cplx{0, 1})) - cplx{0, self.real()}) < 1e-13);

    const Grid other = Grid::line(128, -10.0, 10.0);
    CHECK_THROWS_WITH(inner_product(psi, states::gaussian(other, 0, 1)), "grid mismatch");
}

TEST_CASE("inner product is conjugate symmetric and sesquilinear")
{
    const Grid g = Grid::line(128, -8.0, 8.0);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n;
    for (unsigned trial = 0; trial < 20; ++trial) {
        const auto psi = random_smooth(g, 100 + trial);
        const auto f1 = random_smooth(g, 200 + trial);
        const auto f2 = random_smooth(g, 300 + trial);
        const cplx alpha{n(rng), n(rng)};
        const cplx beta{n(rng), n(rng)};
        const cplx lhs = inner_product(psi, add(scale(f1, alpha), scale(f2, beta)));
        const cplx rhs = alpha * inner_product(psi, f1) + beta * inner_product(psi, f2);
        CHECK(std::abs(lhs - rhs) < 1e-12 * (1.0 + std::abs(lhs)));
        CHECK(std::abs(inner_product(psi, f1) - std::conj(inner_product(f1, psi))) < 1e-14);
    }
}

TEST_CASE("total energy")
{
    SUBCASE("plane wave")
    {
        const Grid g = Grid::line(128, 0.0, 10.0);
        for (int n : {1, 3, -5}) {
            const double k = 2 * pi * n / 10.0;
            CHECK(std::abs(total_energy(states::plane_wave(g, n), PotentialSpec::free()) - 0.5 * k * k) < 1e-10);
        }
    }
    SUBCASE("constant")
    {
        const Grid g = Grid::line(64, 0.0, 4.0);
        const auto psi = normalize(Wavefunction(g, std::vector<cplx>(64, 1.0)));
        CHECK(std::abs(total_energy(psi, PotentialSpec::free())) < 1e-14);
    }
    SUBCASE("harmonic ground state")
    {
        const Grid g = Grid::line(512, -10.0, 10.0);
        const auto psi = normalize(states::harmonic_eigenstate(g, 0));
        const double e = total_energy(psi, PotentialSpec::harmonic());
        CHECK(std::abs(e - 0.5) < 1e-8);

        // Independent cross-check: lowest eigenvalue of the dense
        // finite-difference Hamiltonian converges to 1/2 at O(h^2).
        const std::size_t n = 400;
        const double L = 16.0;
        const double h = L / n;
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = -L / 2 + h * static_cast<double>(i);
            H(i, i) = 1.0 / (h * h) + 0.5 * x * x;
            H(i, (i + 1) % n) = -0.5 / (h * h);
            H((i + 1) % n, i) = -0.5 / (h * h);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
        CHECK(std::abs(es.eigenvalues()(0) - e) < h * h);
    }
    SUBCASE("preconditions")
    {
        const Grid g = Grid::line(64, -5.0, 5.0);
        CHECK_THROWS_AS(total_energy(scale(states::harmonic_eigenstate(g, 0), 2.0), PotentialSpec::harmonic()),
                        std::invalid_argument);
        const Grid open = Grid::line(64, -5.0, 5.0, false);
        CHECK_THROWS_AS(total_energy(normalize(states::harmonic_eigenstate(open, 0)), PotentialSpec::harmonic()),
                        std::invalid_argument);
    }
}

TEST_CASE("spectral and finite-difference kinetic energies agree at O(h^2)")
{
    // Error ratio under grid halving should approach 4.
    double prev = 0.0;
    for (std::size_t n : {64, 128, 256}) {
        const Grid g = Grid::line(n, -12.0, 12.0);
        const auto psi = normalize(states::gaussian(g, 0.4, 0.8, 1.3));
        const double diff = std::abs(kinetic_energy(psi) - kinetic_energy_fd(psi));
        if (prev > 0.0) {
            CHECK(prev / diff == doctest::Approx(4.0).epsilon(0.1));
        }
        prev = diff;
    }
}

TEST_CASE("2D energy of the unit trap ground state")
{
    const Grid g = Grid::square(64, -8.0, 8.0);
    const auto psi = states::ground_state_2d(g);
    CHECK(std::abs(total_energy(psi, PotentialSpec::harmonic()) - 1.0) < 1e-10);
    const auto vort = states::vortex(g, 1);
    CHECK(std::abs(total_energy(vort, PotentialSpec::harmonic()) - 2.0) < 1e-10);
}

TEST_CASE("trigonometric interpolation reproduces samples and band-limited fields")
{
    const Grid g = Grid::square(32, -6.0, 6.0);
    const auto psi = states::vortex(g, 1);
    const TrigInterpolant interp(psi);
    CHECK(std::abs(interp(g.coords(100)) - psi[100]) < 1e-14);
    const double k = 2 * pi / 12.0;
    const auto wave = Wavefunction::sample(g, [&](double x, double y) { return std::polar(1.0, k * x + 2 * k * y); });
    const TrigInterpolant wi(wave);
    const Point p{0.123, -1.7};
    CHECK(std::abs(wi(p) - std::polar(1.0, k * p[0] + 2 * k * p[1])) < 1e-13);
}

TEST_CASE("wavefunction CSV round trip is bit-exact")
{
    const auto dir = std::filesystem::temp_directory_path() / "nodelab_test_grid";
    std::filesystem::remove_all(dir);
    SUBCASE("1D")
    {
        const Grid g = Grid::line(64, -3.3, 7.1);
        const auto psi = normalize(states::gaussian(g, 0.1, 0.77, 2.9));
        io::write_wavefunction(dir / "psi1", psi);
        const auto back = io::read_wavefunction(dir / "psi1");
        CHECK(back.grid() == g);
        for (std::size_t i = 0; i < psi.size(); ++i) {
            CHECK(back[i].real() == psi[i].real());
            CHECK(back[i].imag() == psi[i].imag());
        }
    }
    SUBCASE("2D with metadata")
    {
        const Grid g = Grid::plane(Axis{16, -1.0, 1.0}, Axis{24, 0.0, 3.0}, false);
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<cplx> a(g.size());
        for (auto& x : a) {
            x = {u(rng) * 1e-300, u(rng) * 1e300};
        }
        const Wavefunction psi(g, a);
        io::write_wavefunction(dir / "psi2", psi, {{"mode_1", 3}});
        CHECK(io::read_json(dir / "psi2.json").at("mode_1") == 3);
        const auto back = io::read_wavefunction(dir / "psi2");
        CHECK(back.grid() == g);
        CHECK(back.values() == psi.values());
    }
    std::filesystem::remove_all(dir);
}
