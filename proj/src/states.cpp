#include "nodelab/states.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace nodelab::states {

using std::numbers::pi;

double hermite_function(int n, double x, double omega, double mass, double hbar)
{
    if (n < 0) {
        throw std::invalid_argument("hermite_function: negative order");
    }
    const double alpha = mass * omega / hbar;
    const double xi = std::sqrt(alpha) * x;
    double prev = std::pow(alpha / pi, 0.25) * std::exp(-0.5 * xi * xi);
    if (n == 0) {
        return prev;
    }
    double cur = std::sqrt(2.0) * xi * prev;
    for (int k = 1; k < n; ++k) {
        const double next = std::sqrt(2.0 / (k + 1)) * xi * cur - std::sqrt(static_cast<double>(k) / (k + 1)) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

Wavefunction harmonic_eigenstate(const Grid& grid, int n, double omega, double center)
{
    return Wavefunction::sample(grid, [&](double x) { return cplx{hermite_function(n, x - center, omega)}; });
}

Wavefunction gaussian(const Grid& grid, double x0, double sigma, double k0)
{
    const double amp = std::pow(2.0 * pi * sigma * sigma, -0.25);
    return Wavefunction::sample(grid, [&](double x) {
        const double d = x - x0;
        return amp * std::exp(cplx{-d * d / (4.0 * sigma * sigma), k0 * x});
    });
}

Wavefunction coherent_state(const Grid& grid, double x0, double t)
{
    const double xc = x0 * std::cos(t);
    const double pc = -x0 * std::sin(t);
    const double amp = std::pow(pi, -0.25);
    return Wavefunction::sample(grid, [&](double x) {
        const double d = x - xc;
        return amp * std::exp(cplx{-0.5 * d * d, pc * x - 0.5 * xc * pc - 0.5 * t});
    });
}

Wavefunction plane_wave(const Grid& grid, int n)
{
    const double k = 2.0 * pi * n / grid.axis(0).length();
    const double amp = 1.0 / std::sqrt(grid.axis(0).length());
    return Wavefunction::sample(grid, [&](double x) { return amp * std::polar(1.0, k * x); });
}

Wavefunction vortex_unnormalized(const Grid& grid, int l, Point c)
{
    if (grid.dim() != 2) {
        throw std::invalid_argument("vortex requires a 2D grid");
    }
    const double s = l >= 0 ? 1.0 : -1.0;
    const int m = std::abs(l);
    return Wavefunction::sample(grid, [&](double x, double y) {
        const double dx = x - c[0];
        const double dy = y - c[1];
        const cplx z{dx, s * dy};
        cplx zm = 1.0;
        for (int k = 0; k < m; ++k) {
            zm *= z;
        }
        return zm * std::exp(-0.5 * (dx * dx + dy * dy));
    });
}

Wavefunction vortex(const Grid& grid, int l, Point c)
{
    return normalize(vortex_unnormalized(grid, l, c));
}

Wavefunction ground_state_2d(const Grid& grid)
{
    return vortex(grid, 0);
}

} // namespace nodelab::states
