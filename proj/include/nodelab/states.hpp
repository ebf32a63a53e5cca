#pragma once

#include "nodelab/grid.hpp"

namespace nodelab::states {

/// Normalized Hermite function psi_n(x) of the oscillator with frequency
/// omega (hbar = m = 1 scaled by mass*omega/hbar). Stable three-term recurrence.
double hermite_function(int n, double x, double omega = 1.0, double mass = 1.0, double hbar = 1.0);

/// Oscillator eigenstate n sampled on a 1D grid (analytic normalization).
Wavefunction harmonic_eigenstate(const Grid& grid, int n, double omega = 1.0, double center = 0.0);

/// Gaussian packet exp(-(x-x0)^2/(4 sigma^2) + i k0 x), |psi|^2 has std sigma.
Wavefunction gaussian(const Grid& grid, double x0, double sigma, double k0 = 0.0);

/// Coherent state of the unit oscillator at time t, released from rest at x0:
/// centre x0 cos t, momentum -x0 sin t, including the exact global phase.
Wavefunction coherent_state(const Grid& grid, double x0, double t = 0.0);

/// exp(i k x) with k = 2 pi n / L, normalized on the grid.
Wavefunction plane_wave(const Grid& grid, int n);

/// 2D state (x + i s y)^|l| exp(-r^2/2) with s = sign(l), centred at c,
/// normalized on the grid. For the unit trap this is an L_z = l eigenstate.
Wavefunction vortex(const Grid& grid, int l, Point c = {0.0, 0.0});

/// Same as vortex() but without normalization.
Wavefunction vortex_unnormalized(const Grid& grid, int l, Point c = {0.0, 0.0});

/// Product Gaussian ground state of the 2D unit trap.
Wavefunction ground_state_2d(const Grid& grid);

} // namespace nodelab::states
