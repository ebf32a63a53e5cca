#pragma once

#include "nodelab/contour.hpp"
#include "nodelab/grid.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace nodelab {

/// Differentiation scheme. `automatic` picks spectral on periodic grids and,
/// for the quantum potential, falls back to centered differences unless
/// sqrt(rho) is band-limited on the grid (it has a kink at a node).
enum class Scheme { automatic, centered, spectral };

struct MadelungOptions {
    double hbar = 1.0;
    double mass = 1.0;
    /// A point is a node when rho < zero_threshold * mean(rho).
    double zero_threshold = 1e-12;
    Scheme gradient = Scheme::automatic;
    Scheme laplacian = Scheme::automatic;
};

/// Madelung variables of a wave function. Undefined entries (v, Q at nodes)
/// hold NaN and have valid == 0.
struct MadelungFields {
    Grid grid;
    double hbar = 1.0;
    double mass = 1.0;
    std::vector<double> rho;
    std::vector<double> S;
    std::array<std::vector<double>, 2> v;
    std::vector<double> Q;
    std::vector<std::uint8_t> valid;

    bool all_valid() const;
};

std::vector<std::uint8_t> node_mask(std::span<const double> rho, double zero_threshold);

/// psi -> (rho, S, v, Q). Velocity is (hbar/m) Im(grad psi / psi), which needs
/// no phase unwrapping. Throws std::domain_error for an identically zero psi.
MadelungFields decompose(const Wavefunction& psi, const MadelungOptions& opts = {});

/// sqrt(rho) exp(i S / hbar). Throws std::domain_error("zeros present:
/// reconstruction ill-defined") if any point is masked.
Wavefunction reconstruct(const MadelungFields& fields);

/// Q = -(hbar^2/2m) Lap(sqrt rho)/sqrt rho on unmasked points, NaN elsewhere.
/// Throws on negative rho.
std::vector<double> quantum_potential(const Grid& grid, std::span<const double> rho, const MadelungOptions& opts = {});

/// Pointwise residual dS/dt + |grad S|^2/2m + V + Q of the quantum
/// Hamilton-Jacobi equation between two time slices. Spatial terms are
/// averaged over both slices (centred in time). NaN where either slice has a
/// node. Throws std::domain_error("dt too large") if the phase moves by more
/// than pi/2 at a valid point.
std::vector<double> hj_residual(const Wavefunction& psi_t, const Wavefunction& psi_next, const PotentialSpec& V, double dt,
                                MadelungOptions opts = {});

/// Pointwise d rho/dt + div(rho v) between two time slices (centred in time).
std::vector<double> continuity_residual(const Wavefunction& psi_t, const Wavefunction& psi_next, double dt,
                                        const MadelungOptions& opts = {});

/// Winding number of psi around the loop: (1/2pi) * sum of wrapped phase
/// differences. Throws std::domain_error("contour through node") if the loop
/// touches a point with rho < zero_threshold * mean(rho).
int circulation(const Wavefunction& psi, const Contour& loop, double zero_threshold = 1e-12);

/// (m / 2 pi hbar) * loop integral of v.dl by the trapezoid rule.
double flow_circulation(const MadelungFields& fields, const Contour& loop);

struct FlowReconstruction {
    Wavefunction psi;
    /// Largest distance of a cycle holonomy m * loop integral(v.dl) from the
    /// nearest multiple of 2 pi hbar, over the fundamental cycles of the tree.
    double holonomy_defect = 0.0;
    std::size_t cycles = 0;
};

/// Integrates S = m * integral(v.dl) over a breadth-first spanning tree of the
/// unmasked points rooted at `base` and rebuilds psi = sqrt(rho) exp(iS/hbar).
/// Masked points get psi = 0. Throws if base is masked or part of the
/// unmasked region is unreachable from it.
FlowReconstruction reconstruct_from_flow(const MadelungFields& fields, std::size_t base);

/// CSV: index,x[,y],rho,S,vx[,vy],Q,valid
void write_fields_csv(const std::filesystem::path& path, const MadelungFields& fields);

} // namespace nodelab
