#pragma once

#include "nodelab/grid.hpp"
#include "nodelab/spectral.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

namespace nodelab {

struct EvolutionConfig {
    double dt = 1e-3;
    std::size_t steps = 1000;
    PotentialSpec V;
    std::size_t record_every = 1;
    double hbar = 1.0;
};

/// Largest eigenvalue of -hbar^2/(2m) Laplacian representable on the grid.
double max_kinetic_eigenvalue(const Grid& grid, double mass = 1.0, double hbar = 1.0);

/// Throws std::invalid_argument("unstable dt") when dt * E_max / hbar >= 0.5,
/// and on non-positive dt, steps or record_every.
void validate(const EvolutionConfig& cfg, const Grid& grid);

/// Strang split-step propagator exp(-iV dt/2) exp(-iT dt) exp(-iV dt/2) on a
/// periodic grid. dt may be negative (backward evolution).
class SplitStepper {
public:
    SplitStepper(const Grid& grid, const PotentialSpec& V, double dt, double hbar = 1.0);

    void step(std::vector<cplx>& amps, std::size_t n = 1);
    Wavefunction advance(const Wavefunction& psi, std::size_t n = 1);

    double dt() const { return dt_; }

private:
    Grid grid_;
    double dt_;
    FourierTransform ft_;
    std::vector<cplx> half_potential_;
    std::vector<cplx> kinetic_;
};

struct Snapshot {
    double t = 0.0;
    Wavefunction psi;
};

/// Calls observer(t, psi) at t = 0 and after every record_every steps.
void evolve(const Wavefunction& psi0, const EvolutionConfig& cfg,
            const std::function<void(double, const Wavefunction&)>& observer);

/// Recorded snapshots including t = 0.
std::vector<Snapshot> evolve(const Wavefunction& psi0, const EvolutionConfig& cfg);

struct DensitySample {
    double t = 0.0;
    double min_rho = 0.0;
    Point argmin{0.0, 0.0};
    double norm = 0.0;
    double energy = 0.0;
};

/// Minimum of |psi|^2 over grid points inside roi (whole grid by default),
/// with norm and energy, at t = 0 and every record_every steps.
std::vector<DensitySample> min_density_series(const Wavefunction& psi0, const EvolutionConfig& cfg,
                                              const std::optional<Region>& roi = std::nullopt);

/// CSV: t,min_rho,argmin_x[,argmin_y],norm,energy
void write_series_csv(const std::filesystem::path& path, const std::vector<DensitySample>& series, int dim);

} // namespace nodelab
