#pragma once

#include "nodelab/grid.hpp"
#include "nodelab/io.hpp"
#include "nodelab/zeros.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace nodelab {

/// Gaussian pointer states chi_i(q) = (pi w^2)^(-1/4) exp(-(q - d_i)^2 / 2w^2),
/// normalized on the device grid.
struct PointerFamily {
    std::vector<double> centers;
    double width = 0.5;

    /// Throws std::invalid_argument unless width > 0 and centers strictly increase.
    void validate() const;
    /// n centers spaced by `separation`, symmetric about zero.
    static PointerFamily evenly_spaced(std::size_t n, double separation, double width);
};

/// Joint amplitude Psi(q_sys, q_dev) on a system grid (1D or 2D) times a 1D
/// device grid, stored amplitudes[sys * n_dev + dev].
class BipartiteWavefunction {
public:
    BipartiteWavefunction(Grid sys, Grid dev, std::vector<cplx> amplitudes);

    const Grid& system_grid() const { return sys_; }
    const Grid& device_grid() const { return dev_; }
    const std::vector<cplx>& values() const { return amps_; }
    cplx operator()(std::size_t sys, std::size_t dev) const { return amps_[sys * dev_.size() + dev]; }

    double norm_squared() const;
    /// Reduced device density integral over the system coordinates.
    std::vector<double> device_density() const;

private:
    Grid sys_;
    Grid dev_;
    std::vector<cplx> amps_;
};

/// Psi = sum_i alpha_i psi_i (x) chi_i, normalized. Throws std::invalid_argument
/// when the system states are not orthonormal within 1e-8, when |alpha|^2 does
/// not sum to one within 1e-10, or when the counts disagree.
BipartiteWavefunction entangle(const std::vector<cplx>& alphas, const std::vector<Wavefunction>& sys_states,
                               const PointerFamily& pointers, const Grid& device_grid);

/// Unnormalized system slice Psi(., q_obs); linear in Psi.
Wavefunction device_slice(const BipartiteWavefunction& psi, double q_obs);

/// Normalized system slice Psi(., q_obs). Off-grid observations are
/// interpolated along the device axis (trigonometric on periodic grids,
/// linear otherwise). Throws std::domain_error("observation in null region")
/// for a vanishing slice.
Wavefunction condition(const BipartiteWavefunction& psi, double q_obs);

/// Unit-magnitude coefficients 1/sqrt(n) with phases drawn from the seed.
std::vector<cplx> random_phase_alphas(std::size_t n, std::uint64_t seed);

struct PreparationReport {
    double fidelity = 0.0;
    double delta_norm = 0.0;
    double min_density = 0.0;
    std::vector<PlaquetteCharge> charges;
    Wavefunction prepared;
};

/// entangle, then condition, then compare with sys_states[target].
/// delta_norm = min over theta of ||psi_prep - e^{i theta} psi_target||.
/// min_density and charges (2D only) are restricted to roi when given.
PreparationReport prepare_and_probe(const std::vector<cplx>& alphas, const std::vector<Wavefunction>& sys_states,
                                    const PointerFamily& pointers, const Grid& device_grid, double q_obs,
                                    std::size_t target, const std::optional<Region>& roi = std::nullopt);

/// Triangle-inequality bound sum_{j != i} |alpha_j chi_j(q)| / |alpha_i chi_i(q)|
/// with analytic Gaussians.
double contamination_bound(const std::vector<cplx>& alphas, const PointerFamily& pointers, double q_obs,
                           std::size_t target);

/// Analytic pointer amplitude chi_i(q).
double pointer_amplitude(const PointerFamily& pointers, std::size_t i, double q);

/// {fidelity, delta_norm, min_density, charges[], params}
io::json report_to_json(const PreparationReport& report, const io::json& params);

} // namespace nodelab
