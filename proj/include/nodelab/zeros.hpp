#pragma once

#include "nodelab/contour.hpp"
#include "nodelab/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace nodelab {

/// Nonzero winding around one grid cell. `cell` is the flat index of the
/// cell's lower-left corner; `position` is the bilinear root of (Re, Im).
struct PlaquetteCharge {
    std::size_t cell = 0;
    int charge = 0;
    Point position{0.0, 0.0};
};

struct ChargeOptions {
    /// An edge whose wrapped phase step exceeds this (radians) is ambiguous.
    double ambiguous_step = 0.8 * 3.14159265358979323846;
    /// Bisections of an ambiguous edge on periodic grids, sampled by
    /// trigonometric interpolation.
    int refine_levels = 4;
};

struct ChargeScan {
    std::vector<PlaquetteCharge> charges;
    /// Cells whose charge could not be determined.
    std::vector<std::size_t> unresolved;
};

/// Winding of every grid cell. A grid point where psi is exactly zero makes
/// its four cells ambiguous; they are merged and the charge is the winding
/// around the 2x2 block, placed at that point.
ChargeScan scan_charges(const Wavefunction& psi, const ChargeOptions& opts = {});

std::vector<PlaquetteCharge> plaquette_charges(const Wavefunction& psi, const ChargeOptions& opts = {});

/// Winding of psi around the loop (same as circulation). Throws
/// std::domain_error("contour through node") when the loop touches a zero.
int total_charge(const Wavefunction& psi, const Contour& loop);

/// Sum of the charges whose position the loop encloses.
int enclosed_charge(const std::vector<PlaquetteCharge>& charges, const Contour& loop);

/// Minimum of |psi|^2 over the grid (or over roi) and its flat index.
std::pair<double, std::size_t> min_density(const Wavefunction& psi, const std::optional<Region>& roi = std::nullopt);

/// Root of the bilinear interpolant of four corner values (counter-clockwise
/// from lower left) in unit-square coordinates, clamped to the square.
Point bilinear_root(cplx f00, cplx f10, cplx f11, cplx f01);

struct PerturbationSpec {
    enum class Kind { band_limited, constant };
    Kind kind = Kind::band_limited;
    /// Fourier modes per axis for band-limited fields.
    int bandwidth = 8;
};

/// delta psi with sup-norm 1, deterministic in (seed, trial).
Wavefunction perturbation(const Grid& grid, const PerturbationSpec& spec, std::uint64_t seed, std::uint64_t trial);

struct TrialRecord {
    double epsilon = 0.0;
    std::size_t trial = 0;
    int charge = 0;
    Point zero{0.0, 0.0};
    /// Distance from the unperturbed zero; NaN if no zero was found.
    double displacement = 0.0;
};

struct DisplacementStats {
    double mean = 0.0;
    double max = 0.0;
};

struct StabilityReport {
    std::vector<double> epsilon_values;
    std::size_t trials_per_epsilon = 0;
    std::vector<double> charge_preserved_fraction;
    std::vector<DisplacementStats> displacement_stats;
    double contour_min_density = 0.0;
    std::vector<TrialRecord> trials;
};

/// psi + eps * delta psi for every eps and trial; the same delta psi is used
/// for all eps of a trial. Throws if psi has zero charge on the loop.
StabilityReport stability_scan(const Wavefunction& psi, const PerturbationSpec& perturbations,
                               const std::vector<double>& epsilons, std::size_t trials, const Contour& loop,
                               std::uint64_t seed, int jobs = 1);

/// min over the loop of |psi|^2.
double contour_min_density(const Wavefunction& psi, const Contour& loop);

/// JSON with the StabilityReport fields (trial detail excluded).
void write_stability_json(const std::filesystem::path& path, const StabilityReport& report);

/// CSV: epsilon,trial,charge,zero_x,zero_y,displacement
void write_trials_csv(const std::filesystem::path& path, const StabilityReport& report);

} // namespace nodelab
