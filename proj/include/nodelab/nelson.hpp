#pragma once

#include "nodelab/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

namespace nodelab {

struct NelsonConfig {
    /// Diffusion coefficient hbar / 2m.
    double nu = 0.5;
    double dt = 1e-3;
    std::size_t n_paths = 1000;
    std::size_t n_steps = 1000;
    std::uint64_t seed = 0;
    /// Largest drift speed, in grid cells per unit time.
    double drift_clamp = 1e3;
    std::size_t record_every = 1000;
    int jobs = 1;
};

/// Throws std::invalid_argument unless nu > 0, dt > 0, counts positive and
/// drift_clamp * dt <= 1 (a clamped step never crosses more than one cell).
void validate(const NelsonConfig& cfg);

/// Forward drift b = v + nu grad(rho)/rho = 2 nu (Re + Im)(grad psi / psi) of
/// a fixed wave function. Values are precomputed on the grid and
/// interpolated (bi)linearly; in cells containing a zero or a masked corner
/// psi and grad psi are interpolated separately and divided instead.
class DriftField {
public:
    DriftField(const Wavefunction& psi, double nu, double drift_clamp = 1e3, double zero_threshold = 1e-12);

    /// Throws std::out_of_range for x outside the grid box.
    Point operator()(const Point& x) const;

    const Grid& grid() const { return grid_; }

private:
    std::size_t cell_of(const Point& x, std::array<double, 2>& frac, std::array<std::size_t, 4>& corners) const;

    Grid grid_;
    double nu_;
    double clamp_speed_;
    std::vector<cplx> psi_;
    std::array<std::vector<cplx>, 2> grad_;
    std::array<std::vector<double>, 2> b_;
    std::vector<std::uint8_t> singular_cell_;
};

/// b(x) for psi; convenience wrapper building a DriftField.
Point drift(const Wavefunction& psi, const Point& x, double nu = 0.5, double drift_clamp = 1e3);

/// Initial positions: sampled from |psi|^2 (piecewise (bi)linear density:
/// inverse CDF in 1D, rejection in 2D) or given explicitly (one per path,
/// cycled if fewer).
struct FromDensity {};
using InitSpec = std::variant<FromDensity, std::vector<Point>>;

struct TrajectoryEnsemble {
    int dim = 1;
    std::size_t n_paths = 0;
    std::vector<double> times;
    /// positions[(record * n_paths + path) * dim + axis]
    std::vector<double> positions;
    std::vector<std::uint8_t> alive;

    std::size_t records() const { return times.size(); }
    Point position(std::size_t record, std::size_t path) const;
    /// Positions of alive paths at one record.
    std::vector<Point> slice(std::size_t record) const;
};

/// Euler-Maruyama X += b(X) dt + sqrt(2 nu dt) xi; periodic wrap on periodic
/// grids, paths leaving an open grid are marked dead and frozen. Bit-identical
/// for equal (seed, config) regardless of the thread count.
TrajectoryEnsemble simulate(const Wavefunction& psi, const NelsonConfig& cfg, const InitSpec& init = FromDensity{});

/// n samples from |psi|^2 using the stream of (seed, path).
std::vector<Point> sample_density(const Wavefunction& psi, std::size_t n, std::uint64_t seed);

/// 1D: Kolmogorov-Smirnov distance between the samples and the CDF of |psi|^2.
/// 2D: chi-square p-value over a bins x bins histogram of the grid box.
/// Throws std::invalid_argument on an empty sample.
double equivariance_stat(const std::vector<Point>& samples, const Wavefunction& psi, std::size_t bins = 32);

/// Probability mass of |psi|^2 (normalized) inside the disc (2D) or interval
/// (1D) of radius r about c, by midpoint quadrature on subdivided cells.
double mass_within(const Wavefunction& psi, const Point& c, double r, int subdivisions = 8);

/// Fraction of samples within distance r of c.
double fraction_within(const std::vector<Point>& samples, const Point& c, double r, int dim);

/// CSV: path,t,x[,y],alive (first max_paths paths).
void write_ensemble_csv(const std::filesystem::path& path, const TrajectoryEnsemble& ens, std::size_t max_paths);

} // namespace nodelab
