#include "nodelab/evolve.hpp"
#include "nodelab/io.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace nodelab {

double max_kinetic_eigenvalue(const Grid& grid, double mass, double hbar)
{
    double k2 = 0.0;
    for (int a = 0; a < grid.dim(); ++a) {
        const double kmax = std::numbers::pi / grid.spacing(a);
        k2 += kmax * kmax;
    }
    return hbar * hbar * k2 / (2.0 * mass);
}

void validate(const EvolutionConfig& cfg, const Grid& grid)
{
    if (!(cfg.dt > 0.0) || cfg.steps == 0 || cfg.record_every == 0) {
        throw std::invalid_argument("dt, steps and record_every must be positive");
    }
    if (!grid.periodic()) {
        throw std::invalid_argument("evolution needs a periodic grid");
    }
    if (cfg.dt * max_kinetic_eigenvalue(grid, cfg.V.mass, cfg.hbar) / cfg.hbar >= 0.5) {
        throw std::invalid_argument("unstable dt");
    }
}

SplitStepper::SplitStepper(const Grid& grid, const PotentialSpec& V, double dt, double hbar)
    : grid_(grid), dt_(dt), ft_(grid)
{
    if (!grid.periodic()) {
        throw std::invalid_argument("evolution needs a periodic grid");
    }
    const auto v = V.sample(grid);
    half_potential_.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        half_potential_[i] = std::polar(1.0, -0.5 * v[i] * dt / hbar);
    }
    const auto kx = wavenumbers(grid.axis(0));
    const auto ky = grid.dim() == 2 ? wavenumbers(grid.axis(1)) : std::vector<double>{0.0};
    kinetic_.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto [ix, iy] = grid.unflatten(i);
        const double k2 = kx[ix] * kx[ix] + ky[iy] * ky[iy];
        kinetic_[i] = std::polar(1.0, -hbar * k2 * dt / (2.0 * V.mass));
    }
}

void SplitStepper::step(std::vector<cplx>& amps, std::size_t n)
{
    if (amps.size() != grid_.size()) {
        throw std::invalid_argument("amplitude count does not match grid");
    }
    auto buf = ft_.buffer();
    std::copy(amps.begin(), amps.end(), buf.begin());
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t i = 0; i < buf.size(); ++i) {
            buf[i] *= half_potential_[i];
        }
        ft_.forward();
        for (std::size_t i = 0; i < buf.size(); ++i) {
            buf[i] *= kinetic_[i];
        }
        ft_.backward();
        for (std::size_t i = 0; i < buf.size(); ++i) {
            buf[i] *= half_potential_[i];
        }
    }
    std::copy(buf.begin(), buf.end(), amps.begin());
}

Wavefunction SplitStepper::advance(const Wavefunction& psi, std::size_t n)
{
    if (!(psi.grid() == grid_)) {
        throw std::invalid_argument("grid mismatch");
    }
    auto a = psi.values();
    step(a, n);
    return Wavefunction(grid_, std::move(a));
}

void evolve(const Wavefunction& psi0, const EvolutionConfig& cfg,
            const std::function<void(double, const Wavefunction&)>& observer)
{
    validate(cfg, psi0.grid());
    if (!psi0.is_normalized(1e-10)) {
        throw std::invalid_argument("initial state must be normalized");
    }
    SplitStepper stepper(psi0.grid(), cfg.V, cfg.dt, cfg.hbar);
    auto amps = psi0.values();
    observer(0.0, psi0);
    std::size_t done = 0;
    while (done < cfg.steps) {
        const std::size_t n = std::min(cfg.record_every, cfg.steps - done);
        stepper.step(amps, n);
        done += n;
        if (n == cfg.record_every) {
            observer(static_cast<double>(done) * cfg.dt, Wavefunction(psi0.grid(), amps));
        }
    }
}

std::vector<Snapshot> evolve(const Wavefunction& psi0, const EvolutionConfig& cfg)
{
    std::vector<Snapshot> out;
    evolve(psi0, cfg, [&](double t, const Wavefunction& psi) { out.push_back({t, psi}); });
    return out;
}

std::vector<DensitySample> min_density_series(const Wavefunction& psi0, const EvolutionConfig& cfg,
                                              const std::optional<Region>& roi)
{
    std::vector<DensitySample> out;
    evolve(psi0, cfg, [&](double t, const Wavefunction& psi) {
        const auto [m, at] = min_over(psi.grid(), psi.density(), roi);
        out.push_back({t, m, psi.grid().coords(at), norm(psi), total_energy(psi, cfg.V, cfg.hbar)});
    });
    return out;
}

void write_series_csv(const std::filesystem::path& path, const std::vector<DensitySample>& series, int dim)
{
    if (dim == 1) {
        io::CsvWriter w(path, {"t", "min_rho", "argmin_x", "norm", "energy"});
        for (const auto& s : series) {
            w.row(s.t, s.min_rho, s.argmin[0], s.norm, s.energy);
        }
    } else {
        io::CsvWriter w(path, {"t", "min_rho", "argmin_x", "argmin_y", "norm", "energy"});
        for (const auto& s : series) {
            w.row(s.t, s.min_rho, s.argmin[0], s.argmin[1], s.norm, s.energy);
        }
    }
}

} // namespace nodelab
