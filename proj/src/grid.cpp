#include "nodelab/grid.hpp"
#include "nodelab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace nodelab {

namespace {

void check_axis(const Axis& a)
{
    if (a.points < 8) {
        throw std::invalid_argument("grid axis needs at least 8 points, got " + std::to_string(a.points));
    }
    if (!(a.hi > a.lo) || !std::isfinite(a.lo) || !std::isfinite(a.hi)) {
        throw std::invalid_argument("grid axis extent must be a finite interval with hi > lo");
    }
}

void require_same_grid(const Wavefunction& a, const Wavefunction& b)
{
    if (!(a.grid() == b.grid())) {
        throw std::invalid_argument("grid mismatch");
    }
}

} // namespace

Grid::Grid(int dim, std::array<Axis, 2> axes, bool periodic)
    : dim_(dim), axes_(axes), periodic_(periodic)
{
    for (int j = 0; j < dim_; ++j) {
        check_axis(axes_[static_cast<std::size_t>(j)]);
    }
}

Grid Grid::line(std::size_t n, double lo, double hi, bool periodic)
{
    return Grid(1, {Axis{n, lo, hi}, Axis{1, 0.0, 1.0}}, periodic);
}

Grid Grid::plane(Axis x, Axis y, bool periodic)
{
    return Grid(2, {x, y}, periodic);
}

Grid Grid::square(std::size_t n, double lo, double hi, bool periodic)
{
    return plane(Axis{n, lo, hi}, Axis{n, lo, hi}, periodic);
}

std::size_t Grid::size() const
{
    return dim_ == 1 ? axes_[0].points : axes_[0].points * axes_[1].points;
}

double Grid::cell_volume() const
{
    return dim_ == 1 ? axes_[0].spacing() : axes_[0].spacing() * axes_[1].spacing();
}

std::array<std::size_t, 2> Grid::unflatten(std::size_t flat) const
{
    if (dim_ == 1) {
        return {flat, 0};
    }
    return {flat / axes_[1].points, flat % axes_[1].points};
}

Point Grid::coords(std::size_t flat) const
{
    const auto [ix, iy] = unflatten(flat);
    return {axes_[0].coord(ix), dim_ == 2 ? axes_[1].coord(iy) : 0.0};
}

std::size_t Grid::nearest(const Point& p) const
{
    std::array<std::size_t, 2> idx{0, 0};
    for (int j = 0; j < dim_; ++j) {
        const Axis& a = axis(j);
        const auto n = static_cast<long>(a.points);
        long i = std::lround((p[static_cast<std::size_t>(j)] - a.lo) / a.spacing());
        if (periodic_) {
            i = ((i % n) + n) % n;
        } else {
            i = std::clamp(i, 0L, n - 1);
        }
        idx[static_cast<std::size_t>(j)] = static_cast<std::size_t>(i);
    }
    return index(idx[0], idx[1]);
}

Wavefunction::Wavefunction(Grid grid, std::vector<cplx> amplitudes)
    : grid_(std::move(grid)), amps_(std::move(amplitudes))
{
    if (amps_.size() != grid_.size()) {
        throw std::invalid_argument("amplitude count " + std::to_string(amps_.size()) +
                                    " does not match grid size " + std::to_string(grid_.size()));
    }
    for (const cplx& a : amps_) {
        if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
            throw std::invalid_argument("non-finite amplitude");
        }
    }
}

std::vector<double> Wavefunction::density() const
{
    std::vector<double> rho(amps_.size());
    for (std::size_t i = 0; i < rho.size(); ++i) {
        rho[i] = std::norm(amps_[i]);
    }
    return rho;
}

bool Wavefunction::is_normalized(double tol) const
{
    return std::abs(norm_squared(*this) - 1.0) < tol;
}

std::vector<double> PotentialSpec::sample(const Grid& grid) const
{
    if (!(mass > 0.0)) {
        throw std::invalid_argument("mass must be positive");
    }
    std::vector<double> v(grid.size(), 0.0);
    if (const auto* h = std::get_if<HarmonicPotential>(&kind)) {
        const double k = 0.5 * mass * h->omega * h->omega;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const Point p = grid.coords(i);
            double r2 = (p[0] - h->center[0]) * (p[0] - h->center[0]);
            if (grid.dim() == 2) {
                r2 += (p[1] - h->center[1]) * (p[1] - h->center[1]);
            }
            v[i] = k * r2;
        }
    } else if (const auto* t = std::get_if<TabulatedPotential>(&kind)) {
        if (t->values.size() != grid.size()) {
            throw std::invalid_argument("tabulated potential size does not match grid");
        }
        for (double x : t->values) {
            if (!std::isfinite(x)) {
                throw std::invalid_argument("tabulated potential has non-finite values");
            }
        }
        v = t->values;
    }
    return v;
}

double norm_squared(const Wavefunction& psi)
{
    double s = 0.0;
    for (const cplx& a : psi.values()) {
        s += std::norm(a);
    }
    return s * psi.grid().cell_volume();
}

double norm(const Wavefunction& psi)
{
    return std::sqrt(norm_squared(psi));
}

Wavefunction normalize(const Wavefunction& psi)
{
    const double n = norm(psi);
    if (!(n > 0.0)) {
        throw std::domain_error("zero norm");
    }
    if (n == 1.0) {
        return psi;
    }
    return scale(psi, 1.0 / n);
}

cplx inner_product(const Wavefunction& psi, const Wavefunction& phi)
{
    require_same_grid(psi, phi);
    cplx s = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
        s += std::conj(psi[i]) * phi[i];
    }
    return s * psi.grid().cell_volume();
}

Wavefunction scale(const Wavefunction& psi, cplx factor)
{
    std::vector<cplx> a = psi.values();
    for (cplx& x : a) {
        x *= factor;
    }
    return Wavefunction(psi.grid(), std::move(a));
}

Wavefunction add(const Wavefunction& a, const Wavefunction& b)
{
    require_same_grid(a, b);
    std::vector<cplx> s = a.values();
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] += b[i];
    }
    return Wavefunction(a.grid(), std::move(s));
}

Wavefunction conjugate(const Wavefunction& psi)
{
    std::vector<cplx> a = psi.values();
    for (cplx& x : a) {
        x = std::conj(x);
    }
    return Wavefunction(psi.grid(), std::move(a));
}

double kinetic_energy(const Wavefunction& psi, double mass, double hbar)
{
    const auto lap = spectral_laplacian(psi.grid(), psi.values());
    cplx s = 0.0;
    for (std::size_t i = 0; i < lap.size(); ++i) {
        s += std::conj(psi[i]) * lap[i];
    }
    return -hbar * hbar / (2.0 * mass) * s.real() * psi.grid().cell_volume();
}

double kinetic_energy_fd(const Wavefunction& psi, double mass, double hbar)
{
    const auto lap = centered_laplacian(psi.grid(), psi.values());
    cplx s = 0.0;
    for (std::size_t i = 0; i < lap.size(); ++i) {
        s += std::conj(psi[i]) * lap[i];
    }
    return -hbar * hbar / (2.0 * mass) * s.real() * psi.grid().cell_volume();
}

double total_energy(const Wavefunction& psi, const PotentialSpec& V, double hbar)
{
    if (!psi.is_normalized(1e-10)) {
        throw std::invalid_argument("total_energy requires a normalized state");
    }
    if (!psi.grid().periodic()) {
        throw std::invalid_argument("total_energy requires a periodic grid");
    }
    const auto pot = V.sample(psi.grid());
    double ev = 0.0;
    for (std::size_t i = 0; i < pot.size(); ++i) {
        ev += pot[i] * std::norm(psi[i]);
    }
    return kinetic_energy(psi, V.mass, hbar) + ev * psi.grid().cell_volume();
}

bool Region::contains(const Point& p, int dim) const
{
    const bool in_x = p[0] >= lo[0] && p[0] <= hi[0];
    return dim == 1 ? in_x : in_x && p[1] >= lo[1] && p[1] <= hi[1];
}

std::pair<double, std::size_t> min_over(const Grid& grid, const std::vector<double>& rho,
                                        const std::optional<Region>& roi)
{
    double best = std::numeric_limits<double>::infinity();
    std::size_t at = grid.size();
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (roi && !roi->contains(grid.coords(i), grid.dim())) {
            continue;
        }
        if (rho[i] < best) {
            best = rho[i];
            at = i;
        }
    }
    if (at == grid.size()) {
        throw std::invalid_argument("region contains no grid points");
    }
    return {best, at};
}

} // namespace nodelab
