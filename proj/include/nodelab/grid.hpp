#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <optional>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace nodelab {

using cplx = std::complex<double>;
using Point = std::array<double, 2>;

/// One axis of a uniform grid covering the half-open interval [lo, hi).
struct Axis {
    std::size_t points = 0;
    double lo = 0.0;
    double hi = 0.0;

    double spacing() const { return (hi - lo) / static_cast<double>(points); }
    double length() const { return hi - lo; }
    double coord(std::size_t i) const { return lo + static_cast<double>(i) * spacing(); }

    bool operator==(const Axis&) const = default;
};

/// Uniform 1D or 2D grid. Amplitudes are laid out row-major with x as the
/// slow index: flat = ix * ny + iy.
class Grid {
public:
    static Grid line(std::size_t n, double lo, double hi, bool periodic = true);
    static Grid plane(Axis x, Axis y, bool periodic = true);
    static Grid square(std::size_t n, double lo, double hi, bool periodic = true);

    int dim() const { return dim_; }
    bool periodic() const { return periodic_; }
    const Axis& axis(int j) const { return axes_[static_cast<std::size_t>(j)]; }
    std::size_t points(int j) const { return axis(j).points; }
    double spacing(int j) const { return axis(j).spacing(); }
    std::size_t size() const;
    double cell_volume() const;

    std::size_t index(std::size_t ix, std::size_t iy = 0) const
    {
        return dim_ == 1 ? ix : ix * axes_[1].points + iy;
    }
    std::array<std::size_t, 2> unflatten(std::size_t flat) const;
    Point coords(std::size_t flat) const;

    /// Grid index of the point nearest to p (wrapped on periodic grids,
    /// clamped otherwise).
    std::size_t nearest(const Point& p) const;

    bool operator==(const Grid&) const = default;

private:
    Grid(int dim, std::array<Axis, 2> axes, bool periodic);

    int dim_ = 1;
    std::array<Axis, 2> axes_{};
    bool periodic_ = true;
};

/// Complex amplitude field on a grid. Immutable after construction.
class Wavefunction {
public:
    Wavefunction(Grid grid, std::vector<cplx> amplitudes);

    template <class F>
    static Wavefunction sample(const Grid& grid, F&& f)
    {
        std::vector<cplx> a(grid.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            const Point p = grid.coords(i);
            if constexpr (std::is_invocable_v<F, double>) {
                a[i] = f(p[0]);
            } else {
                a[i] = f(p[0], p[1]);
            }
        }
        return Wavefunction(grid, std::move(a));
    }

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return amps_.size(); }
    const std::vector<cplx>& values() const { return amps_; }
    const cplx& operator[](std::size_t i) const { return amps_[i]; }

    std::vector<double> density() const;
    bool is_normalized(double tol = 1e-12) const;

private:
    Grid grid_;
    std::vector<cplx> amps_;
};

struct FreePotential {};

struct HarmonicPotential {
    double omega = 1.0;
    Point center{0.0, 0.0};
};

struct TabulatedPotential {
    std::vector<double> values;
};

/// External potential V(q) together with the particle mass m.
struct PotentialSpec {
    std::variant<FreePotential, HarmonicPotential, TabulatedPotential> kind = FreePotential{};
    double mass = 1.0;

    static PotentialSpec free(double mass = 1.0) { return {FreePotential{}, mass}; }
    static PotentialSpec harmonic(double omega = 1.0, Point center = {0.0, 0.0}, double mass = 1.0)
    {
        return {HarmonicPotential{omega, center}, mass};
    }
    static PotentialSpec tabulated(std::vector<double> values, double mass = 1.0)
    {
        return {TabulatedPotential{std::move(values)}, mass};
    }

    /// V evaluated at every grid point. Throws if a table does not fit the grid.
    std::vector<double> sample(const Grid& grid) const;
};

/// Axis-aligned box; a 1D box ignores the y bounds.
struct Region {
    Point lo{-1e300, -1e300};
    Point hi{1e300, 1e300};

    bool contains(const Point& p, int dim) const;
};

/// Minimum of rho over grid points inside roi; returns {value, flat index}.
std::pair<double, std::size_t> min_over(const Grid& grid, const std::vector<double>& rho,
                                        const std::optional<Region>& roi = std::nullopt);

double norm_squared(const Wavefunction& psi);
double norm(const Wavefunction& psi);

/// psi / ||psi||. Throws std::domain_error("zero norm") for a null field.
Wavefunction normalize(const Wavefunction& psi);

/// <psi, phi> = sum conj(psi_i) phi_i * cell volume.
cplx inner_product(const Wavefunction& psi, const Wavefunction& phi);

Wavefunction scale(const Wavefunction& psi, cplx factor);
Wavefunction add(const Wavefunction& a, const Wavefunction& b);
Wavefunction conjugate(const Wavefunction& psi);

/// Kinetic energy <psi, -hbar^2/(2m) Laplacian psi>, evaluated spectrally.
double kinetic_energy(const Wavefunction& psi, double mass = 1.0, double hbar = 1.0);

/// Kinetic energy using the centered 3-point Laplacian (periodic wrap).
double kinetic_energy_fd(const Wavefunction& psi, double mass = 1.0, double hbar = 1.0);

/// <H> for a normalized state on a periodic grid. Throws on a
/// non-normalized input or a non-periodic grid.
double total_energy(const Wavefunction& psi, const PotentialSpec& V, double hbar = 1.0);

} // namespace nodelab
