#include "nodelab/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace nodelab {

namespace {

// The FFTW planner is not thread-safe; execution of an existing plan is.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

} // namespace

std::vector<double> wavenumbers(const Axis& axis)
{
    const std::size_t n = axis.points;
    const double dk = 2.0 * std::numbers::pi / axis.length();
    std::vector<double> k(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto m = static_cast<double>(i);
        k[i] = (i < (n + 1) / 2 ? m : m - static_cast<double>(n)) * dk;
    }
    return k;
}

struct FourierTransform::Plans {
    Grid grid;
    fftw_complex* data = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    double inv_n = 1.0;

    explicit Plans(const Grid& g) : grid(g)
    {
        const std::size_t n = g.size();
        inv_n = 1.0 / static_cast<double>(n);
        std::lock_guard lock(planner_mutex());
        data = fftw_alloc_complex(n);
        if (g.dim() == 1) {
            const int n0 = static_cast<int>(g.points(0));
            fwd = fftw_plan_dft_1d(n0, data, data, FFTW_FORWARD, FFTW_ESTIMATE);
            bwd = fftw_plan_dft_1d(n0, data, data, FFTW_BACKWARD, FFTW_ESTIMATE);
        } else {
            const int n0 = static_cast<int>(g.points(0));
            const int n1 = static_cast<int>(g.points(1));
            fwd = fftw_plan_dft_2d(n0, n1, data, data, FFTW_FORWARD, FFTW_ESTIMATE);
            bwd = fftw_plan_dft_2d(n0, n1, data, data, FFTW_BACKWARD, FFTW_ESTIMATE);
        }
        if (fwd == nullptr || bwd == nullptr) {
            throw std::runtime_error("FFTW plan creation failed");
        }
    }

    ~Plans()
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
        fftw_free(data);
    }
};

FourierTransform::FourierTransform(const Grid& grid) : plans_(std::make_unique<Plans>(grid)) {}
FourierTransform::~FourierTransform() = default;
FourierTransform::FourierTransform(FourierTransform&&) noexcept = default;
FourierTransform& FourierTransform::operator=(FourierTransform&&) noexcept = default;

const Grid& FourierTransform::grid() const
{
    return plans_->grid;
}

std::span<cplx> FourierTransform::buffer()
{
    return {reinterpret_cast<cplx*>(plans_->data), plans_->grid.size()};
}

void FourierTransform::forward()
{
    fftw_execute(plans_->fwd);
}

void FourierTransform::backward()
{
    fftw_execute(plans_->bwd);
    for (cplx& x : buffer()) {
        x *= plans_->inv_n;
    }
}

namespace {

template <class Multiplier>
std::vector<cplx> spectral_apply(const Grid& grid, std::span<const cplx> f, Multiplier&& mult)
{
    if (f.size() != grid.size()) {
        throw std::invalid_argument("field size does not match grid");
    }
    FourierTransform fft(grid);
    auto buf = fft.buffer();
    std::copy(f.begin(), f.end(), buf.begin());
    fft.forward();
    const auto kx = wavenumbers(grid.axis(0));
    const auto ky = grid.dim() == 2 ? wavenumbers(grid.axis(1)) : std::vector<double>{0.0};
    const std::size_t ny = ky.size();
    for (std::size_t ix = 0; ix < kx.size(); ++ix) {
        for (std::size_t iy = 0; iy < ny; ++iy) {
            buf[ix * ny + iy] *= mult(ix, iy, kx[ix], ky[iy]);
        }
    }
    fft.backward();
    return {buf.begin(), buf.end()};
}

} // namespace

std::vector<cplx> spectral_derivative(const Grid& grid, std::span<const cplx> f, int axis)
{
    const std::size_t nx = grid.points(0);
    const std::size_t ny = grid.dim() == 2 ? grid.points(1) : 1;
    return spectral_apply(grid, f, [&](std::size_t ix, std::size_t iy, double kx, double ky) {
        if (axis == 0) {
            return (nx % 2 == 0 && ix == nx / 2) ? cplx{0.0} : cplx{0.0, kx};
        }
        return (ny % 2 == 0 && iy == ny / 2) ? cplx{0.0} : cplx{0.0, ky};
    });
}

std::vector<cplx> spectral_laplacian(const Grid& grid, std::span<const cplx> f)
{
    return spectral_apply(grid, f, [](std::size_t, std::size_t, double kx, double ky) {
        return cplx{-(kx * kx + ky * ky)};
    });
}

namespace {

// Offset neighbour along one axis; returns false past a non-periodic edge.
bool neighbour(const Grid& grid, std::size_t flat, int axis, long step, std::size_t& out)
{
    auto idx = grid.unflatten(flat);
    const auto n = static_cast<long>(grid.points(axis));
    long i = static_cast<long>(idx[static_cast<std::size_t>(axis)]) + step;
    if (grid.periodic()) {
        i = ((i % n) + n) % n;
    } else if (i < 0 || i >= n) {
        return false;
    }
    idx[static_cast<std::size_t>(axis)] = static_cast<std::size_t>(i);
    out = grid.index(idx[0], idx[1]);
    return true;
}

} // namespace

std::vector<cplx> centered_derivative(const Grid& grid, std::span<const cplx> f, int axis)
{
    const double h = grid.spacing(axis);
    std::vector<cplx> d(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        std::size_t p = 0;
        std::size_t m = 0;
        const bool has_p = neighbour(grid, i, axis, 1, p);
        const bool has_m = neighbour(grid, i, axis, -1, m);
        if (has_p && has_m) {
            d[i] = (f[p] - f[m]) / (2.0 * h);
        } else if (has_p) {
            std::size_t pp = 0;
            neighbour(grid, i, axis, 2, pp);
            d[i] = (-3.0 * f[i] + 4.0 * f[p] - f[pp]) / (2.0 * h);
        } else {
            std::size_t mm = 0;
            neighbour(grid, i, axis, -2, mm);
            d[i] = (3.0 * f[i] - 4.0 * f[m] + f[mm]) / (2.0 * h);
        }
    }
    return d;
}

std::vector<cplx> centered_laplacian(const Grid& grid, std::span<const cplx> f)
{
    std::vector<cplx> lap(f.size(), 0.0);
    for (int axis = 0; axis < grid.dim(); ++axis) {
        const double h2 = grid.spacing(axis) * grid.spacing(axis);
        for (std::size_t i = 0; i < f.size(); ++i) {
            std::size_t p = 0;
            std::size_t m = 0;
            const bool has_p = neighbour(grid, i, axis, 1, p);
            const bool has_m = neighbour(grid, i, axis, -1, m);
            if (has_p && has_m) {
                lap[i] += (f[p] - 2.0 * f[i] + f[m]) / h2;
            } else {
                // Second-order one-sided: (2f0 - 5f1 + 4f2 - f3)/h^2
                const long s = has_p ? 1 : -1;
                std::size_t i1 = 0, i2 = 0, i3 = 0;
                neighbour(grid, i, axis, s, i1);
                neighbour(grid, i, axis, 2 * s, i2);
                neighbour(grid, i, axis, 3 * s, i3);
                lap[i] += (2.0 * f[i] - 5.0 * f[i1] + 4.0 * f[i2] - f[i3]) / h2;
            }
        }
    }
    return lap;
}

TrigInterpolant::TrigInterpolant(const Wavefunction& psi) : grid_(psi.grid())
{
    if (!grid_.periodic()) {
        throw std::invalid_argument("trigonometric interpolation needs a periodic grid");
    }
    FourierTransform fft(grid_);
    auto buf = fft.buffer();
    std::copy(psi.values().begin(), psi.values().end(), buf.begin());
    fft.forward();
    const double inv = 1.0 / static_cast<double>(grid_.size());
    coeffs_.assign(buf.begin(), buf.end());
    for (cplx& c : coeffs_) {
        c *= inv;
    }
}

namespace {

// Basis values e^{ik(x-lo)} for every wavenumber, with the Nyquist term
// replaced by cos so the interpolant of a real field stays real.
std::vector<cplx> axis_basis(const Axis& axis, double x)
{
    const auto k = wavenumbers(axis);
    const std::size_t n = axis.points;
    std::vector<cplx> b(n);
    const double t = x - axis.lo;
    for (std::size_t i = 0; i < n; ++i) {
        if (n % 2 == 0 && i == n / 2) {
            b[i] = std::cos(k[i] * t);
        } else {
            b[i] = std::polar(1.0, k[i] * t);
        }
    }
    return b;
}

} // namespace

cplx TrigInterpolant::operator()(const Point& p) const
{
    const auto bx = axis_basis(grid_.axis(0), p[0]);
    if (grid_.dim() == 1) {
        cplx s = 0.0;
        for (std::size_t i = 0; i < bx.size(); ++i) {
            s += coeffs_[i] * bx[i];
        }
        return s;
    }
    const auto by = axis_basis(grid_.axis(1), p[1]);
    const std::size_t ny = by.size();
    cplx s = 0.0;
    for (std::size_t ix = 0; ix < bx.size(); ++ix) {
        cplx row = 0.0;
        for (std::size_t iy = 0; iy < ny; ++iy) {
            row += coeffs_[ix * ny + iy] * by[iy];
        }
        s += row * bx[ix];
    }
    return s;
}

std::vector<cplx> TrigInterpolant::lattice(const std::vector<double>& xs, const std::vector<double>& ys) const
{
    if (grid_.dim() == 1) {
        std::vector<cplx> out;
        out.reserve(xs.size());
        for (double x : xs) {
            out.push_back((*this)({x, 0.0}));
        }
        return out;
    }
    const std::size_t nx = grid_.points(0);
    const std::size_t ny = grid_.points(1);
    std::vector<std::vector<cplx>> by;
    by.reserve(ys.size());
    for (double y : ys) {
        by.push_back(axis_basis(grid_.axis(1), y));
    }
    std::vector<cplx> out(xs.size() * ys.size());
    std::vector<cplx> col(ny);
    for (std::size_t a = 0; a < xs.size(); ++a) {
        const auto bx = axis_basis(grid_.axis(0), xs[a]);
        std::fill(col.begin(), col.end(), cplx{0.0});
        for (std::size_t ix = 0; ix < nx; ++ix) {
            for (std::size_t iy = 0; iy < ny; ++iy) {
                col[iy] += coeffs_[ix * ny + iy] * bx[ix];
            }
        }
        for (std::size_t b = 0; b < ys.size(); ++b) {
            cplx s = 0.0;
            for (std::size_t iy = 0; iy < ny; ++iy) {
                s += col[iy] * by[b][iy];
            }
            out[a * ys.size() + b] = s;
        }
    }
    return out;
}

} // namespace nodelab
