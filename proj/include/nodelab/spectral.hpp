#pragma once

#include "nodelab/grid.hpp"

#include <memory>
#include <vector>

namespace nodelab {

/// Wavenumbers 2*pi*n/L in FFT order (n = 0, 1, ..., N/2-1, -N/2, ..., -1).
std::vector<double> wavenumbers(const Axis& axis);

/// In-place complex DFT over a grid, backed by FFTW with FFTW_ESTIMATE plans
/// so that results are reproducible run to run. The inverse is normalized.
class FourierTransform {
public:
    explicit FourierTransform(const Grid& grid);
    ~FourierTransform();
    FourierTransform(const FourierTransform&) = delete;
    FourierTransform& operator=(const FourierTransform&) = delete;
    FourierTransform(FourierTransform&&) noexcept;
    FourierTransform& operator=(FourierTransform&&) noexcept;

    const Grid& grid() const;
    std::span<cplx> buffer();

    void forward();
    void backward();

private:
    struct Plans;
    std::unique_ptr<Plans> plans_;
};

/// d/dx_axis of a periodic field, computed spectrally. The Nyquist mode is
/// dropped for the odd derivative.
std::vector<cplx> spectral_derivative(const Grid& grid, std::span<const cplx> f, int axis);

/// Laplacian of a periodic field, computed spectrally.
std::vector<cplx> spectral_laplacian(const Grid& grid, std::span<const cplx> f);

/// Centered-difference first derivative; periodic wrap, or one-sided at the
/// ends of a non-periodic axis.
std::vector<cplx> centered_derivative(const Grid& grid, std::span<const cplx> f, int axis);

/// Centered 3-point Laplacian per axis with periodic wrap (second-order
/// one-sided stencil at non-periodic ends).
std::vector<cplx> centered_laplacian(const Grid& grid, std::span<const cplx> f);

/// Band-limited (trigonometric) interpolant of a periodic field, evaluated at
/// arbitrary points. Cost is O(N) per point after an O(N log N) setup.
class TrigInterpolant {
public:
    explicit TrigInterpolant(const Wavefunction& psi);
    cplx operator()(const Point& p) const;
    /// Values on the tensor lattice xs x ys, row-major (ys ignored in 1D).
    std::vector<cplx> lattice(const std::vector<double>& xs, const std::vector<double>& ys) const;

private:
    Grid grid_;
    std::vector<cplx> coeffs_;
};

} // namespace nodelab
