#pragma once

#include "nodelab/grid.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <vector>

namespace nodelab::field {

/// Periodic cubic lattice Z_N^d with spacing a and field mass m (hbar = 1).
struct LatticeSpec {
    int dim = 1;
    std::size_t sites = 16;
    double spacing = 1.0;
    double mass = 1.0;

    /// Throws std::invalid_argument unless 1 <= dim <= 3, sites >= 2,
    /// spacing > 0 and mass >= 0.
    void validate() const;
    std::size_t volume_sites() const;
};

enum class Parity { constant, cos, sin };

struct Mode {
    /// Integer wavevector n; k = 2 pi n / (N a), components in (-N/2, N/2].
    std::array<int, 3> n{0, 0, 0};
    Parity parity = Parity::constant;
    std::array<double, 3> k{0.0, 0.0, 0.0};
    double omega = 0.0;
    /// Real profile on the lattice sites, orthonormal under sum a^d f g.
    std::vector<double> profile;
};

/// Normal modes: the constant mode, a cos/sin pair for every wavevector
/// pair {n, -n}, and a single cos mode for self-conjugate n on the Brillouin
/// edge. omega^2 = m^2 + (4/a^2) sum_j sin^2(k_j a / 2).
class ModeBasis {
public:
    explicit ModeBasis(const LatticeSpec& spec);

    const LatticeSpec& spec() const { return spec_; }
    std::size_t size() const { return modes_.size(); }
    const Mode& operator[](std::size_t i) const { return modes_.at(i); }
    const std::vector<Mode>& modes() const { return modes_; }

    /// Index of the mode with wavevector n (or -n) and the given parity.
    /// Throws std::out_of_range when there is none.
    std::size_t find(std::array<int, 3> n, Parity parity) const;

    /// Mode coordinates q_k = sum_x a^d f_k(x) phi(x) of a field configuration.
    std::vector<double> project(const std::vector<double>& phi) const;
    /// Field configuration sum_k q_k f_k(x).
    std::vector<double> synthesize(const std::vector<double>& q) const;

private:
    LatticeSpec spec_;
    std::vector<Mode> modes_;
};

std::shared_ptr<const ModeBasis> build_modes(const LatticeSpec& spec);

/// Coordinate vector in mode space; entries beyond its length are zero.
using ModeCoords = std::vector<double>;

struct FockTerm {
    cplx coeff{1.0, 0.0};
    /// mode index -> occupation n >= 1
    std::map<std::size_t, int> occupation;
};

/// Finite superposition of Fock states over a shared Gaussian vacuum:
/// Psi(q) = Psi_0(q) sum_t c_t prod_k p_{n_k}(sqrt(omega_k) q_k), with p_n the
/// normalized Hermite polynomials. Terms with equal occupations are merged,
/// so the norm is sqrt(sum |c_t|^2).
class FockFunctional {
public:
    FockFunctional(std::shared_ptr<const ModeBasis> basis, std::vector<FockTerm> terms);

    const ModeBasis& basis() const { return *basis_; }
    const std::shared_ptr<const ModeBasis>& basis_ptr() const { return basis_; }
    const std::vector<FockTerm>& terms() const { return terms_; }
    double norm() const;
    bool normalized(double tol = 1e-12) const { return std::abs(norm() - 1.0) <= tol; }

    /// Psi(q). Magnitudes are accumulated in log space, so only the final
    /// exponential can underflow.
    cplx evaluate(const ModeCoords& q) const;
    /// {log |Psi(q)|, Psi(q) / |Psi(q)|}; log is -inf at a zero.
    std::pair<double, cplx> log_evaluate(const ModeCoords& q) const;

private:
    std::shared_ptr<const ModeBasis> basis_;
    std::vector<FockTerm> terms_;
};

/// Gaussian ground state. Throws std::domain_error("massless zero mode")
/// when some omega_k is zero.
FockFunctional vacuum(std::shared_ptr<const ModeBasis> basis);

/// a_k^dagger applied to every term, renormalized. Throws std::out_of_range
/// for an unknown mode and std::domain_error for a zero-frequency mode.
FockFunctional apply_creation(const FockFunctional& f, std::size_t mode);

/// sum_i c_i f_i, renormalized. Throws std::invalid_argument on a basis
/// mismatch, std::domain_error if the sum vanishes.
FockFunctional superpose(const std::vector<std::pair<cplx, FockFunctional>>& parts);

/// One-particle traveling state (|1_c 0_s> + i |0_c 1_s>)/sqrt(2) of a
/// cos/sin pair; in (q_c, q_s) it is proportional to (q_c + i q_s) Psi_0.
FockFunctional traveling_state(std::shared_ptr<const ModeBasis> basis, std::size_t cos_mode, std::size_t sin_mode);

/// <H> = sum_k <(p_k^2 + omega_k^2 q_k^2)/2>, each mode by trapezoidal
/// quadrature of its one-dimensional wave functions.
double energy(const FockFunctional& f);

/// Samples f on the plane base + x e_{mode_1} + y e_{mode_2}, x, y in
/// [-window, window), as an open resolution x resolution grid.
Wavefunction section(const FockFunctional& f, std::size_t mode_1, std::size_t mode_2, const ModeCoords& base,
                     double window, std::size_t resolution);

/// Wavefunction CSV plus sidecar metadata {mode_1, mode_2, base_point}.
void write_section(const std::filesystem::path& stem, const Wavefunction& sec, std::size_t mode_1,
                   std::size_t mode_2, const ModeCoords& base);

} // namespace nodelab::field
