#include "nodelab/preparation.hpp"
#include "nodelab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace nodelab {

namespace {

// Weights w_j with f(q) = sum_j w_j f_j for the device-axis interpolant.
std::vector<cplx> device_weights(const Grid& dev, double q)
{
    const Axis& a = dev.axis(0);
    const std::size_t n = a.points;
    std::vector<cplx> w(n, 0.0);
    double t = (q - a.lo) / a.spacing();
    if (dev.periodic()) {
        t = std::fmod(t, static_cast<double>(n));
        if (t < 0.0) {
            t += static_cast<double>(n);
        }
    } else if (t < 0.0 || t > static_cast<double>(n - 1)) {
        return w;
    }
    const double r = std::round(t);
    if (std::abs(t - r) < 1e-9) {
        w[static_cast<std::size_t>(r) % n] = 1.0;
        return w;
    }
    if (!dev.periodic()) {
        const auto i = static_cast<std::size_t>(t);
        w[i] = 1.0 - (t - static_cast<double>(i));
        w[i + 1] = t - static_cast<double>(i);
        return w;
    }
    // Periodic cardinal functions matching TrigInterpolant (Nyquist as cos).
    const auto k = wavenumbers(a);
    const double x = t * a.spacing();
    for (std::size_t j = 0; j < n; ++j) {
        const double xj = static_cast<double>(j) * a.spacing();
        cplx s = 0.0;
        for (std::size_t m = 0; m < n; ++m) {
            const cplx basis = (n % 2 == 0 && m == n / 2) ? cplx{std::cos(k[m] * x)} : std::polar(1.0, k[m] * x);
            s += basis * std::polar(1.0, -k[m] * xj);
        }
        w[j] = s / static_cast<double>(n);
    }
    return w;
}

std::vector<cplx> pointer_state(const PointerFamily& p, std::size_t i, const Grid& dev)
{
    std::vector<cplx> chi(dev.size());
    double n2 = 0.0;
    for (std::size_t j = 0; j < chi.size(); ++j) {
        chi[j] = pointer_amplitude(p, i, dev.coords(j)[0]);
        n2 += std::norm(chi[j]);
    }
    const double inv = 1.0 / std::sqrt(n2 * dev.cell_volume());
    for (auto& c : chi) {
        c *= inv;
    }
    return chi;
}

} // namespace

void PointerFamily::validate() const
{
    if (!(width > 0.0)) {
        throw std::invalid_argument("pointer width must be positive");
    }
    if (centers.empty()) {
        throw std::invalid_argument("pointer family is empty");
    }
    for (std::size_t i = 1; i < centers.size(); ++i) {
        if (!(centers[i] > centers[i - 1])) {
            throw std::invalid_argument("pointer centers must be strictly increasing");
        }
    }
}

PointerFamily PointerFamily::evenly_spaced(std::size_t n, double separation, double width)
{
    PointerFamily p;
    p.width = width;
    for (std::size_t i = 0; i < n; ++i) {
        p.centers.push_back((static_cast<double>(i) - 0.5 * static_cast<double>(n - 1)) * separation);
    }
    return p;
}

double pointer_amplitude(const PointerFamily& pointers, std::size_t i, double q)
{
    const double w = pointers.width;
    const double d = q - pointers.centers.at(i);
    return std::pow(std::numbers::pi * w * w, -0.25) * std::exp(-d * d / (2.0 * w * w));
}

BipartiteWavefunction::BipartiteWavefunction(Grid sys, Grid dev, std::vector<cplx> amplitudes)
    : sys_(std::move(sys)), dev_(std::move(dev)), amps_(std::move(amplitudes))
{
    if (dev_.dim() != 1) {
        throw std::invalid_argument("device grid must be 1D");
    }
    if (amps_.size() != sys_.size() * dev_.size()) {
        throw std::invalid_argument("amplitude count does not match the grids");
    }
}

double BipartiteWavefunction::norm_squared() const
{
    double s = 0.0;
    for (const cplx& a : amps_) {
        s += std::norm(a);
    }
    return s * sys_.cell_volume() * dev_.cell_volume();
}

std::vector<double> BipartiteWavefunction::device_density() const
{
    const std::size_t nd = dev_.size();
    std::vector<double> rho(nd, 0.0);
    for (std::size_t s = 0; s < sys_.size(); ++s) {
        for (std::size_t d = 0; d < nd; ++d) {
            rho[d] += std::norm(amps_[s * nd + d]);
        }
    }
    for (double& r : rho) {
        r *= sys_.cell_volume();
    }
    return rho;
}

BipartiteWavefunction entangle(const std::vector<cplx>& alphas, const std::vector<Wavefunction>& sys_states,
                               const PointerFamily& pointers, const Grid& device_grid)
{
    pointers.validate();
    if (alphas.empty() || alphas.size() != sys_states.size() || alphas.size() != pointers.centers.size()) {
        throw std::invalid_argument("alphas, system states and pointers must have equal, nonzero counts");
    }
    if (device_grid.dim() != 1) {
        throw std::invalid_argument("device grid must be 1D");
    }
    double w2 = 0.0;
    for (const cplx& a : alphas) {
        w2 += std::norm(a);
    }
    if (std::abs(w2 - 1.0) > 1e-10) {
        throw std::invalid_argument("sum of |alpha|^2 must be 1");
    }
    const Grid& sys = sys_states.front().grid();
    for (std::size_t i = 0; i < sys_states.size(); ++i) {
        if (!(sys_states[i].grid() == sys)) {
            throw std::invalid_argument("system states live on different grids");
        }
        for (std::size_t j = 0; j <= i; ++j) {
            const cplx g = inner_product(sys_states[i], sys_states[j]);
            if (std::abs(g - (i == j ? 1.0 : 0.0)) > 1e-8) {
                throw std::invalid_argument("system states are not orthonormal");
            }
        }
    }
    const std::size_t nd = device_grid.size();
    std::vector<cplx> amps(sys.size() * nd, 0.0);
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (alphas[i] == 0.0) {
            continue;
        }
        const auto chi = pointer_state(pointers, i, device_grid);
        for (std::size_t s = 0; s < sys.size(); ++s) {
            const cplx a = alphas[i] * sys_states[i][s];
            for (std::size_t d = 0; d < nd; ++d) {
                amps[s * nd + d] += a * chi[d];
            }
        }
    }
    BipartiteWavefunction out(sys, device_grid, std::move(amps));
    const double inv = 1.0 / std::sqrt(out.norm_squared());
    std::vector<cplx> scaled = out.values();
    for (auto& a : scaled) {
        a *= inv;
    }
    return {sys, device_grid, std::move(scaled)};
}

Wavefunction device_slice(const BipartiteWavefunction& psi, double q_obs)
{
    const Grid& sys = psi.system_grid();
    const std::size_t nd = psi.device_grid().size();
    const auto w = device_weights(psi.device_grid(), q_obs);
    std::vector<std::size_t> active;
    for (std::size_t d = 0; d < nd; ++d) {
        if (w[d] != 0.0) {
            active.push_back(d);
        }
    }
    std::vector<cplx> out(sys.size(), 0.0);
    for (std::size_t s = 0; s < sys.size(); ++s) {
        cplx v = 0.0;
        for (std::size_t d : active) {
            v += w[d] * psi(s, d);
        }
        out[s] = v;
    }
    return {sys, std::move(out)};
}

Wavefunction condition(const BipartiteWavefunction& psi, double q_obs)
{
    const auto slice = device_slice(psi, q_obs);
    if (!(norm_squared(slice) > 0.0)) {
        throw std::domain_error("observation in null region");
    }
    return normalize(slice);
}

std::vector<cplx> random_phase_alphas(std::size_t n, std::uint64_t seed)
{
    if (n == 0) {
        throw std::invalid_argument("need at least one coefficient");
    }
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::vector<cplx> a(n);
    for (auto& x : a) {
        x = std::polar(1.0 / std::sqrt(static_cast<double>(n)), phase(rng));
    }
    return a;
}

PreparationReport prepare_and_probe(const std::vector<cplx>& alphas, const std::vector<Wavefunction>& sys_states,
                                    const PointerFamily& pointers, const Grid& device_grid, double q_obs,
                                    std::size_t target, const std::optional<Region>& roi)
{
    if (target >= sys_states.size()) {
        throw std::invalid_argument("target index out of range");
    }
    auto prepared = condition(entangle(alphas, sys_states, pointers, device_grid), q_obs);
    const Wavefunction& ref = sys_states[target];
    const cplx overlap = inner_product(ref, prepared);
    const cplx phase = std::abs(overlap) > 0.0 ? overlap / std::abs(overlap) : cplx{1.0};
    double d2 = 0.0;
    for (std::size_t i = 0; i < prepared.size(); ++i) {
        d2 += std::norm(prepared[i] - phase * ref[i]);
    }
    PreparationReport r{std::norm(overlap), std::sqrt(d2 * prepared.grid().cell_volume()),
                        min_density(prepared, roi).first, {}, prepared};
    if (prepared.grid().dim() == 2) {
        for (const auto& c : plaquette_charges(prepared)) {
            if (!roi || roi->contains(c.position, 2)) {
                r.charges.push_back(c);
            }
        }
    }
    return r;
}

double contamination_bound(const std::vector<cplx>& alphas, const PointerFamily& pointers, double q_obs,
                           std::size_t target)
{
    double others = 0.0;
    for (std::size_t j = 0; j < alphas.size(); ++j) {
        if (j != target) {
            others += std::abs(alphas[j]) * pointer_amplitude(pointers, j, q_obs);
        }
    }
    return others / (std::abs(alphas.at(target)) * pointer_amplitude(pointers, target, q_obs));
}

io::json report_to_json(const PreparationReport& report, const io::json& params)
{
    io::json charges = io::json::array();
    for (const auto& c : report.charges) {
        charges.push_back({{"charge", c.charge}, {"x", c.position[0]}, {"y", c.position[1]}});
    }
    return {{"fidelity", io::finite_or_null(report.fidelity)},
            {"delta_norm", io::finite_or_null(report.delta_norm)},
            {"min_density", io::finite_or_null(report.min_density)},
            {"charges", charges},
            {"params", params}};
}

} // namespace nodelab
