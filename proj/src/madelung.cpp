#include "nodelab/madelung.hpp"
#include "nodelab/io.hpp"
#include "nodelab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace nodelab {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();
constexpr double two_pi = 2.0 * std::numbers::pi;

std::vector<cplx> gradient_component(const Grid& grid, std::span<const cplx> f, int axis, Scheme scheme)
{
    const bool spectral = scheme == Scheme::spectral || (scheme == Scheme::automatic && grid.periodic());
    if (spectral && !grid.periodic()) {
        throw std::invalid_argument("spectral derivatives need a periodic grid");
    }
    return spectral ? spectral_derivative(grid, f, axis) : centered_derivative(grid, f, axis);
}

double mean(std::span<const double> x)
{
    double s = 0.0;
    for (double v : x) {
        s += v;
    }
    return s / static_cast<double>(x.size());
}

// Distance of x from the nearest multiple of period.
double distance_to_lattice(double x, double period)
{
    const double r = x - period * std::round(x / period);
    return std::abs(r);
}

} // namespace

bool MadelungFields::all_valid() const
{
    for (auto m : valid) {
        if (m == 0) {
            return false;
        }
    }
    return true;
}

std::vector<std::uint8_t> node_mask(std::span<const double> rho, double zero_threshold)
{
    const double cut = zero_threshold * mean(rho);
    std::vector<std::uint8_t> valid(rho.size());
    for (std::size_t i = 0; i < rho.size(); ++i) {
        valid[i] = rho[i] > cut ? 1 : 0;
    }
    return valid;
}

namespace {

// sqrt(rho) has a kink at a node, which shows up as slowly decaying
// high-wavenumber content. Smooth amplitudes are resolved spectrally.
bool band_limited(const Grid& grid, std::span<const cplx> amp)
{
    FourierTransform ft(grid);
    std::copy(amp.begin(), amp.end(), ft.buffer().begin());
    ft.forward();
    const auto c = ft.buffer();
    double peak = 0.0;
    double tail = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto idx = grid.unflatten(i);
        bool high = false;
        for (int a = 0; a < grid.dim(); ++a) {
            const std::size_t n = grid.points(a);
            const std::size_t k = idx[static_cast<std::size_t>(a)];
            high = high || std::min(k, n - k) > n / 4;
        }
        const double m = std::abs(c[i]);
        peak = std::max(peak, m);
        if (high) {
            tail = std::max(tail, m);
        }
    }
    return tail <= 1e-10 * peak;
}

} // namespace

std::vector<double> quantum_potential(const Grid& grid, std::span<const double> rho, const MadelungOptions& opts)
{
    if (rho.size() != grid.size()) {
        throw std::invalid_argument("density size does not match grid");
    }
    for (double r : rho) {
        if (r < 0.0) {
            throw std::invalid_argument("negative density");
        }
    }
    const auto valid = node_mask(rho, opts.zero_threshold);
    std::vector<cplx> amp(rho.size());
    for (std::size_t i = 0; i < rho.size(); ++i) {
        amp[i] = std::sqrt(rho[i]);
    }
    bool spectral = false;
    switch (opts.laplacian) {
    case Scheme::spectral:
        if (!grid.periodic()) {
            throw std::invalid_argument("spectral Laplacian needs a periodic grid");
        }
        spectral = true;
        break;
    case Scheme::centered:
        break;
    case Scheme::automatic:
        spectral = grid.periodic() && band_limited(grid, amp);
        break;
    }
    const auto lap = spectral ? spectral_laplacian(grid, amp) : centered_laplacian(grid, amp);
    const double pref = -opts.hbar * opts.hbar / (2.0 * opts.mass);
    std::vector<double> Q(rho.size(), nan);
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (valid[i] != 0) {
            Q[i] = pref * lap[i].real() / amp[i].real();
        }
    }
    return Q;
}

MadelungFields decompose(const Wavefunction& psi, const MadelungOptions& opts)
{
    const Grid& g = psi.grid();
    MadelungFields f{g, opts.hbar, opts.mass, psi.density(), {}, {}, {}, {}};
    bool any = false;
    for (double r : f.rho) {
        any = any || r > 0.0;
    }
    if (!any) {
        throw std::domain_error("identically zero wave function");
    }
    f.valid = node_mask(f.rho, opts.zero_threshold);
    f.S.resize(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) {
        f.S[i] = opts.hbar * std::arg(psi[i]);
    }
    for (int a = 0; a < g.dim(); ++a) {
        const auto d = gradient_component(g, psi.values(), a, opts.gradient);
        auto& va = f.v[static_cast<std::size_t>(a)];
        va.assign(psi.size(), nan);
        for (std::size_t i = 0; i < psi.size(); ++i) {
            if (f.valid[i] != 0) {
                va[i] = opts.hbar / opts.mass * (d[i] / psi[i]).imag();
            }
        }
    }
    f.Q = quantum_potential(g, f.rho, opts);
    return f;
}

Wavefunction reconstruct(const MadelungFields& fields)
{
    if (!fields.all_valid()) {
        throw std::domain_error("zeros present: reconstruction ill-defined");
    }
    std::vector<cplx> a(fields.rho.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = std::polar(std::sqrt(fields.rho[i]), fields.S[i] / fields.hbar);
    }
    return Wavefunction(fields.grid, std::move(a));
}

std::vector<double> hj_residual(const Wavefunction& psi_t, const Wavefunction& psi_next, const PotentialSpec& V,
                                double dt, MadelungOptions opts)
{
    if (!(dt > 0.0)) {
        throw std::invalid_argument("dt must be positive");
    }
    if (!(psi_t.grid() == psi_next.grid())) {
        throw std::invalid_argument("grid mismatch");
    }
    opts.mass = V.mass;
    const auto a = decompose(psi_t, opts);
    const auto b = decompose(psi_next, opts);
    const auto pot = V.sample(psi_t.grid());
    const int dim = psi_t.grid().dim();
    std::vector<double> r(psi_t.size(), nan);
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (a.valid[i] == 0 || b.valid[i] == 0) {
            continue;
        }
        const double dphase = std::arg(psi_next[i] * std::conj(psi_t[i]));
        if (std::abs(dphase) > 0.5 * std::numbers::pi) {
            throw std::domain_error("dt too large");
        }
        double ka = 0.0;
        double kb = 0.0;
        for (int d = 0; d < dim; ++d) {
            const auto k = static_cast<std::size_t>(d);
            ka += a.v[k][i] * a.v[k][i];
            kb += b.v[k][i] * b.v[k][i];
        }
        const double ta = 0.5 * opts.mass * ka + pot[i] + a.Q[i];
        const double tb = 0.5 * opts.mass * kb + pot[i] + b.Q[i];
        r[i] = opts.hbar * dphase / dt + 0.5 * (ta + tb);
    }
    return r;
}

std::vector<double> continuity_residual(const Wavefunction& psi_t, const Wavefunction& psi_next, double dt,
                                        const MadelungOptions& opts)
{
    if (!(dt > 0.0)) {
        throw std::invalid_argument("dt must be positive");
    }
    if (!(psi_t.grid() == psi_next.grid())) {
        throw std::invalid_argument("grid mismatch");
    }
    const Grid& g = psi_t.grid();
    auto divergence_of_current = [&](const Wavefunction& psi) {
        std::vector<double> div(psi.size(), 0.0);
        for (int a = 0; a < g.dim(); ++a) {
            const auto d = gradient_component(g, psi.values(), a, opts.gradient);
            std::vector<cplx> j(psi.size());
            for (std::size_t i = 0; i < j.size(); ++i) {
                j[i] = opts.hbar / opts.mass * (std::conj(psi[i]) * d[i]).imag();
            }
            const auto dj = gradient_component(g, j, a, opts.gradient);
            for (std::size_t i = 0; i < div.size(); ++i) {
                div[i] += dj[i].real();
            }
        }
        return div;
    };
    const auto da = divergence_of_current(psi_t);
    const auto db = divergence_of_current(psi_next);
    std::vector<double> r(psi_t.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] = (std::norm(psi_next[i]) - std::norm(psi_t[i])) / dt + 0.5 * (da[i] + db[i]);
    }
    return r;
}

int circulation(const Wavefunction& psi, const Contour& loop, double zero_threshold)
{
    if (!(psi.grid() == loop.grid())) {
        throw std::invalid_argument("contour belongs to a different grid");
    }
    const auto rho = psi.density();
    const double cut = zero_threshold * mean(rho);
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < loop.size(); ++k) {
        const std::size_t a = loop.flat(k);
        const std::size_t b = loop.flat(k + 1);
        if (!(rho[a] > cut) || !(rho[b] > cut)) {
            throw std::domain_error("contour through node");
        }
        total += std::arg(psi[b] * std::conj(psi[a]));
    }
    return static_cast<int>(std::lround(total / two_pi));
}

double flow_circulation(const MadelungFields& fields, const Contour& loop)
{
    const Grid& g = fields.grid;
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < loop.size(); ++k) {
        const std::size_t a = loop.flat(k);
        const std::size_t b = loop.flat(k + 1);
        if (fields.valid[a] == 0 || fields.valid[b] == 0) {
            throw std::domain_error("contour through node");
        }
        const auto na = loop.nodes()[k];
        const auto nb = loop.nodes()[k + 1];
        const int axis = na[0] != nb[0] ? 0 : 1;
        const auto ax = static_cast<std::size_t>(axis);
        const double step = (nb[ax] > na[ax] ? 1.0 : -1.0) * g.spacing(axis);
        total += 0.5 * (fields.v[ax][a] + fields.v[ax][b]) * step;
    }
    return fields.mass * total / (two_pi * fields.hbar);
}

namespace {

struct FlowGraph {
    const MadelungFields& f;

    bool neighbour(std::size_t flat, int axis, long step, std::size_t& out) const
    {
        const Grid& g = f.grid;
        auto idx = g.unflatten(flat);
        const auto n = static_cast<long>(g.points(axis));
        long i = static_cast<long>(idx[static_cast<std::size_t>(axis)]) + step;
        if (g.periodic()) {
            i = ((i % n) + n) % n;
        } else if (i < 0 || i >= n) {
            return false;
        }
        idx[static_cast<std::size_t>(axis)] = static_cast<std::size_t>(i);
        out = g.index(idx[0], idx[1]);
        return f.valid[out] != 0;
    }

    // Integral of v_axis from lo to hi = lo + h by a cubic through four
    // valid points: centred when possible, otherwise shifted to one side,
    // falling back to the trapezoid rule.
    double edge_integral(std::size_t lo, std::size_t hi, int axis) const
    {
        const double h = f.grid.spacing(axis);
        const auto& va = f.v[static_cast<std::size_t>(axis)];
        std::size_t a = 0;
        std::size_t b = 0;
        const bool has_a = neighbour(lo, axis, -1, a);
        const bool has_b = neighbour(hi, axis, 1, b);
        if (has_a && has_b) {
            return h / 24.0 * (-va[a] + 13.0 * va[lo] + 13.0 * va[hi] - va[b]);
        }
        std::size_t c = 0;
        if (has_b && neighbour(b, axis, 1, c)) {
            return h / 24.0 * (9.0 * va[lo] + 19.0 * va[hi] - 5.0 * va[b] + va[c]);
        }
        if (has_a && neighbour(a, axis, -1, c)) {
            return h / 24.0 * (va[c] - 5.0 * va[a] + 19.0 * va[lo] + 9.0 * va[hi]);
        }
        return 0.5 * h * (va[lo] + va[hi]);
    }
};

} // namespace

FlowReconstruction reconstruct_from_flow(const MadelungFields& fields, std::size_t base)
{
    const Grid& g = fields.grid;
    if (base >= g.size()) {
        throw std::out_of_range("base point outside grid");
    }
    if (fields.valid[base] == 0) {
        throw std::domain_error("masked point encountered: base point is masked");
    }
    const FlowGraph graph{fields};
    const std::size_t n = g.size();
    std::vector<double> S(n, 0.0);
    std::vector<std::uint8_t> seen(n, 0);
    // Parent edge of each tree node, encoded as (parent flat index).
    std::vector<std::size_t> parent(n, n);
    std::deque<std::size_t> queue{base};
    seen[base] = 1;
    while (!queue.empty()) {
        const std::size_t p = queue.front();
        queue.pop_front();
        for (int axis = 0; axis < g.dim(); ++axis) {
            for (long step : {1L, -1L}) {
                std::size_t q = 0;
                if (!graph.neighbour(p, axis, step, q) || seen[q] != 0) {
                    continue;
                }
                const double dl = step > 0 ? graph.edge_integral(p, q, axis) : -graph.edge_integral(q, p, axis);
                S[q] = S[p] + fields.mass * dl;
                seen[q] = 1;
                parent[q] = p;
                queue.push_back(q);
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (fields.valid[i] != 0 && seen[i] == 0) {
            throw std::domain_error("masked point encountered: flow domain is not connected to the base point");
        }
    }
    // Every non-tree edge closes one fundamental cycle.
    const double quantum = two_pi * fields.hbar;
    double defect = 0.0;
    std::size_t cycles = 0;
    for (std::size_t p = 0; p < n; ++p) {
        if (seen[p] == 0) {
            continue;
        }
        for (int axis = 0; axis < g.dim(); ++axis) {
            std::size_t q = 0;
            if (!graph.neighbour(p, axis, 1, q) || q == p) {
                continue;
            }
            if (parent[q] == p || parent[p] == q) {
                continue;
            }
            const double hol = S[p] + fields.mass * graph.edge_integral(p, q, axis) - S[q];
            defect = std::max(defect, distance_to_lattice(hol, quantum));
            ++cycles;
        }
    }
    std::vector<cplx> amps(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (seen[i] != 0) {
            amps[i] = std::polar(std::sqrt(fields.rho[i]), S[i] / fields.hbar);
        }
    }
    return {Wavefunction(g, std::move(amps)), defect, cycles};
}

void write_fields_csv(const std::filesystem::path& path, const MadelungFields& f)
{
    const Grid& g = f.grid;
    if (g.dim() == 1) {
        io::CsvWriter w(path, {"index", "x", "rho", "S", "vx", "Q", "valid"});
        for (std::size_t i = 0; i < f.rho.size(); ++i) {
            w.row(i, g.coords(i)[0], f.rho[i], f.S[i], f.v[0][i], f.Q[i], f.valid[i] != 0);
        }
    } else {
        io::CsvWriter w(path, {"index", "x", "y", "rho", "S", "vx", "vy", "Q", "valid"});
        for (std::size_t i = 0; i < f.rho.size(); ++i) {
            const Point p = g.coords(i);
            w.row(i, p[0], p[1], f.rho[i], f.S[i], f.v[0][i], f.v[1][i], f.Q[i], f.valid[i] != 0);
        }
    }
}

} // namespace nodelab
