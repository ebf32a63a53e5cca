#include "nodelab/nelson.hpp"
#include "nodelab/io.hpp"
#include "nodelab/spectral.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>

namespace nodelab {

namespace {

std::mt19937_64 path_stream(std::uint64_t seed, std::uint64_t path)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
    return std::mt19937_64(seq);
}

// Cells of a grid: periodic grids include the seam cell back to index 0.
std::size_t cell_count(const Grid& g, int axis) { return g.periodic() ? g.points(axis) : g.points(axis) - 1; }

double box_length(const Grid& g, int axis)
{
    return static_cast<double>(cell_count(g, axis)) * g.spacing(axis);
}

// Locates x in the cell grid: lower corner index and fractional offset.
bool locate(const Grid& g, int axis, double x, std::size_t& i, double& f)
{
    const Axis& a = g.axis(axis);
    const double t = (x - a.lo) / a.spacing();
    if (!(t >= 0.0) || t > static_cast<double>(cell_count(g, axis))) {
        return false;
    }
    const auto n = cell_count(g, axis);
    i = std::min(static_cast<std::size_t>(t), n - 1);
    f = t - static_cast<double>(i);
    return true;
}

// Piecewise-(bi)linear density built from |psi|^2 at the grid points.
class LinearDensity {
public:
    explicit LinearDensity(const Wavefunction& psi) : grid_(psi.grid()), rho_(psi.density())
    {
        const std::size_t cx = cell_count(grid_, 0);
        if (grid_.dim() == 1) {
            cdf_.assign(cx + 1, 0.0);
            for (std::size_t i = 0; i < cx; ++i) {
                cdf_[i + 1] = cdf_[i] + 0.5 * grid_.spacing(0) * (rho_[i] + rho_[next(i, 0)]);
            }
            total_ = cdf_.back();
        } else {
            const std::size_t cy = cell_count(grid_, 1);
            total_ = 0.0;
            for (std::size_t i = 0; i < cx; ++i) {
                for (std::size_t j = 0; j < cy; ++j) {
                    total_ += cell_mass(i, j);
                }
            }
            rho_max_ = *std::max_element(rho_.begin(), rho_.end());
        }
        if (!(total_ > 0.0)) {
            throw std::domain_error("zero density");
        }
    }

    double total() const { return total_; }

    std::size_t next(std::size_t i, int axis) const { return (i + 1) % grid_.points(axis); }

    double at(const Point& x) const
    {
        std::size_t i = 0;
        double fx = 0.0;
        if (!locate(grid_, 0, x[0], i, fx)) {
            return 0.0;
        }
        if (grid_.dim() == 1) {
            return (1.0 - fx) * rho_[i] + fx * rho_[next(i, 0)];
        }
        std::size_t j = 0;
        double fy = 0.0;
        if (!locate(grid_, 1, x[1], j, fy)) {
            return 0.0;
        }
        const std::size_t i1 = next(i, 0);
        const std::size_t j1 = next(j, 1);
        return (1.0 - fx) * ((1.0 - fy) * rho_[grid_.index(i, j)] + fy * rho_[grid_.index(i, j1)])
            + fx * ((1.0 - fy) * rho_[grid_.index(i1, j)] + fy * rho_[grid_.index(i1, j1)]);
    }

    double cell_mass(std::size_t i, std::size_t j) const
    {
        const std::size_t i1 = next(i, 0);
        const std::size_t j1 = next(j, 1);
        return 0.25 * grid_.cell_volume()
            * (rho_[grid_.index(i, j)] + rho_[grid_.index(i1, j)] + rho_[grid_.index(i, j1)] + rho_[grid_.index(i1, j1)]);
    }

    // Normalized CDF (1D).
    double cdf(double x) const
    {
        const Axis& a = grid_.axis(0);
        const double t = (x - a.lo) / a.spacing();
        if (t <= 0.0) {
            return 0.0;
        }
        const std::size_t n = cell_count(grid_, 0);
        if (t >= static_cast<double>(n)) {
            return 1.0;
        }
        const auto i = static_cast<std::size_t>(t);
        const double s = t - static_cast<double>(i);
        const double ra = rho_[i];
        const double rb = rho_[next(i, 0)];
        return (cdf_[i] + a.spacing() * (ra * s + 0.5 * (rb - ra) * s * s)) / total_;
    }

    Point draw(std::mt19937_64& rng) const
    {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        if (grid_.dim() == 1) {
            const Axis& a = grid_.axis(0);
            const double target = u(rng) * total_;
            auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
            std::size_t i = static_cast<std::size_t>(std::distance(cdf_.begin(), it));
            i = std::clamp<std::size_t>(i, 1, cdf_.size() - 1) - 1;
            const double r = (target - cdf_[i]) / a.spacing();
            const double ra = rho_[i];
            const double slope = rho_[next(i, 0)] - ra;
            double s = 0.0;
            if (std::abs(slope) <= 1e-12 * std::max(ra, 1e-300)) {
                s = ra > 0.0 ? r / ra : 0.5;
            } else {
                const double disc = std::max(0.0, ra * ra + 2.0 * slope * r);
                s = 2.0 * r / (ra + std::sqrt(disc));
            }
            s = std::clamp(s, 0.0, 1.0);
            return {a.coord(i) + s * a.spacing(), 0.0};
        }
        const double lx = box_length(grid_, 0);
        const double ly = box_length(grid_, 1);
        while (true) {
            const Point p{grid_.axis(0).lo + u(rng) * lx, grid_.axis(1).lo + u(rng) * ly};
            if (u(rng) * rho_max_ < at(p)) {
                return p;
            }
        }
    }

private:
    Grid grid_;
    std::vector<double> rho_;
    std::vector<double> cdf_;
    double total_ = 0.0;
    double rho_max_ = 0.0;
};

} // namespace

void validate(const NelsonConfig& cfg)
{
    if (!(cfg.nu > 0.0) || !(cfg.dt > 0.0) || cfg.n_paths == 0 || cfg.n_steps == 0 || cfg.record_every == 0) {
        throw std::invalid_argument("nu, dt, n_paths, n_steps and record_every must be positive");
    }
    if (!(cfg.drift_clamp > 0.0) || cfg.drift_clamp * cfg.dt > 1.0) {
        throw std::invalid_argument("drift_clamp * dt must not exceed one cell per step");
    }
}

DriftField::DriftField(const Wavefunction& psi, double nu, double drift_clamp, double zero_threshold)
    : grid_(psi.grid()), nu_(nu), psi_(psi.values())
{
    const Grid& g = grid_;
    double hmin = g.spacing(0);
    if (g.dim() == 2) {
        hmin = std::min(hmin, g.spacing(1));
    }
    clamp_speed_ = drift_clamp * hmin;
    const auto rho = psi.density();
    double mean = 0.0;
    for (double r : rho) {
        mean += r;
    }
    mean /= static_cast<double>(rho.size());
    std::vector<std::uint8_t> masked(rho.size(), 0);
    for (std::size_t i = 0; i < rho.size(); ++i) {
        masked[i] = rho[i] < zero_threshold * mean ? 1 : 0;
    }
    for (int a = 0; a < g.dim(); ++a) {
        const auto ua = static_cast<std::size_t>(a);
        grad_[ua] = g.periodic() ? spectral_derivative(g, psi_, a) : centered_derivative(g, psi_, a);
        b_[ua].assign(rho.size(), 0.0);
        for (std::size_t i = 0; i < rho.size(); ++i) {
            if (masked[i] == 0) {
                const cplx r = grad_[ua][i] / psi_[i];
                b_[ua][i] = 2.0 * nu * (r.real() + r.imag());
            }
        }
    }
    // A cell is singular when a corner is masked, an edge turns the phase by
    // a right angle or more, or the cell winds around a zero.
    const std::size_t cx = cell_count(g, 0);
    const std::size_t cy = g.dim() == 2 ? cell_count(g, 1) : 1;
    singular_cell_.assign(g.size(), 0);
    auto turns = [&](std::size_t p, std::size_t q) { return std::real(psi_[q] * std::conj(psi_[p])) <= 0.0; };
    for (std::size_t i = 0; i < cx; ++i) {
        const std::size_t i1 = (i + 1) % g.points(0);
        if (g.dim() == 1) {
            singular_cell_[i] = masked[i] | masked[i1] | static_cast<std::uint8_t>(turns(i, i1));
            continue;
        }
        for (std::size_t j = 0; j < cy; ++j) {
            const std::size_t j1 = (j + 1) % g.points(1);
            const std::array<std::size_t, 4> c{g.index(i, j), g.index(i1, j), g.index(i1, j1), g.index(i, j1)};
            bool s = false;
            double w = 0.0;
            for (std::size_t k = 0; k < 4; ++k) {
                const std::size_t p = c[k];
                const std::size_t q = c[(k + 1) % 4];
                s = s || masked[p] != 0 || turns(p, q);
                w += std::arg(psi_[q] * std::conj(psi_[p]));
            }
            s = s || std::abs(w) > 1.0;
            singular_cell_[g.index(i, j)] = s ? 1 : 0;
        }
    }
}

std::size_t DriftField::cell_of(const Point& x, std::array<double, 2>& frac, std::array<std::size_t, 4>& corners) const
{
    const Grid& g = grid_;
    std::size_t i = 0;
    std::size_t j = 0;
    frac = {0.0, 0.0};
    if (!locate(g, 0, x[0], i, frac[0]) || (g.dim() == 2 && !locate(g, 1, x[1], j, frac[1]))) {
        throw std::out_of_range("point outside grid");
    }
    const std::size_t i1 = (i + 1) % g.points(0);
    if (g.dim() == 1) {
        corners = {i, i1, i1, i};
        return i;
    }
    const std::size_t j1 = (j + 1) % g.points(1);
    corners = {g.index(i, j), g.index(i1, j), g.index(i1, j1), g.index(i, j1)};
    return g.index(i, j);
}

Point DriftField::operator()(const Point& x) const
{
    std::array<double, 2> f{};
    std::array<std::size_t, 4> c{};
    const std::size_t cell = cell_of(x, f, c);
    const std::array<double, 4> w{(1.0 - f[0]) * (1.0 - f[1]), f[0] * (1.0 - f[1]), f[0] * f[1], (1.0 - f[0]) * f[1]};
    Point b{0.0, 0.0};
    const int dim = grid_.dim();
    if (singular_cell_[cell] == 0) {
        for (int a = 0; a < dim; ++a) {
            const auto ua = static_cast<std::size_t>(a);
            for (std::size_t k = 0; k < 4; ++k) {
                b[ua] += w[k] * b_[ua][c[k]];
            }
        }
    } else {
        cplx p = 0.0;
        for (std::size_t k = 0; k < 4; ++k) {
            p += w[k] * psi_[c[k]];
        }
        if (p != 0.0) {
            for (int a = 0; a < dim; ++a) {
                const auto ua = static_cast<std::size_t>(a);
                cplx d = 0.0;
                for (std::size_t k = 0; k < 4; ++k) {
                    d += w[k] * grad_[ua][c[k]];
                }
                const cplx r = d / p;
                b[ua] = 2.0 * nu_ * (r.real() + r.imag());
            }
        }
    }
    const double speed = std::hypot(b[0], b[1]);
    if (speed > clamp_speed_) {
        b[0] *= clamp_speed_ / speed;
        b[1] *= clamp_speed_ / speed;
    }
    return b;
}

Point drift(const Wavefunction& psi, const Point& x, double nu, double drift_clamp)
{
    return DriftField(psi, nu, drift_clamp)(x);
}

Point TrajectoryEnsemble::position(std::size_t record, std::size_t path) const
{
    const std::size_t base = (record * n_paths + path) * static_cast<std::size_t>(dim);
    return {positions[base], dim == 2 ? positions[base + 1] : 0.0};
}

std::vector<Point> TrajectoryEnsemble::slice(std::size_t record) const
{
    std::vector<Point> out;
    out.reserve(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) {
        if (alive[p] != 0) {
            out.push_back(position(record, p));
        }
    }
    return out;
}

std::vector<Point> sample_density(const Wavefunction& psi, std::size_t n, std::uint64_t seed)
{
    const LinearDensity density(psi);
    std::vector<Point> out(n);
    for (std::size_t p = 0; p < n; ++p) {
        auto rng = path_stream(seed, p);
        out[p] = density.draw(rng);
    }
    return out;
}

TrajectoryEnsemble simulate(const Wavefunction& psi, const NelsonConfig& cfg, const InitSpec& init)
{
    validate(cfg);
    const Grid& g = psi.grid();
    const DriftField field(psi, cfg.nu, cfg.drift_clamp);
    const int dim = g.dim();
    const auto udim = static_cast<std::size_t>(dim);
    TrajectoryEnsemble ens;
    ens.dim = dim;
    ens.n_paths = cfg.n_paths;
    const std::size_t n_records = cfg.n_steps / cfg.record_every + 1;
    for (std::size_t r = 0; r < n_records; ++r) {
        ens.times.push_back(static_cast<double>(r * cfg.record_every) * cfg.dt);
    }
    ens.positions.assign(n_records * cfg.n_paths * udim, 0.0);
    ens.alive.assign(cfg.n_paths, 1);

    std::unique_ptr<LinearDensity> density;
    const auto* explicit_points = std::get_if<std::vector<Point>>(&init);
    if (explicit_points == nullptr) {
        density = std::make_unique<LinearDensity>(psi);
    } else if (explicit_points->empty()) {
        throw std::invalid_argument("explicit initial positions are empty");
    }
    const double sigma = std::sqrt(2.0 * cfg.nu * cfg.dt);
    std::array<double, 2> lo{g.axis(0).lo, dim == 2 ? g.axis(1).lo : 0.0};
    std::array<double, 2> len{box_length(g, 0), dim == 2 ? box_length(g, 1) : 0.0};

#pragma omp parallel for schedule(static) num_threads(cfg.jobs > 0 ? cfg.jobs : 1)
    for (long pl = 0; pl < static_cast<long>(cfg.n_paths); ++pl) {
        const auto p = static_cast<std::size_t>(pl);
        auto rng = path_stream(cfg.seed, p);
        std::normal_distribution<double> normal;
        Point x = density ? density->draw(rng) : (*explicit_points)[p % explicit_points->size()];
        bool alive = true;
        auto store = [&](std::size_t r) {
            for (std::size_t a = 0; a < udim; ++a) {
                ens.positions[(r * cfg.n_paths + p) * udim + a] = x[a];
            }
        };
        store(0);
        for (std::size_t s = 1; s <= cfg.n_steps; ++s) {
            if (alive) {
                Point b{0.0, 0.0};
                try {
                    b = field(x);
                } catch (const std::out_of_range&) {
                    alive = false;
                }
                for (std::size_t a = 0; a < udim && alive; ++a) {
                    x[a] += b[a] * cfg.dt + sigma * normal(rng);
                    if (g.periodic()) {
                        x[a] = lo[a] + std::fmod(x[a] - lo[a], len[a]);
                        if (x[a] < lo[a]) {
                            x[a] += len[a];
                        }
                        if (x[a] >= lo[a] + len[a]) {
                            x[a] = lo[a];
                        }
                    } else if (x[a] < lo[a] || x[a] > lo[a] + len[a]) {
                        alive = false;
                    }
                }
            }
            if (s % cfg.record_every == 0) {
                store(s / cfg.record_every);
            }
        }
        ens.alive[p] = alive ? 1 : 0;
    }
    return ens;
}

double equivariance_stat(const std::vector<Point>& samples, const Wavefunction& psi, std::size_t bins)
{
    if (samples.empty()) {
        throw std::invalid_argument("empty ensemble");
    }
    const Grid& g = psi.grid();
    const LinearDensity density(psi);
    const auto n = static_cast<double>(samples.size());
    if (g.dim() == 1) {
        std::vector<double> xs;
        xs.reserve(samples.size());
        for (const auto& s : samples) {
            xs.push_back(s[0]);
        }
        std::sort(xs.begin(), xs.end());
        double d = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double F = density.cdf(xs[i]);
            d = std::max({d, F - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - F});
        }
        return d;
    }
    if (bins == 0) {
        throw std::invalid_argument("bins must be positive");
    }
    // Expected bin masses by midpoint quadrature on 4 x 4 subcells, exact
    // for the bilinear density when bins align with cells.
    const std::array<double, 2> lo{g.axis(0).lo, g.axis(1).lo};
    const std::array<double, 2> len{box_length(g, 0), box_length(g, 1)};
    std::vector<double> expected(bins * bins, 0.0);
    const int sub = 4;
    const std::size_t cx = cell_count(g, 0);
    const std::size_t cy = cell_count(g, 1);
    auto bin_of = [&](const Point& p, std::size_t& b) {
        const double tx = (p[0] - lo[0]) / len[0] * static_cast<double>(bins);
        const double ty = (p[1] - lo[1]) / len[1] * static_cast<double>(bins);
        if (!(tx >= 0.0 && ty >= 0.0 && tx < static_cast<double>(bins) && ty < static_cast<double>(bins))) {
            return false;
        }
        b = static_cast<std::size_t>(tx) * bins + static_cast<std::size_t>(ty);
        return true;
    };
    const double dA = g.cell_volume() / (sub * sub);
    for (std::size_t i = 0; i < cx; ++i) {
        for (std::size_t j = 0; j < cy; ++j) {
            for (int a = 0; a < sub; ++a) {
                for (int c = 0; c < sub; ++c) {
                    const Point p{lo[0] + (static_cast<double>(i) + (a + 0.5) / sub) * g.spacing(0),
                                  lo[1] + (static_cast<double>(j) + (c + 0.5) / sub) * g.spacing(1)};
                    std::size_t b = 0;
                    if (bin_of(p, b)) {
                        expected[b] += density.at(p) * dA;
                    }
                }
            }
        }
    }
    std::vector<double> observed(bins * bins, 0.0);
    for (const auto& s : samples) {
        std::size_t b = 0;
        if (bin_of(s, b)) {
            observed[b] += 1.0;
        }
    }
    const double total = density.total();
    double chi2 = 0.0;
    double pooled_e = 0.0;
    double pooled_o = 0.0;
    std::size_t k = 0;
    for (std::size_t b = 0; b < expected.size(); ++b) {
        const double e = expected[b] / total * n;
        if (e < 5.0) {
            pooled_e += e;
            pooled_o += observed[b];
            continue;
        }
        chi2 += (observed[b] - e) * (observed[b] - e) / e;
        ++k;
    }
    if (pooled_e > 0.0) {
        chi2 += (pooled_o - pooled_e) * (pooled_o - pooled_e) / pooled_e;
        ++k;
    }
    if (k < 2) {
        throw std::invalid_argument("too few populated bins for a chi-square test");
    }
    return boost::math::gamma_q(0.5 * static_cast<double>(k - 1), 0.5 * chi2);
}

double mass_within(const Wavefunction& psi, const Point& c, double r, int subdivisions)
{
    const Grid& g = psi.grid();
    const int sub = std::max(1, subdivisions);
    const int dim = g.dim();
    // Midpoints of subdivided cells covering the bounding box; 1D weights by
    // exact overlap with the interval.
    std::array<std::vector<double>, 2> mids;
    std::array<double, 2> step{1.0, 1.0};
    for (int a = 0; a < dim; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        const double lo = g.axis(a).lo;
        const double hi = lo + box_length(g, a);
        step[ua] = g.spacing(a) / sub;
        const auto first = static_cast<long>(std::floor((std::max(lo, c[ua] - r) - lo) / step[ua]));
        const auto last = static_cast<long>(std::ceil((std::min(hi, c[ua] + r) - lo) / step[ua]));
        for (long i = first; i < last; ++i) {
            mids[ua].push_back(lo + (static_cast<double>(i) + 0.5) * step[ua]);
        }
    }
    if (dim == 1) {
        mids[1] = {0.0};
    }
    // Periodic grids use the trigonometric interpolant of psi (exact for
    // band-limited states); open grids the bilinear density.
    std::vector<double> rho;
    double total = 0.0;
    if (g.periodic()) {
        for (const cplx& v : TrigInterpolant(psi).lattice(mids[0], mids[1])) {
            rho.push_back(std::norm(v));
        }
        total = norm_squared(psi);
    } else {
        const LinearDensity density(psi);
        for (double x : mids[0]) {
            for (double y : mids[1]) {
                rho.push_back(density.at({x, y}));
            }
        }
        total = density.total();
    }
    double inside = 0.0;
    for (std::size_t i = 0; i < mids[0].size(); ++i) {
        for (std::size_t j = 0; j < mids[1].size(); ++j) {
            const double rv = rho[i * mids[1].size() + j];
            const double x = mids[0][i];
            if (dim == 1) {
                const double overlap = std::min(x + 0.5 * step[0], c[0] + r) - std::max(x - 0.5 * step[0], c[0] - r);
                inside += overlap > 0.0 ? rv * overlap : 0.0;
            } else if (std::hypot(x - c[0], mids[1][j] - c[1]) < r) {
                inside += rv * step[0] * step[1];
            }
        }
    }
    return inside / total;
}

double fraction_within(const std::vector<Point>& samples, const Point& c, double r, int dim)
{
    if (samples.empty()) {
        throw std::invalid_argument("empty ensemble");
    }
    std::size_t k = 0;
    for (const auto& s : samples) {
        const double d = dim == 2 ? std::hypot(s[0] - c[0], s[1] - c[1]) : std::abs(s[0] - c[0]);
        k += d < r ? 1 : 0;
    }
    return static_cast<double>(k) / static_cast<double>(samples.size());
}

void write_ensemble_csv(const std::filesystem::path& path, const TrajectoryEnsemble& ens, std::size_t max_paths)
{
    const std::size_t np = std::min(max_paths, ens.n_paths);
    if (ens.dim == 1) {
        io::CsvWriter w(path, {"path", "t", "x", "alive"});
        for (std::size_t p = 0; p < np; ++p) {
            for (std::size_t r = 0; r < ens.records(); ++r) {
                w.row(p, ens.times[r], ens.position(r, p)[0], ens.alive[p] != 0);
            }
        }
    } else {
        io::CsvWriter w(path, {"path", "t", "x", "y", "alive"});
        for (std::size_t p = 0; p < np; ++p) {
            for (std::size_t r = 0; r < ens.records(); ++r) {
                const Point x = ens.position(r, p);
                w.row(p, ens.times[r], x[0], x[1], ens.alive[p] != 0);
            }
        }
    }
}

} // namespace nodelab
