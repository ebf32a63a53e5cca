#include "nodelab/zeros.hpp"
#include "nodelab/io.hpp"
#include "nodelab/madelung.hpp"
#include "nodelab/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <stdexcept>

namespace nodelab {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// Phase increments along grid edges. An increment above the ambiguity
// threshold is bisected through the trigonometric interpolant (periodic
// grids) until every piece is below it.
class EdgePhases {
public:
    EdgePhases(const Wavefunction& psi, const ChargeOptions& opts) : psi_(psi), opts_(opts) {}

    // Increment from grid point (i, j) to its +axis neighbour; false if the
    // edge touches an exact zero or stays ambiguous.
    bool forward(std::size_t i, std::size_t j, int axis, double& out)
    {
        const Grid& g = psi_.grid();
        const std::size_t i2 = axis == 0 ? i + 1 : i;
        const std::size_t j2 = axis == 1 ? j + 1 : j;
        const cplx a = psi_[g.index(i, j)];
        const cplx b = psi_[g.index(i2 % g.points(0), j2 % g.points(1))];
        if (a == 0.0 || b == 0.0) {
            return false;
        }
        const Point p{g.axis(0).lo + g.spacing(0) * static_cast<double>(i),
                      g.axis(1).lo + g.spacing(1) * static_cast<double>(j)};
        const Point q{g.axis(0).lo + g.spacing(0) * static_cast<double>(i2),
                      g.axis(1).lo + g.spacing(1) * static_cast<double>(j2)};
        return segment(p, a, q, b, 0, out);
    }

private:
    bool segment(const Point& p, cplx a, const Point& q, cplx b, int depth, double& out)
    {
        const double d = std::arg(b * std::conj(a));
        if (std::abs(d) <= opts_.ambiguous_step) {
            out = d;
            return true;
        }
        if (!psi_.grid().periodic() || depth >= opts_.refine_levels) {
            return false;
        }
        if (!interp_) {
            interp_ = std::make_unique<TrigInterpolant>(psi_);
        }
        const Point m{0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])};
        const cplx c = (*interp_)(m);
        if (c == 0.0) {
            return false;
        }
        double d1 = 0.0;
        double d2 = 0.0;
        if (!segment(p, a, m, c, depth + 1, d1) || !segment(m, c, q, b, depth + 1, d2)) {
            return false;
        }
        out = d1 + d2;
        return true;
    }

    const Wavefunction& psi_;
    const ChargeOptions& opts_;
    std::unique_ptr<TrigInterpolant> interp_;
};

} // namespace

Point bilinear_root(cplx f00, cplx f10, cplx f11, cplx f01)
{
    // f(s,t) = a + b s + c t + d s t
    const cplx a = f00;
    const cplx b = f10 - f00;
    const cplx c = f01 - f00;
    const cplx d = f11 - f10 - f01 + f00;
    // t = -(a + b s)/(c + d s) is real iff Im[(a + b s) conj(c + d s)] = 0.
    const double q0 = std::imag(a * std::conj(c));
    const double q1 = std::imag(a * std::conj(d)) + std::imag(b * std::conj(c));
    const double q2 = std::imag(b * std::conj(d));
    std::vector<double> roots;
    const double scale = std::abs(q0) + std::abs(q1) + std::abs(q2);
    if (std::abs(q2) <= 1e-14 * scale) {
        if (q1 != 0.0) {
            roots.push_back(-q0 / q1);
        }
    } else {
        const double disc = q1 * q1 - 4.0 * q2 * q0;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            const double qq = -0.5 * (q1 + std::copysign(sq, q1));
            roots.push_back(qq / q2);
            if (qq != 0.0) {
                roots.push_back(q0 / qq);
            }
        }
    }
    Point best{0.5, 0.5};
    double best_bad = std::numeric_limits<double>::infinity();
    for (double s : roots) {
        const cplx den = c + d * s;
        if (std::abs(den) == 0.0) {
            continue;
        }
        const double t = std::real(-(a + b * s) / den);
        // Distance outside the unit square; zero for an interior root.
        const double bad = std::max({0.0, -s, s - 1.0}) + std::max({0.0, -t, t - 1.0});
        if (bad < best_bad) {
            best_bad = bad;
            best = {std::clamp(s, 0.0, 1.0), std::clamp(t, 0.0, 1.0)};
        }
    }
    return best;
}

ChargeScan scan_charges(const Wavefunction& psi, const ChargeOptions& opts)
{
    const Grid& g = psi.grid();
    if (g.dim() != 2) {
        throw std::invalid_argument("plaquette charges need a 2D grid");
    }
    const std::size_t nx = g.points(0);
    const std::size_t ny = g.points(1);
    const double hx = g.spacing(0);
    const double hy = g.spacing(1);
    auto amp = [&](std::size_t i, std::size_t j) { return psi[g.index(i, j)]; };

    // Phase increment of every edge inside the open box (the periodic seam is
    // skipped: states that are not periodic themselves wind spuriously there).
    enum : std::uint8_t { ok, bad, null };
    std::array<std::vector<double>, 2> phase{std::vector<double>(nx * ny, 0.0), std::vector<double>(nx * ny, 0.0)};
    std::array<std::vector<std::uint8_t>, 2> state{std::vector<std::uint8_t>(nx * ny, null),
                                                   std::vector<std::uint8_t>(nx * ny, null)};
    EdgePhases edges(psi, opts);
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            for (int axis = 0; axis < 2; ++axis) {
                if ((axis == 0 && i + 1 == nx) || (axis == 1 && j + 1 == ny)) {
                    continue;
                }
                const std::size_t e = g.index(i, j);
                const bool touches = amp(i, j) == 0.0 || (axis == 0 ? amp(i + 1, j) : amp(i, j + 1)) == 0.0;
                if (touches) {
                    continue;
                }
                state[axis][e] = edges.forward(i, j, axis, phase[axis][e]) ? ok : bad;
            }
        }
    }
    // Winding along unit steps from (i, j); false on any bad or null edge.
    auto winding = [&](std::size_t i, std::size_t j, std::initializer_list<std::array<int, 2>> steps, int& w) {
        double total = 0.0;
        for (const auto& st : steps) {
            const int axis = st[0] != 0 ? 0 : 1;
            const bool fwd = st[0] + st[1] > 0;
            const std::size_t ei = fwd || axis == 1 ? i : i - 1;
            const std::size_t ej = fwd || axis == 0 ? j : j - 1;
            const std::size_t e = g.index(ei, ej);
            if (state[axis][e] != ok) {
                return false;
            }
            total += fwd ? phase[axis][e] : -phase[axis][e];
            i = static_cast<std::size_t>(static_cast<long>(i) + st[0]);
            j = static_cast<std::size_t>(static_cast<long>(j) + st[1]);
        }
        const double r = total / two_pi;
        w = static_cast<int>(std::lround(r));
        return std::abs(r - w) <= 0.1;
    };
    auto edge_of = [&](std::size_t i, std::size_t j, int axis) { return state[axis][g.index(i, j)]; };

    ChargeScan out;
    std::vector<std::uint8_t> done(nx * ny, 0);
    auto unresolved = [&](std::size_t i, std::size_t j) {
        const std::size_t c = g.index(i, j);
        if (done[c] == 0) {
            done[c] = 1;
            out.unresolved.push_back(c);
        }
    };
    // Exact zeros on a grid point: winding around the 2x2 block.
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            if (amp(i, j) != 0.0) {
                continue;
            }
            int w = 0;
            const bool fine = i > 0 && j > 0 && i + 1 < nx && j + 1 < ny
                && winding(i - 1, j - 1, {{1, 0}, {1, 0}, {0, 1}, {0, 1}, {-1, 0}, {-1, 0}, {0, -1}, {0, -1}}, w);
            for (std::size_t ci : {i - 1, i}) {
                for (std::size_t cj : {j - 1, j}) {
                    if (ci + 1 < nx && cj + 1 < ny) {
                        if (fine) {
                            done[g.index(ci, cj)] = 1;
                        } else {
                            unresolved(ci, cj);
                        }
                    }
                }
            }
            if (fine && w != 0) {
                out.charges.push_back({g.index(i, j), w, g.coords(g.index(i, j))});
            }
        }
    }
    // A zero lying on an edge: winding around the two cells sharing it,
    // placed at the linear root along the edge.
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            for (int axis = 0; axis < 2; ++axis) {
                if (edge_of(i, j, axis) != bad) {
                    continue;
                }
                // Cells on either side: (i, j - 1), (i, j) for a horizontal
                // edge; (i - 1, j), (i, j) for a vertical one.
                const bool horiz = axis == 0;
                const bool inside = horiz ? j > 0 && j + 1 < ny : i > 0 && i + 1 < nx;
                int w = 0;
                bool fine = false;
                if (inside) {
                    fine = horiz ? winding(i, j - 1, {{1, 0}, {0, 1}, {0, 1}, {-1, 0}, {0, -1}, {0, -1}}, w)
                                 : winding(i - 1, j, {{1, 0}, {1, 0}, {0, 1}, {-1, 0}, {-1, 0}, {0, -1}}, w);
                }
                const std::size_t oi = horiz ? i : i - 1;
                const std::size_t oj = horiz ? j - 1 : j;
                if (!fine) {
                    if (inside) {
                        unresolved(oi, oj);
                    }
                    if (i + 1 < nx && j + 1 < ny) {
                        unresolved(i, j);
                    }
                    continue;
                }
                done[g.index(oi, oj)] = 1;
                done[g.index(i, j)] = 1;
                if (w != 0) {
                    const cplx a = amp(i, j);
                    const cplx b = horiz ? amp(i + 1, j) : amp(i, j + 1);
                    const double t = std::clamp(-std::real(a * std::conj(b - a)) / std::norm(b - a), 0.0, 1.0);
                    const Point o = g.coords(g.index(i, j));
                    out.charges.push_back(
                        {g.index(i, j), w, {o[0] + (horiz ? hx * t : 0.0), o[1] + (horiz ? 0.0 : hy * t)}});
                }
            }
        }
    }
    for (std::size_t i = 0; i + 1 < nx; ++i) {
        for (std::size_t j = 0; j + 1 < ny; ++j) {
            const std::size_t cell = g.index(i, j);
            if (done[cell] != 0) {
                continue;
            }
            int w = 0;
            if (!winding(i, j, {{1, 0}, {0, 1}, {-1, 0}, {0, -1}}, w)) {
                unresolved(i, j);
            } else if (w != 0) {
                const Point r = bilinear_root(amp(i, j), amp(i + 1, j), amp(i + 1, j + 1), amp(i, j + 1));
                const Point o = g.coords(cell);
                out.charges.push_back({cell, w, {o[0] + hx * r[0], o[1] + hy * r[1]}});
            }
        }
    }
    return out;
}

std::vector<PlaquetteCharge> plaquette_charges(const Wavefunction& psi, const ChargeOptions& opts)
{
    return scan_charges(psi, opts).charges;
}

int total_charge(const Wavefunction& psi, const Contour& loop) { return circulation(psi, loop); }

int enclosed_charge(const std::vector<PlaquetteCharge>& charges, const Contour& loop)
{
    int total = 0;
    for (const auto& c : charges) {
        if (loop.encloses(c.position)) {
            total += c.charge;
        }
    }
    return total;
}

std::pair<double, std::size_t> min_density(const Wavefunction& psi, const std::optional<Region>& roi)
{
    return min_over(psi.grid(), psi.density(), roi);
}

Wavefunction perturbation(const Grid& grid, const PerturbationSpec& spec, std::uint64_t seed, std::uint64_t trial)
{
    if (spec.kind == PerturbationSpec::Kind::constant) {
        return Wavefunction(grid, std::vector<cplx>(grid.size(), 1.0));
    }
    if (spec.bandwidth < 1) {
        throw std::invalid_argument("bandwidth must be positive");
    }
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;
    const auto B = static_cast<std::size_t>(spec.bandwidth);
    auto table = [&](const Axis& a) {
        std::vector<cplx> t(B * a.points);
        for (std::size_t m = 0; m < B; ++m) {
            const double k = two_pi * (static_cast<double>(m) - static_cast<double>(B / 2)) / a.length();
            for (std::size_t i = 0; i < a.points; ++i) {
                t[m * a.points + i] = std::polar(1.0, k * (a.coord(i) - a.lo));
            }
        }
        return t;
    };
    const auto ex = table(grid.axis(0));
    const std::size_t nx = grid.points(0);
    std::vector<cplx> out(grid.size(), 0.0);
    if (grid.dim() == 1) {
        for (std::size_t m = 0; m < B; ++m) {
            const cplx c{normal(rng), normal(rng)};
            for (std::size_t i = 0; i < nx; ++i) {
                out[i] += c * ex[m * nx + i];
            }
        }
    } else {
        const auto ey = table(grid.axis(1));
        const std::size_t ny = grid.points(1);
        for (std::size_t m = 0; m < B; ++m) {
            std::vector<cplx> row(ny, 0.0);
            for (std::size_t n = 0; n < B; ++n) {
                const cplx c{normal(rng), normal(rng)};
                for (std::size_t j = 0; j < ny; ++j) {
                    row[j] += c * ey[n * ny + j];
                }
            }
            for (std::size_t i = 0; i < nx; ++i) {
                const cplx e = ex[m * nx + i];
                for (std::size_t j = 0; j < ny; ++j) {
                    out[i * ny + j] += e * row[j];
                }
            }
        }
    }
    double sup = 0.0;
    for (const cplx& v : out) {
        sup = std::max(sup, std::abs(v));
    }
    for (cplx& v : out) {
        v /= sup;
    }
    return Wavefunction(grid, std::move(out));
}

double contour_min_density(const Wavefunction& psi, const Contour& loop)
{
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < loop.size(); ++k) {
        m = std::min(m, std::norm(psi[loop.flat(k)]));
    }
    return m;
}

StabilityReport stability_scan(const Wavefunction& psi, const PerturbationSpec& perturbations,
                               const std::vector<double>& epsilons, std::size_t trials, const Contour& loop,
                               std::uint64_t seed, int jobs)
{
    const int reference = total_charge(psi, loop);
    if (reference == 0) {
        throw std::invalid_argument("state carries no charge inside the loop");
    }
    const auto ref_charges = plaquette_charges(psi);
    Point ref_zero{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    for (const auto& c : ref_charges) {
        if (loop.encloses(c.position)) {
            ref_zero = c.position;
            break;
        }
    }
    const std::size_t ne = epsilons.size();
    std::vector<TrialRecord> records(ne * trials);
    std::vector<std::uint8_t> preserved(ne * trials, 0);
    const Grid& g = psi.grid();

#pragma omp parallel for schedule(dynamic) num_threads(jobs > 0 ? jobs : 1)
    for (long tl = 0; tl < static_cast<long>(trials); ++tl) {
        const auto t = static_cast<std::size_t>(tl);
        const Wavefunction delta = perturbation(g, perturbations, seed, t);
        for (std::size_t e = 0; e < ne; ++e) {
            const Wavefunction pert = add(psi, scale(delta, epsilons[e]));
            TrialRecord rec{epsilons[e], t, 0, {std::nan(""), std::nan("")}, std::nan("")};
            bool ok = true;
            try {
                rec.charge = total_charge(pert, loop);
            } catch (const std::domain_error&) {
                ok = false;
            }
            const auto scan = scan_charges(pert);
            for (std::size_t cell : scan.unresolved) {
                if (loop.encloses(g.coords(cell))) {
                    ok = false;
                }
            }
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : scan.charges) {
                if (!loop.encloses(c.position)) {
                    continue;
                }
                const double d = std::hypot(c.position[0] - ref_zero[0], c.position[1] - ref_zero[1]);
                if (d < best) {
                    best = d;
                    rec.zero = c.position;
                    rec.displacement = d;
                }
            }
            records[t * ne + e] = rec;
            preserved[t * ne + e] = ok && rec.charge == reference ? 1 : 0;
        }
    }

    StabilityReport r;
    r.epsilon_values = epsilons;
    r.trials_per_epsilon = trials;
    r.contour_min_density = contour_min_density(psi, loop);
    for (std::size_t e = 0; e < ne; ++e) {
        std::size_t kept = 0;
        std::size_t counted = 0;
        DisplacementStats st{0.0, 0.0};
        for (std::size_t t = 0; t < trials; ++t) {
            kept += preserved[t * ne + e];
            const double d = records[t * ne + e].displacement;
            if (std::isfinite(d)) {
                st.mean += d;
                st.max = std::max(st.max, d);
                ++counted;
            }
        }
        st.mean = counted > 0 ? st.mean / static_cast<double>(counted) : std::nan("");
        if (counted == 0) {
            st.max = std::nan("");
        }
        r.charge_preserved_fraction.push_back(trials > 0 ? static_cast<double>(kept) / static_cast<double>(trials)
                                                         : 0.0);
        r.displacement_stats.push_back(st);
    }
    // Rows ordered by epsilon, then trial.
    for (std::size_t e = 0; e < ne; ++e) {
        for (std::size_t t = 0; t < trials; ++t) {
            r.trials.push_back(records[t * ne + e]);
        }
    }
    return r;
}

void write_stability_json(const std::filesystem::path& path, const StabilityReport& r)
{
    io::json j;
    j["epsilon_values"] = r.epsilon_values;
    j["trials_per_epsilon"] = r.trials_per_epsilon;
    j["charge_preserved_fraction"] = r.charge_preserved_fraction;
    io::json stats = io::json::array();
    for (const auto& s : r.displacement_stats) {
        stats.push_back({{"mean", io::finite_or_null(s.mean)}, {"max", io::finite_or_null(s.max)}});
    }
    j["displacement_stats"] = stats;
    j["contour_min_density"] = r.contour_min_density;
    io::write_json(path, j);
}

void write_trials_csv(const std::filesystem::path& path, const StabilityReport& r)
{
    io::CsvWriter w(path, {"epsilon", "trial", "charge", "zero_x", "zero_y", "displacement"});
    for (const auto& t : r.trials) {
        w.row(t.epsilon, t.trial, t.charge, t.zero[0], t.zero[1], t.displacement);
    }
}

} // namespace nodelab
