#include "nodelab/field.hpp"
#include "nodelab/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace nodelab::field {

namespace {

using std::numbers::pi;

// Normalized Hermite polynomial H_n(y) / sqrt(2^n n!).
double hermite_p(int n, double y)
{
    if (n == 0) {
        return 1.0;
    }
    double prev = 1.0;
    double cur = std::sqrt(2.0) * y;
    for (int k = 1; k < n; ++k) {
        const double next = std::sqrt(2.0 / (k + 1)) * y * cur - std::sqrt(static_cast<double>(k) / (k + 1)) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

// Oscillator eigenfunction in y = sqrt(omega) q and its y-derivative.
double phi_n(int n, double y) { return std::pow(pi, -0.25) * hermite_p(n, y) * std::exp(-0.5 * y * y); }

double dphi_n(int n, double y)
{
    const double dp = n > 0 ? std::sqrt(2.0 * n) * hermite_p(n - 1, y) : 0.0;
    return std::pow(pi, -0.25) * std::exp(-0.5 * y * y) * (dp - y * hermite_p(n, y));
}

// (1/2) int (phi_n' phi_m' + y^2 phi_n phi_m) dy by the trapezoidal rule.
double ladder_matrix(int n, int m)
{
    const double L = 10.0 + 2.0 * std::sqrt(static_cast<double>(std::max(n, m)) + 1.0);
    const double h = 0.02;
    const auto steps = static_cast<long>(std::ceil(2.0 * L / h));
    double s = 0.0;
    for (long i = 0; i <= steps; ++i) {
        const double y = -L + static_cast<double>(i) * h;
        s += dphi_n(n, y) * dphi_n(m, y) + y * y * phi_n(n, y) * phi_n(m, y);
    }
    return 0.5 * s * h;
}

std::size_t flatten(const std::array<std::size_t, 3>& m, std::size_t N, int dim)
{
    std::size_t f = 0;
    for (int j = 0; j < dim; ++j) {
        f = f * N + m[static_cast<std::size_t>(j)];
    }
    return f;
}

std::array<std::size_t, 3> unflatten(std::size_t f, std::size_t N, int dim)
{
    std::array<std::size_t, 3> m{0, 0, 0};
    for (int j = dim - 1; j >= 0; --j) {
        m[static_cast<std::size_t>(j)] = f % N;
        f /= N;
    }
    return m;
}

std::array<std::size_t, 3> negate(const std::array<std::size_t, 3>& m, std::size_t N)
{
    return {(N - m[0]) % N, (N - m[1]) % N, (N - m[2]) % N};
}

FockFunctional renormalized(std::shared_ptr<const ModeBasis> basis, std::vector<FockTerm> terms)
{
    FockFunctional f(std::move(basis), std::move(terms));
    const double n = f.norm();
    if (!(n > 0.0)) {
        throw std::domain_error("functional vanishes");
    }
    auto scaled = f.terms();
    for (auto& t : scaled) {
        t.coeff /= n;
    }
    return {f.basis_ptr(), std::move(scaled)};
}

} // namespace

void LatticeSpec::validate() const
{
    if (dim < 1 || dim > 3 || sites < 2 || !(spacing > 0.0) || !(mass >= 0.0)) {
        throw std::invalid_argument("lattice needs 1 <= dim <= 3, sites >= 2, spacing > 0, mass >= 0");
    }
}

std::size_t LatticeSpec::volume_sites() const
{
    std::size_t v = 1;
    for (int j = 0; j < dim; ++j) {
        v *= sites;
    }
    return v;
}

ModeBasis::ModeBasis(const LatticeSpec& spec) : spec_(spec)
{
    spec_.validate();
    const std::size_t N = spec_.sites;
    const int d = spec_.dim;
    const std::size_t V = spec_.volume_sites();
    const double a = spec_.spacing;
    const double volume = static_cast<double>(V) * std::pow(a, d);
    auto make = [&](const std::array<std::size_t, 3>& m, Parity parity) {
        Mode mode;
        mode.parity = parity;
        double w2 = spec_.mass * spec_.mass;
        for (int j = 0; j < d; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            const long mj = static_cast<long>(m[uj]);
            mode.n[uj] = static_cast<int>(2 * mj <= static_cast<long>(N) ? mj : mj - static_cast<long>(N));
            mode.k[uj] = 2.0 * pi * mode.n[uj] / (static_cast<double>(N) * a);
            const double s = std::sin(0.5 * mode.k[uj] * a);
            w2 += 4.0 / (a * a) * s * s;
        }
        mode.omega = std::sqrt(w2);
        const double amp = parity == Parity::constant ? 1.0 / std::sqrt(volume)
                           : negate(m, N) == m        ? 1.0 / std::sqrt(volume)
                                                      : std::sqrt(2.0 / volume);
        mode.profile.resize(V);
        for (std::size_t x = 0; x < V; ++x) {
            const auto s = unflatten(x, N, d);
            double theta = 0.0;
            for (int j = 0; j < d; ++j) {
                const auto uj = static_cast<std::size_t>(j);
                theta += 2.0 * pi * static_cast<double>(mode.n[uj]) * static_cast<double>(s[uj]) / static_cast<double>(N);
            }
            mode.profile[x] = parity == Parity::constant ? amp
                              : parity == Parity::cos    ? amp * std::cos(theta)
                                                         : amp * std::sin(theta);
        }
        modes_.push_back(std::move(mode));
    };
    for (std::size_t f = 0; f < V; ++f) {
        const auto m = unflatten(f, N, d);
        const auto neg = negate(m, N);
        const std::size_t fneg = flatten(neg, N, d);
        if (f == 0) {
            make(m, Parity::constant);
        } else if (fneg == f) {
            make(m, Parity::cos);
        } else if (f < fneg) {
            make(m, Parity::cos);
            make(m, Parity::sin);
        }
    }
}

std::size_t ModeBasis::find(std::array<int, 3> n, Parity parity) const
{
    const auto N = static_cast<long>(spec_.sites);
    std::array<std::size_t, 3> m{0, 0, 0};
    for (int j = 0; j < spec_.dim; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        m[uj] = static_cast<std::size_t>(((n[uj] % N) + N) % N);
    }
    for (const auto& cand : {m, negate(m, spec_.sites)}) {
        for (std::size_t i = 0; i < modes_.size(); ++i) {
            std::array<std::size_t, 3> mi{0, 0, 0};
            for (int j = 0; j < spec_.dim; ++j) {
                const auto uj = static_cast<std::size_t>(j);
                mi[uj] = static_cast<std::size_t>(((modes_[i].n[uj] % N) + N) % N);
            }
            if (mi == cand && modes_[i].parity == parity) {
                return i;
            }
        }
    }
    throw std::out_of_range("no such mode");
}

std::vector<double> ModeBasis::project(const std::vector<double>& phi) const
{
    if (phi.size() != spec_.volume_sites()) {
        throw std::invalid_argument("field size does not match the lattice");
    }
    const double cell = std::pow(spec_.spacing, spec_.dim);
    std::vector<double> q(modes_.size(), 0.0);
    for (std::size_t k = 0; k < modes_.size(); ++k) {
        double s = 0.0;
        for (std::size_t x = 0; x < phi.size(); ++x) {
            s += modes_[k].profile[x] * phi[x];
        }
        q[k] = s * cell;
    }
    return q;
}

std::vector<double> ModeBasis::synthesize(const std::vector<double>& q) const
{
    std::vector<double> phi(spec_.volume_sites(), 0.0);
    for (std::size_t k = 0; k < std::min(q.size(), modes_.size()); ++k) {
        for (std::size_t x = 0; x < phi.size(); ++x) {
            phi[x] += q[k] * modes_[k].profile[x];
        }
    }
    return phi;
}

std::shared_ptr<const ModeBasis> build_modes(const LatticeSpec& spec) { return std::make_shared<const ModeBasis>(spec); }

FockFunctional::FockFunctional(std::shared_ptr<const ModeBasis> basis, std::vector<FockTerm> terms)
    : basis_(std::move(basis))
{
    if (!basis_) {
        throw std::invalid_argument("null mode basis");
    }
    for (const auto& m : basis_->modes()) {
        if (!(m.omega > 0.0)) {
            throw std::domain_error("massless zero mode");
        }
    }
    for (auto& t : terms) {
        for (auto it = t.occupation.begin(); it != t.occupation.end();) {
            if (it->first >= basis_->size()) {
                throw std::out_of_range("occupation of an unknown mode");
            }
            if (it->second < 0) {
                throw std::invalid_argument("negative occupation");
            }
            it = it->second == 0 ? t.occupation.erase(it) : std::next(it);
        }
        auto same = std::find_if(terms_.begin(), terms_.end(),
                                 [&](const FockTerm& u) { return u.occupation == t.occupation; });
        if (same == terms_.end()) {
            terms_.push_back(std::move(t));
        } else {
            same->coeff += t.coeff;
        }
    }
}

double FockFunctional::norm() const
{
    double s = 0.0;
    for (const auto& t : terms_) {
        s += std::norm(t.coeff);
    }
    return std::sqrt(s);
}

std::pair<double, cplx> FockFunctional::log_evaluate(const ModeCoords& q) const
{
    const auto& modes = basis_->modes();
    auto coord = [&](std::size_t k) { return k < q.size() ? q[k] : 0.0; };
    double log_gauss = 0.0;
    for (std::size_t k = 0; k < modes.size(); ++k) {
        const double w = modes[k].omega;
        const double x = coord(k);
        log_gauss += 0.25 * std::log(w / pi) - 0.5 * w * x * x;
    }
    const double ninf = -std::numeric_limits<double>::infinity();
    std::vector<double> logs(terms_.size(), ninf);
    std::vector<cplx> phases(terms_.size(), 0.0);
    double top = ninf;
    for (std::size_t t = 0; t < terms_.size(); ++t) {
        const auto& term = terms_[t];
        if (term.coeff == 0.0) {
            continue;
        }
        double lg = std::log(std::abs(term.coeff));
        double sign = 1.0;
        for (const auto& [k, n] : term.occupation) {
            const double p = hermite_p(n, std::sqrt(modes[k].omega) * coord(k));
            if (p == 0.0) {
                lg = ninf;
                break;
            }
            lg += std::log(std::abs(p));
            sign *= p < 0.0 ? -1.0 : 1.0;
        }
        logs[t] = lg;
        phases[t] = sign * term.coeff / std::abs(term.coeff);
        top = std::max(top, lg);
    }
    if (top == ninf) {
        return {ninf, cplx{1.0}};
    }
    cplx sum = 0.0;
    for (std::size_t t = 0; t < terms_.size(); ++t) {
        if (logs[t] != ninf) {
            sum += phases[t] * std::exp(logs[t] - top);
        }
    }
    const double mag = std::abs(sum);
    if (mag == 0.0) {
        return {ninf, cplx{1.0}};
    }
    return {log_gauss + top + std::log(mag), sum / mag};
}

cplx FockFunctional::evaluate(const ModeCoords& q) const
{
    const auto [lg, phase] = log_evaluate(q);
    return std::isinf(lg) ? cplx{0.0} : std::exp(lg) * phase;
}

FockFunctional vacuum(std::shared_ptr<const ModeBasis> basis) { return {std::move(basis), {FockTerm{}}}; }

FockFunctional apply_creation(const FockFunctional& f, std::size_t mode)
{
    if (mode >= f.basis().size()) {
        throw std::out_of_range("no such mode");
    }
    auto terms = f.terms();
    for (auto& t : terms) {
        const int n = t.occupation.count(mode) ? t.occupation[mode] : 0;
        t.coeff *= std::sqrt(static_cast<double>(n + 1));
        t.occupation[mode] = n + 1;
    }
    return renormalized(f.basis_ptr(), std::move(terms));
}

FockFunctional superpose(const std::vector<std::pair<cplx, FockFunctional>>& parts)
{
    if (parts.empty()) {
        throw std::invalid_argument("nothing to superpose");
    }
    const auto& basis = parts.front().second.basis_ptr();
    std::vector<FockTerm> terms;
    for (const auto& [c, f] : parts) {
        if (f.basis_ptr() != basis && !(f.basis().spec().dim == basis->spec().dim
                                         && f.basis().spec().sites == basis->spec().sites
                                         && f.basis().spec().spacing == basis->spec().spacing
                                         && f.basis().spec().mass == basis->spec().mass)) {
            throw std::invalid_argument("basis mismatch");
        }
        for (auto t : f.terms()) {
            t.coeff *= c;
            terms.push_back(std::move(t));
        }
    }
    return renormalized(basis, std::move(terms));
}

FockFunctional traveling_state(std::shared_ptr<const ModeBasis> basis, std::size_t cos_mode, std::size_t sin_mode)
{
    if (cos_mode == sin_mode) {
        throw std::invalid_argument("traveling state needs two distinct modes");
    }
    const double s = 1.0 / std::sqrt(2.0);
    return {std::move(basis), {FockTerm{{s, 0.0}, {{cos_mode, 1}}}, FockTerm{{0.0, s}, {{sin_mode, 1}}}}};
}

double energy(const FockFunctional& f)
{
    const auto& modes = f.basis().modes();
    const auto& terms = f.terms();
    std::map<std::pair<int, int>, double> cache;
    auto matrix = [&](int n, int m) {
        const auto key = std::minmax(n, m);
        auto it = cache.find(key);
        if (it == cache.end()) {
            it = cache.emplace(key, ladder_matrix(key.first, key.second)).first;
        }
        return it->second;
    };
    auto occ = [](const FockTerm& t, std::size_t k) {
        auto it = t.occupation.find(k);
        return it == t.occupation.end() ? 0 : it->second;
    };
    double e = 0.0;
    for (std::size_t k = 0; k < modes.size(); ++k) {
        cplx ek = 0.0;
        for (const auto& a : terms) {
            for (const auto& b : terms) {
                auto ra = a.occupation;
                auto rb = b.occupation;
                ra.erase(k);
                rb.erase(k);
                if (ra != rb) {
                    continue;
                }
                ek += std::conj(a.coeff) * b.coeff * matrix(occ(a, k), occ(b, k));
            }
        }
        e += modes[k].omega * ek.real();
    }
    const double n = f.norm();
    return e / (n * n);
}

Wavefunction section(const FockFunctional& f, std::size_t mode_1, std::size_t mode_2, const ModeCoords& base,
                     double window, std::size_t resolution)
{
    if (mode_1 == mode_2) {
        throw std::invalid_argument("section axes must be distinct");
    }
    if (mode_1 >= f.basis().size() || mode_2 >= f.basis().size()) {
        throw std::out_of_range("no such mode");
    }
    const Grid g = Grid::square(resolution, -window, window, false);
    std::vector<cplx> values(g.size());
    ModeCoords q0 = base;
    q0.resize(f.basis().size(), 0.0);
#pragma omp parallel for schedule(static)
    for (long il = 0; il < static_cast<long>(g.size()); ++il) {
        const auto i = static_cast<std::size_t>(il);
        ModeCoords q = q0;
        const Point p = g.coords(i);
        q[mode_1] += p[0];
        q[mode_2] += p[1];
        values[i] = f.evaluate(q);
    }
    return {g, std::move(values)};
}

void write_section(const std::filesystem::path& stem, const Wavefunction& sec, std::size_t mode_1,
                   std::size_t mode_2, const ModeCoords& base)
{
    io::json bp = io::json::array();
    for (double b : base) {
        bp.push_back(b);
    }
    io::write_wavefunction(stem, sec, {{"mode_1", mode_1}, {"mode_2", mode_2}, {"base_point", bp}});
}

} // namespace nodelab::field
