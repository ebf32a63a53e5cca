#include "nodelab/experiments.hpp"
#include "nodelab/contour.hpp"
#include "nodelab/evolve.hpp"
#include "nodelab/field.hpp"
#include "nodelab/nelson.hpp"
#include "nodelab/preparation.hpp"
#include "nodelab/states.hpp"
#include "nodelab/zeros.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

namespace nodelab::experiments {

namespace {

using std::numbers::pi;

class Context {
public:
    Context(const json& params, const RunOptions& opts, Report& report) : params_(params), opts_(opts), report_(report) {}

    long integer(const char* name) const { return params_.at(name).get<long>(); }
    std::size_t count(const char* name) const
    {
        const long v = integer(name);
        if (v <= 0) {
            throw UsageError(std::string("parameter ") + name + " must be positive");
        }
        return static_cast<std::size_t>(v);
    }
    double number(const char* name) const { return params_.at(name).get<double>(); }
    double positive(const char* name) const
    {
        const double v = number(name);
        if (!(v > 0.0)) {
            throw UsageError(std::string("parameter ") + name + " must be positive");
        }
        return v;
    }
    bool flag(const char* name) const { return params_.at(name).get<bool>(); }
    std::string text(const char* name) const { return params_.at(name).get<std::string>(); }
    std::vector<double> list(const char* name) const
    {
        auto v = params_.at(name).get<std::vector<double>>();
        if (v.empty()) {
            throw UsageError(std::string("parameter ") + name + " must not be empty");
        }
        return v;
    }
    std::uint64_t seed() const { return report_.seed; }
    int jobs() const { return opts_.jobs; }

    void metric(const std::string& name, double value) { report_.metrics[name] = io::finite_or_null(value); }
    void verdict(const std::string& criterion, bool pass) { report_.verdict[criterion] = pass ? "pass" : "fail"; }
    void informational(const std::string& criterion) { report_.verdict[criterion] = "informational"; }
    std::filesystem::path artifact(const std::string& file)
    {
        report_.artifact_paths.push_back(file);
        return opts_.out_dir / file;
    }

private:
    const json& params_;
    const RunOptions& opts_;
    Report& report_;
};

std::string indexed(const std::string& base, std::size_t i) { return base + "_" + std::to_string(i); }

// E1: minimum-density protection under trap evolution.
void positivity(Context& c)
{
    const std::string state = c.text("state");
    const Grid g = Grid::line(c.count("grid_n"), -c.positive("half_width"), c.positive("half_width"));
    const std::size_t spp = c.count("steps_per_period");
    const std::size_t rpp = c.count("records_per_period");
    if (spp % rpp != 0) {
        throw UsageError("records_per_period must divide steps_per_period");
    }
    const double dt = 2 * pi / static_cast<double>(spp);
    const EvolutionConfig cfg{dt, c.count("periods") * spp, PotentialSpec::harmonic(), spp / rpp};

    Wavefunction psi0 = states::harmonic_eigenstate(g, 0);
    if (state == "coherent") {
        psi0 = states::coherent_state(g, c.number("x0"));
    } else if (state == "two-mode") {
        const double m = c.number("mix");
        psi0 = normalize(add(states::harmonic_eigenstate(g, 0), scale(states::harmonic_eigenstate(g, 2), m)));
    } else if (state != "ground") {
        throw UsageError("state must be one of ground, coherent, two-mode");
    }
    const double roi = c.positive("roi");
    const auto series = min_density_series(psi0, cfg, Region{{-roi, -roi}, {roi, roi}});
    write_series_csv(c.artifact("series.csv"), series, 1);

    const double rho0 = series.front().min_rho;
    double lo = 1e300;
    double hi = 0.0;
    double floor = 1e300;
    double norm_drift = 0.0;
    double energy_drift = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        floor = std::min(floor, s.min_rho);
        norm_drift = std::max(norm_drift, std::abs(s.norm - 1.0));
        energy_drift = std::max(energy_drift, std::abs(s.energy - series.front().energy) / std::abs(series.front().energy));
        if (i % rpp == 0) {
            lo = std::min(lo, s.min_rho / rho0);
            hi = std::max(hi, s.min_rho / rho0);
        }
    }
    c.metric("min_rho_initial", rho0);
    c.metric("min_rho_floor", floor);
    c.metric("min_rho_floor_ratio", lo);
    c.metric("min_rho_ceiling_ratio", hi);
    c.metric("norm_drift_max", norm_drift);
    c.metric("energy_drift_max", energy_drift);
    if (state == "two-mode") {
        c.informational("min_rho_within_1pct");
    } else {
        c.verdict("min_rho_within_1pct", lo >= 0.99 && hi <= 1.01);
    }

    if (!c.flag("vortex_check")) {
        return;
    }
    const double vl = c.positive("vortex_half_width");
    const Grid g2 = Grid::square(c.count("vortex_grid_n"), -vl, vl);
    const double h = g2.spacing(0);
    const EvolutionConfig vcfg{dt, c.count("vortex_periods") * spp, PotentialSpec::harmonic(), spp};
    io::CsvWriter out(c.artifact("vortex.csv"), {"t", "charges", "charge", "zero_x", "zero_y"});
    std::size_t records = 0;
    std::size_t ok = 0;
    double worst = 0.0;
    evolve(states::vortex(g2, 1), vcfg, [&](double t, const Wavefunction& psi) {
        int n = 0;
        int q = 0;
        Point nearest{1e300, 1e300};
        for (const auto& ch : plaquette_charges(psi)) {
            if (std::hypot(ch.position[0], ch.position[1]) <= 3.0) {
                ++n;
                q += ch.charge;
                if (std::hypot(ch.position[0], ch.position[1]) < std::hypot(nearest[0], nearest[1])) {
                    nearest = ch.position;
                }
            }
        }
        const double offset = n > 0 ? std::hypot(nearest[0], nearest[1]) / h : std::numeric_limits<double>::infinity();
        worst = std::max(worst, offset);
        ok += (n == 1 && q == 1 && offset <= 1.0) ? 1 : 0;
        ++records;
        out.row(t, n, q, nearest[0], nearest[1]);
    });
    c.metric("vortex_records", static_cast<double>(records));
    c.metric("vortex_records_ok", static_cast<double>(ok));
    c.metric("vortex_max_offset_cells", worst);
    c.verdict("vortex_node_persists", ok == records);
}

// E2: charge preservation under random perturbations.
void winding_stability(Context& c)
{
    const double L = c.positive("half_width");
    const Grid g = Grid::square(c.count("grid_n"), -L, L);
    const auto psi = states::vortex_unnormalized(g, 1);
    const auto loop = Contour::circle(g, {0.0, 0.0}, c.positive("loop_radius"));
    const double rho0 = contour_min_density(psi, loop);
    const auto fractions = c.list("eps2_fractions");
    std::vector<double> eps;
    for (double f : fractions) {
        if (!(f > 0.0)) {
            throw UsageError("eps2_fractions must be positive");
        }
        eps.push_back(std::sqrt(f * rho0));
    }
    PerturbationSpec spec;
    spec.bandwidth = static_cast<int>(c.count("bandwidth"));
    const auto r = stability_scan(psi, spec, eps, c.count("trials"), loop, c.seed(), c.jobs());
    write_stability_json(c.artifact("stability.json"), r);
    write_trials_csv(c.artifact("trials.csv"), r);

    c.metric("rho0", rho0);
    double guarded = 1.0;
    bool any = false;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        c.metric(indexed("eps2_fraction", i), fractions[i]);
        c.metric(indexed("epsilon", i), eps[i]);
        c.metric(indexed("charge_preserved_fraction", i), r.charge_preserved_fraction[i]);
        c.metric(indexed("displacement_mean", i), r.displacement_stats[i].mean);
        c.metric(indexed("displacement_max", i), r.displacement_stats[i].max);
        if (fractions[i] <= 0.01) {
            guarded = std::min(guarded, r.charge_preserved_fraction[i]);
            any = true;
        }
    }
    if (any) {
        c.metric("charge_preserved_fraction", guarded);
        c.verdict("charge_preserved", guarded == 1.0);
    } else {
        c.informational("charge_preserved");
    }
}

// E3: an imaginary admixture fills the node of a real 1D state.
void node_fill(Context& c)
{
    const double L = c.positive("half_width");
    const Grid g = Grid::line(c.count("grid_n"), -L, L);
    const double roi = c.positive("roi");
    const auto p0 = states::harmonic_eigenstate(g, 0);
    const auto p1 = states::harmonic_eigenstate(g, 1);
    const double psi0_at_0 = std::pow(pi, -0.25);
    io::CsvWriter out(c.artifact("node_fill.csv"), {"epsilon", "min_density", "expected", "ratio", "argmin_x"});
    double worst = 1.0;
    bool ok = true;
    const auto eps = c.list("epsilons");
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const auto psi = add(p1, scale(p0, cplx{0.0, eps[i]}));
        const auto [v, at] = min_density(psi, Region{{-roi, -roi}, {roi, roi}});
        const double expected = eps[i] * eps[i] * psi0_at_0 * psi0_at_0;
        const double ratio = v / expected;
        out.row(eps[i], v, expected, ratio, g.coords(at)[0]);
        c.metric(indexed("min_density", i), v);
        c.metric(indexed("ratio", i), ratio);
        if (std::abs(ratio - 1.0) > std::abs(worst - 1.0)) {
            worst = ratio;
        }
        ok = ok && ratio >= 0.99 && ratio <= 1.01;
    }
    c.metric("min_density_ratio", worst);
    c.verdict("node_fill_within_1pct", ok);
}

double ks_ground_state(std::vector<Point> samples)
{
    std::sort(samples.begin(), samples.end(), [](const Point& a, const Point& b) { return a[0] < b[0]; });
    const auto n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double F = 0.5 * std::erfc(-samples[i][0]);
        d = std::max({d, F - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - F});
    }
    return d;
}

// E4: Nelson ensembles stay |psi|^2-distributed and avoid the node.
void nelson_equivariance(Context& c)
{
    const double L = c.positive("half_width");
    const Grid g = Grid::line(c.count("grid_n"), -L, L);
    const auto psi = states::harmonic_eigenstate(g, 0);
    NelsonConfig cfg;
    cfg.dt = c.positive("dt");
    cfg.n_paths = c.count("n_paths");
    cfg.n_steps = static_cast<std::size_t>(std::llround(c.positive("t_final") / cfg.dt));
    cfg.record_every = c.count("record_every");
    cfg.drift_clamp = c.positive("drift_clamp");
    cfg.seed = c.seed();
    cfg.jobs = c.jobs();
    try {
        validate(cfg);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto ens = simulate(psi, cfg);
    write_ensemble_csv(c.artifact("ensemble.csv"), ens, static_cast<std::size_t>(c.integer("ensemble_csv_paths")));

    double ks_max = 0.0;
    double ks_grid_max = 0.0;
    {
        io::CsvWriter out(c.artifact("equivariance.csv"), {"t", "ks", "ks_grid"});
        for (std::size_t r = 0; r < ens.records(); ++r) {
            const auto s = ens.slice(r);
            const double ks = ks_ground_state(s);
            const double ksg = equivariance_stat(s, psi);
            ks_max = std::max(ks_max, ks);
            ks_grid_max = std::max(ks_grid_max, ksg);
            out.row(ens.times[r], ks, ksg);
        }
    }
    const auto last = ens.slice(ens.records() - 1);
    {
        // Histogram of the final ensemble against |psi|^2.
        io::CsvWriter out(c.artifact("histogram.csv"), {"x_lo", "x_hi", "count", "expected"});
        const int bins = 80;
        const double lo = -5.0;
        const double w = 10.0 / bins;
        std::vector<double> counts(bins, 0.0);
        for (const auto& p : last) {
            const auto b = static_cast<long>(std::floor((p[0] - lo) / w));
            if (b >= 0 && b < bins) {
                counts[static_cast<std::size_t>(b)] += 1.0;
            }
        }
        for (int b = 0; b < bins; ++b) {
            const double a = lo + b * w;
            const double expected = 0.5 * (std::erf(a + w) - std::erf(a)) * static_cast<double>(last.size());
            out.row(a, a + w, counts[static_cast<std::size_t>(b)], expected);
        }
    }
    c.metric("n_alive", static_cast<double>(last.size()));
    c.metric("ks_max", ks_max);
    c.metric("ks_grid_max", ks_grid_max);
    c.metric("ks_final", ks_ground_state(last));
    c.metric("ks_critical_99", 1.63 / std::sqrt(static_cast<double>(last.size())));
    c.verdict("ks_below_0.01", ks_max < 0.01);

    if (!c.flag("vortex_check")) {
        return;
    }
    const double vl = c.positive("vortex_half_width");
    const Grid g2 = Grid::square(c.count("vortex_grid_n"), -vl, vl);
    const auto vort = states::vortex(g2, 1);
    NelsonConfig vcfg = cfg;
    vcfg.n_paths = c.count("vortex_paths");
    vcfg.n_steps = static_cast<std::size_t>(std::llround(c.positive("vortex_t") / cfg.dt));
    vcfg.seed = c.seed() + 1;
    const auto vens = simulate(vort, vcfg);
    const double r_bin = c.positive("node_radius");
    const double r_avoid = c.positive("avoid_radius");
    const double p = mass_within(vort, {0.0, 0.0}, r_bin, 16);
    const double pa = mass_within(vort, {0.0, 0.0}, r_avoid, 16);
    double z_max = 0.0;
    double za_max = -1e300;
    double chi2_p = 0.0;
    io::CsvWriter out(c.artifact("node.csv"), {"t", "fraction", "expected", "se", "fraction_avoid", "expected_avoid", "se_avoid"});
    for (std::size_t r = 0; r < vens.records(); ++r) {
        const auto s = vens.slice(r);
        const auto n = static_cast<double>(s.size());
        const double f = fraction_within(s, {0.0, 0.0}, r_bin, 2);
        const double fa = fraction_within(s, {0.0, 0.0}, r_avoid, 2);
        const double se = std::sqrt(p * (1.0 - p) / n);
        const double sea = std::sqrt(pa * (1.0 - pa) / n);
        z_max = std::max(z_max, std::abs(f - p) / se);
        za_max = std::max(za_max, (fa - pa) / sea);
        out.row(vens.times[r], f, p, se, fa, pa, sea);
        if (r + 1 == vens.records()) {
            chi2_p = equivariance_stat(s, vort);
        }
    }
    c.metric("node_bin_expected", p);
    c.metric("node_bin_z_max", z_max);
    c.metric("avoid_bin_expected", pa);
    c.metric("avoid_bin_excess_z_max", za_max);
    c.metric("chi2_p_final", chi2_p);
    c.verdict("node_bin_within_3se", z_max <= 3.0);
    c.verdict("node_avoidance", za_max <= 3.0);
}

// E5: conditioning on an imperfect pointer leaves a small contamination.
void preparation(Context& c)
{
    const double w = c.positive("width");
    const std::size_t branches = c.count("branches");
    const auto target = static_cast<std::size_t>(c.integer("target"));
    if (target >= branches) {
        throw UsageError("target must be below branches");
    }
    const double L = c.positive("sys_half_width");
    const Grid sys = Grid::line(c.count("sys_grid_n"), -L, L);
    const double D = c.positive("device_half_width");
    const Grid dev = Grid::line(c.count("device_grid_n"), -D, D);
    const auto pointers = PointerFamily::evenly_spaced(branches, c.positive("separation") * w, w);
    const double q = pointers.centers[target] + c.number("offset") * w;
    const auto alphas = random_phase_alphas(branches, c.seed());
    std::vector<Wavefunction> basis;
    for (std::size_t i = 0; i < branches; ++i) {
        basis.push_back(states::harmonic_eigenstate(sys, static_cast<int>(i)));
    }
    const double roi = c.positive("roi");
    const auto r = prepare_and_probe(alphas, basis, pointers, dev, q, target, Region{{-roi, -roi}, {roi, roi}});
    json params = {{"alphas_re", json::array()}, {"alphas_im", json::array()}, {"centers", pointers.centers},
                   {"width", w}, {"q_obs", q}, {"target", target}};
    for (const cplx& a : alphas) {
        params["alphas_re"].push_back(a.real());
        params["alphas_im"].push_back(a.imag());
    }
    io::write_json(c.artifact("preparation.json"), report_to_json(r, params));
    io::write_wavefunction(c.artifact("prepared.csv").replace_extension(), r.prepared);
    c.artifact("prepared.json");

    const double bound = contamination_bound(alphas, pointers, q, target);
    c.metric("fidelity", r.fidelity);
    c.metric("infidelity", 1.0 - r.fidelity);
    c.metric("delta_norm", r.delta_norm);
    c.metric("contamination_bound", bound);
    c.metric("min_density", r.min_density);
    c.verdict("fidelity_above_1-1e-6", r.fidelity > 1.0 - 1e-6);
    c.verdict("contamination_bound", r.delta_norm <= bound + 1e-12);
    if (target % 2 == 1) {
        // Odd targets have a simple node at the origin.
        cplx contamination = 0.0;
        for (std::size_t j = 0; j < branches; ++j) {
            if (j != target) {
                contamination += alphas[j] * pointer_amplitude(pointers, j, q) * states::hermite_function(static_cast<int>(j), 0.0);
            }
        }
        const double predicted = std::norm(contamination / (alphas[target] * pointer_amplitude(pointers, target, q)));
        c.metric("predicted_min_density", predicted);
        c.metric("min_density_ratio", r.min_density / predicted);
        c.verdict("node_filled", r.min_density > 0.0);
        c.verdict("node_fill_within_factor_2", r.min_density >= 0.5 * predicted && r.min_density <= 2.0 * predicted);
    } else {
        c.informational("node_filled");
    }

    if (!c.flag("vortex_check")) {
        return;
    }
    const double vl = c.positive("vortex_half_width");
    const Grid g2 = Grid::square(c.count("vortex_grid_n"), -vl, vl);
    const std::vector<Wavefunction> b2{states::ground_state_2d(g2), states::vortex(g2, 1)};
    const auto two = PointerFamily::evenly_spaced(2, c.positive("separation") * w, w);
    const auto a2 = random_phase_alphas(2, c.seed() + 1);
    const double q2 = two.centers[1] + c.number("offset") * w;
    const auto r2 = prepare_and_probe(a2, b2, two, dev, q2, 1, Region{{-3.0, -3.0}, {3.0, 3.0}});
    io::write_json(c.artifact("preparation_2d.json"), report_to_json(r2, {{"q_obs", q2}, {"target", 1}}));
    int charge = 0;
    double disp = std::numeric_limits<double>::infinity();
    for (const auto& ch : r2.charges) {
        charge += ch.charge;
        disp = std::min(disp, std::hypot(ch.position[0], ch.position[1]));
    }
    c.metric("vortex_fidelity", r2.fidelity);
    c.metric("vortex_charge_count", static_cast<double>(r2.charges.size()));
    c.metric("vortex_charge", charge);
    c.metric("vortex_displacement", disp);
    c.verdict("vortex_retained", r2.charges.size() == 1 && charge == 1 && disp < 0.1);
}

std::shared_ptr<const field::ModeBasis> lattice(const Context& c, std::size_t sites)
{
    field::LatticeSpec spec{static_cast<int>(c.integer("dim")), sites, c.number("spacing"), c.number("mass")};
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return field::build_modes(spec);
}

std::size_t mode_index(const field::ModeBasis& b, long n, field::Parity parity)
{
    try {
        return b.find({static_cast<int>(n), 0, 0}, parity);
    } catch (const std::out_of_range&) {
        throw UsageError("no lattice mode with n = " + std::to_string(n) + " of that parity");
    }
}

// E6: a standing one-particle node is destroyed by an imaginary vacuum part.
void field_standing(Context& c)
{
    using namespace field;
    const auto basis = lattice(c, c.count("sites"));
    const std::size_t k = mode_index(*basis, c.integer("mode"), Parity::cos);
    const std::size_t partner = mode_index(*basis, c.integer("partner_mode"), Parity::sin);
    const double window = c.positive("window");
    const std::size_t res = c.count("resolution");
    const ModeCoords origin(basis->size(), 0.0);
    const auto vac = vacuum(basis);
    const auto one = apply_creation(vac, k);
    const auto envelope = section(vac, k, partner, origin, window, res);
    const double peak = std::norm(vac.evaluate({}));
    double worst = 0.0;
    double worst_exact = 0.0;
    std::size_t charged = 0;
    bool zero_free = true;
    const auto eps = c.list("epsilons");
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const auto f = superpose({{1.0, one}, {cplx{0.0, eps[i]}, vac}});
        const auto sec = section(f, k, partner, origin, window, res);
        write_section(c.artifact("section_" + std::to_string(i) + ".csv").replace_extension(), sec, k, partner, origin);
        c.artifact("section_" + std::to_string(i) + ".json");
        double lo = 1e300;
        double lo_abs = 1e300;
        for (std::size_t j = 0; j < sec.size(); ++j) {
            lo = std::min(lo, std::norm(sec[j]) / std::norm(envelope[j]));
            lo_abs = std::min(lo_abs, std::norm(sec[j]));
        }
        const double e2 = eps[i] * eps[i];
        const double base = std::norm(f.evaluate({}));
        const auto charges = plaquette_charges(sec);
        c.metric(indexed("min_ratio", i), lo);
        c.metric(indexed("base_density", i), base);
        c.metric(indexed("charges", i), static_cast<double>(charges.size()));
        worst = std::max({worst, std::abs(lo / e2 - 1.0), std::abs(base / (e2 * peak) - 1.0)});
        worst_exact = std::max(worst_exact, std::abs(lo * (1.0 + e2) / e2 - 1.0));
        charged += charges.size();
        zero_free = zero_free && lo_abs > 0.0 && charges.empty();
    }
    c.metric("min_density_rel_error_max", worst);
    c.metric("normalized_rel_error_max", worst_exact);
    c.metric("section_charges_total", static_cast<double>(charged));
    c.verdict("standing_min_within_1pct", worst < 0.01);
    c.verdict("zero_free_sections", zero_free);

    const auto fine = lattice(c, c.count("dispersion_sites"));
    double derr = 0.0;
    std::size_t checked = 0;
    for (const auto& m : fine->modes()) {
        const double k2 = m.k[0] * m.k[0] + m.k[1] * m.k[1] + m.k[2] * m.k[2];
        if (std::sqrt(k2) * fine->spec().spacing <= 0.3) {
            const double w2 = m.omega * m.omega;
            derr = std::max(derr, std::abs(w2 - (fine->spec().mass * fine->spec().mass + k2)) / w2);
            ++checked;
        }
    }
    c.metric("dispersion_modes_checked", static_cast<double>(checked));
    c.metric("dispersion_max_rel_error", derr);
    c.verdict("dispersion_within_1pct", checked > 0 && derr < 0.01);
    double zero_point = 0.0;
    for (const auto& m : basis->modes()) {
        zero_point += 0.5 * m.omega;
    }
    c.metric("vacuum_energy_error", std::abs(energy(vac) - zero_point));
}

// E7: the traveling one-particle zero survives a vacuum admixture.
void field_vacuum_superposition(Context& c)
{
    using namespace field;
    const auto basis = lattice(c, c.count("sites"));
    const std::size_t kc = mode_index(*basis, c.integer("mode"), Parity::cos);
    const std::size_t ks = mode_index(*basis, c.integer("mode"), Parity::sin);
    const double w = (*basis)[kc].omega;
    const auto re = c.list("alpha_re");
    const auto im = c.list("alpha_im");
    if (re.size() != im.size()) {
        throw UsageError("alpha_re and alpha_im must have equal length");
    }
    const double window = c.positive("window");
    const std::size_t res = c.count("resolution");
    const ModeCoords origin(basis->size(), 0.0);
    const auto vac = vacuum(basis);
    const auto t = traveling_state(basis, kc, ks);
    io::CsvWriter out(c.artifact("zeros.csv"), {"alpha_re", "alpha_im", "charge", "zero_x", "zero_y", "expected_x", "expected_y"});
    bool ok = true;
    double worst = 0.0;
    for (std::size_t i = 0; i < re.size(); ++i) {
        const cplx alpha{re[i], im[i]};
        const auto f = superpose({{1.0, t}, {alpha, vac}});
        const auto sec = section(f, kc, ks, origin, window, res);
        write_section(c.artifact("section_" + std::to_string(i) + ".csv").replace_extension(), sec, kc, ks, origin);
        c.artifact("section_" + std::to_string(i) + ".json");
        const cplx root = -alpha / std::sqrt(w);
        const auto charges = plaquette_charges(sec);
        int q = 0;
        Point z{std::nan(""), std::nan("")};
        for (const auto& ch : charges) {
            q += ch.charge;
            z = ch.position;
        }
        const double dist = std::hypot(z[0] - root.real(), z[1] - root.imag());
        const double err = std::abs(root) > 0.0 ? dist / std::abs(root) : dist / sec.grid().spacing(0);
        out.row(alpha.real(), alpha.imag(), q, z[0], z[1], root.real(), root.imag());
        c.metric(indexed("charge", i), q);
        c.metric(indexed("zero_x", i), z[0]);
        c.metric(indexed("zero_y", i), z[1]);
        c.metric(indexed("expected_x", i), root.real());
        c.metric(indexed("expected_y", i), root.imag());
        c.metric(indexed("position_error", i), err);
        worst = std::max(worst, std::isfinite(err) ? err : 1e300);
        ok = ok && charges.size() == 1 && q == 1 && err <= 0.02;
    }
    c.metric("position_error_max", worst);
    c.verdict("traveling_zero_retained", ok);
}

// E8: a constant shift splits a charge-2 zero into two unit zeros.
void charge_splitting(Context& c)
{
    const double L = c.positive("half_width");
    const Grid g = Grid::square(c.count("grid_n"), -L, L);
    const auto psi = states::vortex_unnormalized(g, 2);
    const auto loop = Contour::circle(g, {0.0, 0.0}, c.positive("loop_radius"));
    PerturbationSpec spec;
    spec.kind = PerturbationSpec::Kind::constant;
    const auto shift = perturbation(g, spec, c.seed(), 0);
    io::CsvWriter out(c.artifact("zeros.csv"), {"epsilon", "charge", "zero_x", "zero_y"});
    bool ok = true;
    double worst = 0.0;
    const auto eps = c.list("epsilons");
    for (std::size_t i = 0; i < eps.size(); ++i) {
        std::vector<PlaquetteCharge> inside;
        for (const auto& ch : plaquette_charges(add(psi, scale(shift, eps[i])))) {
            if (loop.encloses(ch.position)) {
                inside.push_back(ch);
                out.row(eps[i], ch.charge, ch.position[0], ch.position[1]);
            }
        }
        const double expected = 2.0 * std::sqrt(eps[i]);
        double sep = std::nan("");
        bool unit = inside.size() == 2;
        for (const auto& ch : inside) {
            unit = unit && ch.charge == 1;
        }
        if (inside.size() == 2) {
            sep = std::hypot(inside[0].position[0] - inside[1].position[0], inside[0].position[1] - inside[1].position[1]);
        }
        const double err = std::abs(sep / expected - 1.0);
        c.metric(indexed("zeros", i), static_cast<double>(inside.size()));
        c.metric(indexed("separation", i), sep);
        c.metric(indexed("expected_separation", i), expected);
        c.metric(indexed("rel_error", i), err);
        worst = std::max(worst, std::isfinite(err) ? err : 1e300);
        ok = ok && unit && err <= 0.05;
    }
    c.metric("rel_error_max", worst);
    c.verdict("split_within_5pct", ok);
}

using Runner = std::function<void(Context&)>;

struct Entry {
    ExperimentInfo info;
    Runner run;
};

json numbers(std::initializer_list<double> v) { return json(std::vector<double>(v)); }

const std::vector<Entry>& entries()
{
    static const std::vector<Entry> all = [] {
        std::vector<Entry> e;
        e.push_back({{"E1", "positivity", "Minimum density of nodeless states under harmonic evolution; node persistence of the L_z=1 state",
                      "evolution keeps a positive density away from zero",
                      {{"state", "coherent", "ground, coherent or two-mode"},
                       {"grid_n", 128, "1D grid points"},
                       {"half_width", 10.0, "1D domain [-L, L)"},
                       {"periods", 10, "trap periods"},
                       {"steps_per_period", 6284, "time steps per period (dt = 2 pi / steps)"},
                       {"records_per_period", 1, "recorded samples per period"},
                       {"roi", 3.0, "minimum taken over |x| <= roi"},
                       {"x0", 2.0, "coherent-state displacement"},
                       {"mix", 0.3, "psi_2 weight of the two-mode state"},
                       {"vortex_check", true, "also evolve the 2D L_z=1 state"},
                       {"vortex_grid_n", 64, "2D grid points per axis"},
                       {"vortex_half_width", 6.0, "2D domain [-L, L)^2"},
                       {"vortex_periods", 10, "2D trap periods"},
                       {"seed", 0, "unused; recorded"}}},
                     positivity});
        e.push_back({{"E2", "winding-stability", "Charge preservation of the canonical vortex under random band-limited perturbations",
                      "a winding number cannot change under small deformations",
                      {{"grid_n", 128, "grid points per axis"},
                       {"half_width", 6.0, "domain [-L, L)^2"},
                       {"loop_radius", 1.0, "reference circle radius"},
                       {"eps2_fractions", numbers({0.01}), "epsilon^2 / rho0 values"},
                       {"trials", 100, "perturbations per epsilon"},
                       {"bandwidth", 8, "Fourier modes per axis"},
                       {"seed", 2024, "perturbation seed"}}},
                     winding_stability});
        e.push_back({{"E3", "node-fill-1d", "Minimum density of psi_1 + i eps psi_0 against eps^2 |psi_0(0)|^2",
                      "an imaginary vacuum admixture destroys a one-dimensional node",
                      {{"grid_n", 256, "grid points"},
                       {"half_width", 10.0, "domain [-L, L)"},
                       {"epsilons", numbers({1e-1, 1e-2, 1e-3}), "admixture amplitudes"},
                       {"roi", 0.5, "minimum taken over |x| <= roi"},
                       {"seed", 0, "unused; recorded"}}},
                     node_fill});
        e.push_back({{"E4", "nelson-equivariance", "Nelson diffusion: KS equivariance in the ground state and node avoidance for L_z=1",
                      "a stochastic particle theory reproduces |psi|^2 statistics",
                      {{"grid_n", 256, "1D grid points"},
                       {"half_width", 10.0, "1D domain [-L, L)"},
                       {"n_paths", 100000, "1D paths"},
                       {"dt", 1e-3, "time step"},
                       {"t_final", 5.0, "1D run time"},
                       {"record_every", 1000, "steps between records"},
                       {"drift_clamp", 1000.0, "drift limit in cells per unit time"},
                       {"ensemble_csv_paths", 200, "paths written to ensemble.csv"},
                       {"vortex_check", true, "also run the 2D L_z=1 ensemble"},
                       {"vortex_grid_n", 128, "2D grid points per axis"},
                       {"vortex_half_width", 6.0, "2D domain [-L, L)^2"},
                       {"vortex_paths", 100000, "2D paths"},
                       {"vortex_t", 1.0, "2D run time"},
                       {"node_radius", 0.2, "node bin radius"},
                       {"avoid_radius", 0.1, "node avoidance radius"},
                       {"seed", 7, "path seed"}}},
                     nelson_equivariance});
        e.push_back({{"E5", "preparation-contamination", "Conditioning on Gaussian pointers: fidelity, contamination and node filling",
                      "preparation leaves a small but unknown error term",
                      {{"width", 0.5, "pointer width w"},
                       {"separation", 6.0, "pointer spacing in units of w"},
                       {"branches", 3, "oscillator branches"},
                       {"target", 1, "observed branch"},
                       {"offset", 0.0, "observation offset in units of w"},
                       {"sys_grid_n", 256, "system grid points"},
                       {"sys_half_width", 10.0, "system domain [-L, L)"},
                       {"device_grid_n", 256, "device grid points"},
                       {"device_half_width", 8.0, "device domain [-L, L)"},
                       {"roi", 1.0, "node region |x| <= roi"},
                       {"vortex_check", true, "also prepare the 2D L_z=1 target"},
                       {"vortex_grid_n", 64, "2D grid points per axis"},
                       {"vortex_half_width", 6.0, "2D domain [-L, L)^2"},
                       {"seed", 11, "phase seed for the unknown coefficients"}}},
                     preparation});
        const std::vector<ParamSpec> lattice_params{{"dim", 1, "lattice dimension"},
                                                    {"sites", 16, "sites per axis"},
                                                    {"spacing", 1.0, "lattice spacing"},
                                                    {"mass", 1.0, "field mass"}};
        auto with = [&](std::vector<ParamSpec> extra) {
            auto p = lattice_params;
            p.insert(p.end(), extra.begin(), extra.end());
            return p;
        };
        e.push_back({{"E6", "field-standing-node", "Standing one-particle state plus i eps vacuum: zero-free sections",
                      "a field-mode node is not stable against a vacuum admixture",
                      with({{"mode", 2, "excited cos mode n"},
                            {"partner_mode", 3, "sin mode n spanning the section"},
                            {"epsilons", numbers({1e-1, 1e-2, 1e-3}), "vacuum amplitudes"},
                            {"window", 2.0, "section half-width"},
                            {"resolution", 64, "section points per axis"},
                            {"dispersion_sites", 64, "sites for the continuum dispersion check"},
                            {"seed", 0, "unused; recorded"}})},
                     field_standing});
        e.push_back({{"E7", "field-vacuum-superposition", "Traveling one-particle state plus alpha vacuum: the +1 zero moves to -alpha/sqrt(omega)",
                      "a traveling-mode zero only shifts under a vacuum admixture",
                      with({{"mode", 1, "mode n of the cos/sin pair"},
                            {"alpha_re", numbers({0.0, 0.2, 0.0, -0.35, 0.5, 0.3}), "Re alpha"},
                            {"alpha_im", numbers({0.0, 0.0, 0.5, 0.35, 0.0, -0.4}), "Im alpha"},
                            {"window", 3.0, "section half-width"},
                            {"resolution", 96, "section points per axis"},
                            {"seed", 0, "unused; recorded"}})},
                     field_vacuum_superposition});
        e.push_back({{"E8", "charge-splitting", "Charge-2 zero plus a constant: two unit zeros at the roots of z^2 = -eps",
                      "a perturbation only shifts or splits zeros, the total charge stays",
                      {{"grid_n", 256, "grid points per axis"},
                       {"half_width", 6.0, "domain [-L, L)^2"},
                       {"epsilons", numbers({0.01, 0.04}), "constant shifts"},
                       {"loop_radius", 1.0, "zeros counted inside this circle"},
                       {"seed", 0, "unused; recorded"}}},
                     charge_splitting});
        return e;
    }();
    return all;
}

const Entry& entry(const ExperimentInfo& info)
{
    for (const auto& e : entries()) {
        if (e.info.id == info.id) {
            return e;
        }
    }
    throw UsageError("unknown experiment " + info.id);
}

json coerce(const ParamSpec& spec, const json& value)
{
    const json& d = spec.default_value;
    auto bad = [&] { return UsageError("parameter " + spec.name + " expects " + std::string(d.type_name()) + ", got " + value.dump()); };
    if (d.is_boolean()) {
        if (!value.is_boolean()) {
            throw bad();
        }
        return value;
    }
    if (d.is_number_integer()) {
        if (value.is_number_integer()) {
            return value;
        }
        if (value.is_number_float() && std::floor(value.get<double>()) == value.get<double>()) {
            return static_cast<long>(value.get<double>());
        }
        throw bad();
    }
    if (d.is_number()) {
        if (!value.is_number()) {
            throw bad();
        }
        return value.get<double>();
    }
    if (d.is_string()) {
        if (!value.is_string()) {
            throw bad();
        }
        return value;
    }
    if (d.is_array()) {
        json out = json::array();
        if (value.is_number()) {
            out.push_back(value.get<double>());
            return out;
        }
        if (!value.is_array()) {
            throw bad();
        }
        for (const auto& x : value) {
            if (!x.is_number()) {
                throw bad();
            }
            out.push_back(x.get<double>());
        }
        return out;
    }
    throw bad();
}

json parse_override(const ParamSpec& spec, const std::string& text)
{
    const json& d = spec.default_value;
    try {
        if (d.is_string()) {
            return text;
        }
        if (d.is_array() && !text.empty() && text.front() != '[') {
            json out = json::array();
            std::stringstream ss(text);
            std::string item;
            while (std::getline(ss, item, ',')) {
                out.push_back(io::parse_double(item));
            }
            return out;
        }
        return json::parse(text);
    } catch (const json::exception&) {
        throw UsageError("cannot parse value for " + spec.name + ": " + text);
    } catch (const std::invalid_argument&) {
        throw UsageError("cannot parse value for " + spec.name + ": " + text);
    }
}

} // namespace

const std::vector<ExperimentInfo>& registry()
{
    static const std::vector<ExperimentInfo> infos = [] {
        std::vector<ExperimentInfo> v;
        for (const auto& e : entries()) {
            v.push_back(e.info);
        }
        return v;
    }();
    return infos;
}

const ExperimentInfo& find(const std::string& key)
{
    for (const auto& info : registry()) {
        if (info.id == key || info.name == key) {
            return info;
        }
    }
    std::string msg = "unknown experiment '" + key + "'; available:";
    for (const auto& info : registry()) {
        msg += "\n  " + info.id + "  " + info.name;
    }
    throw UsageError(msg);
}

json list_json()
{
    json out = json::array();
    for (const auto& info : registry()) {
        json params = json::object();
        for (const auto& p : info.params) {
            params[p.name] = p.default_value;
        }
        out.push_back({{"id", info.id},
                       {"name", info.name},
                       {"description", info.description},
                       {"anchor", info.anchor},
                       {"params", params}});
    }
    return out;
}

json resolve_params(const ExperimentInfo& info, const json& params, const std::vector<std::string>& overrides)
{
    json out = json::object();
    for (const auto& p : info.params) {
        out[p.name] = p.default_value;
    }
    auto spec_of = [&](const std::string& name) -> const ParamSpec& {
        for (const auto& p : info.params) {
            if (p.name == name) {
                return p;
            }
        }
        std::string known;
        for (const auto& p : info.params) {
            known += " " + p.name;
        }
        throw UsageError("unknown parameter '" + name + "' for " + info.name + "; known:" + known);
    };
    if (!params.is_null()) {
        if (!params.is_object()) {
            throw UsageError("params must be a JSON object");
        }
        for (const auto& [k, v] : params.items()) {
            out[k] = coerce(spec_of(k), v);
        }
    }
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw UsageError("override must be key=value: " + o);
        }
        const std::string key = o.substr(0, eq);
        const auto& spec = spec_of(key);
        out[key] = coerce(spec, parse_override(spec, o.substr(eq + 1)));
    }
    if (out.at("seed").get<long>() < 0) {
        throw UsageError("seed must be non-negative");
    }
    return out;
}

bool Report::failed() const
{
    for (const auto& [k, v] : verdict.items()) {
        if (v == "fail") {
            return true;
        }
    }
    return false;
}

Report run(const ExperimentInfo& info, const json& resolved, const RunOptions& opts)
{
    Report report;
    report.experiment = info.name;
    report.resolved_params = resolved;
    report.seed = resolved.at("seed").get<std::uint64_t>();
    std::filesystem::create_directories(opts.out_dir);
    const auto start = std::chrono::steady_clock::now();
    Context ctx(resolved, opts, report);
    try {
        entry(info).run(ctx);
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception& e) {
        report.metrics["failed"] = 1;
        report.verdict["completed"] = "fail";
        std::ofstream(ctx.artifact("error.txt")) << e.what() << '\n';
    }
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    io::write_json(opts.out_dir / "results.json", to_json(report));
    return report;
}

json to_json(const Report& r)
{
    return {{"experiment", r.experiment},
            {"resolved_params", r.resolved_params},
            {"metrics", r.metrics},
            {"verdict", r.verdict},
            {"artifact_paths", r.artifact_paths},
            {"wall_time", r.wall_time},
            {"seed", r.seed}};
}

int exit_code(const Report& r) { return r.failed() ? 2 : 0; }

} // namespace nodelab::experiments
