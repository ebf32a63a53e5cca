#include "nodelab/experiments.hpp"

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>
#include <optional>

namespace ex = nodelab::experiments;

namespace {

constexpr int usage_exit = 3;

void print_list(bool as_json)
{
    if (as_json) {
        std::cout << ex::list_json().dump(2) << '\n';
        return;
    }
    for (const auto& info : ex::registry()) {
        std::cout << std::left << std::setw(4) << info.id << std::setw(28) << info.name << info.description << '\n';
    }
}

void print_report(const ex::Report& r, const std::filesystem::path& out)
{
    std::cout << r.experiment << "  (" << std::fixed << std::setprecision(2) << r.wall_time << " s, seed " << r.seed << ")\n";
    std::cout.unsetf(std::ios::floatfield);
    std::cout << std::setprecision(6);
    for (const auto& [k, v] : r.metrics.items()) {
        std::cout << "  " << std::left << std::setw(32) << k << v.dump() << '\n';
    }
    for (const auto& [k, v] : r.verdict.items()) {
        std::cout << "  [" << v.get<std::string>() << "] " << k << '\n';
    }
    std::cout << "  results: " << (out / "results.json").string() << '\n';
}

int run_command(std::optional<std::string> name, const std::optional<std::string>& config,
                const std::vector<std::string>& sets, std::optional<std::string> out, std::optional<long> seed, int jobs)
{
    ex::json params;
    if (config) {
        const auto cfg = nodelab::io::read_json(*config);
        if (!cfg.is_object()) {
            throw ex::UsageError("config must be a JSON object");
        }
        if (!name && cfg.contains("experiment")) {
            name = cfg["experiment"].get<std::string>();
        }
        if (cfg.contains("params")) {
            params = cfg["params"];
        }
        if (!out && cfg.contains("out_dir")) {
            out = cfg["out_dir"].get<std::string>();
        }
        if (cfg.contains("seed")) {
            if (params.is_null()) {
                params = ex::json::object();
            }
            params["seed"] = cfg["seed"];
        }
    }
    if (!name) {
        throw ex::UsageError("no experiment given");
    }
    const auto& info = ex::find(*name);
    auto overrides = sets;
    if (seed) {
        overrides.push_back("seed=" + std::to_string(*seed));
    }
    const auto resolved = ex::resolve_params(info, params, overrides);
    ex::RunOptions opts;
    opts.out_dir = out.value_or("lab-out/" + info.name);
    opts.jobs = jobs;
    const auto report = ex::run(info, resolved, opts);
    print_report(report, opts.out_dir);
    return ex::exit_code(report);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Nodal-structure experiments"};
    app.require_subcommand(1);

    auto* list = app.add_subcommand("list", "List experiments");
    bool as_json = false;
    list->add_flag("--json", as_json, "Machine-readable listing");

    auto* run = app.add_subcommand("run", "Run one experiment");
    std::string name;
    std::string config;
    std::vector<std::string> sets;
    std::string out;
    long seed = 0;
    int jobs = 1;
    run->add_option("experiment", name, "Experiment id or name (E1..E8)");
    run->add_option("--config", config, "JSON file {experiment, params, out_dir, seed}")->check(CLI::ExistingFile);
    run->add_option("--set", sets, "Parameter override key=value (repeatable)")->take_all();
    run->add_option("--out", out, "Output directory (default lab-out/<name>)");
    run->add_option("--seed", seed, "Seed override")->check(CLI::NonNegativeNumber);
    run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : usage_exit;
    }

    try {
        if (list->parsed()) {
            print_list(as_json);
            return 0;
        }
        auto opt = [&](const char* flag, const std::string& v) -> std::optional<std::string> {
            return run->count(flag) ? std::optional<std::string>(v) : std::nullopt;
        };
        return run_command(opt("experiment", name), opt("--config", config), sets, opt("--out", out),
                           run->count("--seed") ? std::optional<long>(seed) : std::nullopt, jobs);
    } catch (const ex::UsageError& e) {
        std::cerr << "lab: " << e.what() << '\n';
        return usage_exit;
    } catch (const nodelab::io::json::exception& e) {
        std::cerr << "lab: bad config: " << e.what() << '\n';
        return usage_exit;
    }
}
