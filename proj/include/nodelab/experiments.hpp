#pragma once

#include "nodelab/io.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace nodelab::experiments {

using json = io::json;

/// Bad experiment name, parameter name or value. Maps to exit code 3.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter's type is that of its default: integer, number, boolean,
/// string or array of numbers.
struct ParamSpec {
    std::string name;
    json default_value;
    std::string help;
};

struct ExperimentInfo {
    std::string id;
    std::string name;
    std::string description;
    std::string anchor;
    std::vector<ParamSpec> params;
};

/// E1..E8 in fixed order.
const std::vector<ExperimentInfo>& registry();

/// Lookup by id ("E2") or name ("winding-stability"); throws UsageError
/// listing the registry otherwise.
const ExperimentInfo& find(const std::string& key);

/// [{id, name, description, anchor, params: {name: default}}...]
json list_json();

/// Defaults overlaid with `params` and then `overrides` ("key=value").
/// Unknown names or values of the wrong type throw UsageError.
json resolve_params(const ExperimentInfo& info, const json& params, const std::vector<std::string>& overrides = {});

struct RunOptions {
    std::filesystem::path out_dir = "lab-out";
    int jobs = 1;
};

struct Report {
    std::string experiment;
    json resolved_params = json::object();
    /// name -> number (null for non-finite values)
    json metrics = json::object();
    /// criterion -> "pass" | "fail" | "informational"
    json verdict = json::object();
    std::vector<std::string> artifact_paths;
    double wall_time = 0.0;
    std::uint64_t seed = 0;

    bool failed() const;
};

/// Runs the experiment with fully resolved parameters, writes its artifacts
/// and results.json into out_dir. Numerical failures inside a module give a
/// failing report with the message in error.txt.
Report run(const ExperimentInfo& info, const json& resolved, const RunOptions& opts);

/// Keys in fixed order: experiment, resolved_params, metrics, verdict,
/// artifact_paths, wall_time, seed.
json to_json(const Report& r);

/// 0 when every verdict is pass or informational, 2 otherwise.
int exit_code(const Report& r);

} // namespace nodelab::experiments
