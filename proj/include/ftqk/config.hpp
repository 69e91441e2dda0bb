#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ftqk/chain.hpp"

namespace ftqk {

// invalid or unknown configuration input; maps to CLI exit code 2
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// one experiment = one config file; sectioned key-value text format.
// Keys outside the schema are rejected so typos cannot silently change runs.
struct RunConfig {
    std::string method = "ftqk";  // ftqk | ed | ftlm

    ChainSpec chain;  // [model] N, J

    // [sampling]
    int r_samples = 100;        // R: random vectors per sector
    int krylov_dim = 20;        // D; 0 encodes "full" = per-sector dimension
    std::uint64_t seed = 1;
    int lanczos_steps = 100;    // M: reference-method Lanczos depth
    std::string overlaps_file;  // import pre-measured sequences when non-empty

    // [noise]
    double noise_sigma = 0.0;
    std::uint64_t noise_seed = 1;

    // [regularization]
    std::vector<double> eps_grid;          // empty = default decade grid
    double lambda_clamp_tol = 1e-6;
    std::optional<double> weight_cap_tol;  // absent = auto: max(1e-6, 10 sigma)
    std::optional<double> bound_slack;     // absent = auto: 0.5 J
    bool stabilization = true;

    // [temperature]
    double t_min = 0.02;
    double t_max = 100.0;
    int t_points = 200;

    // [output]
    std::string out_dir = ".";
    std::string curve_file = "curve.csv";
    std::string samples_file = "samples.jsonl";
    std::string diagnostics_file = "diagnostics.json";

    bool full_depth() const { return krylov_dim == 0; }
};

// throws ConfigError with a field-level message on any violation
void validate_config(const RunConfig& config);

// parse the text of a config file; validates before returning
RunConfig parse_config(const std::string& text);

RunConfig load_config(const std::string& path);

// canonical text form; parse(serialize(c)) == c
std::string serialize_config(const RunConfig& config);

// shipped parameter sets reproducing the benchmark figures
std::vector<std::string> preset_names();
RunConfig preset_config(const std::string& name);

}  // namespace ftqk
