#pragma once

#include <map>
#include <string>
#include <vector>

#include "ftqk/config.hpp"
#include "ftqk/krylov.hpp"
#include "ftqk/propagator.hpp"
#include "ftqk/thermo.hpp"

namespace ftqk {

// run-level accounting emitted as a JSON report next to the curve
struct RunDiagnostics {
    std::string method;
    int n_sites = 0;
    int workers = 1;
    double wall_seconds = 0.0;
    int samples_total = 0;
    int samples_accepted = 0;
    int samples_rejected = 0;
    int samples_degraded = 0;
    std::map<double, int> eps_histogram;              // eps_used -> count
    std::map<int, int> d_eff_histogram;               // D_eff -> count
    std::vector<std::string> rejections;              // "(q=..., r=...): reason"

    std::string to_json() const;
};

struct RunResult {
    ThermoCurve curve;
    std::vector<KrylovSample> samples;      // empty for the exact reference
    std::vector<OverlapSequence> overlaps;  // populated when keep_overlaps is set
    RunDiagnostics diagnostics;
};

// numerical failure carrying the (q, r) coordinates it surfaced at;
// maps to CLI exit code 3
struct PipelineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// resolves the per-sample regularization from config values and the sector map
RegularizationParams regularization_from_config(const RunConfig& config, const AffineMap& map);

// executes the configured method end to end; parallelism only affects wall
// time, never results (work items are keyed, reduction order is fixed)
RunResult run_experiment(const RunConfig& config, int workers = 1, bool keep_overlaps = false);

// writes curve CSV, samples JSONL, diagnostics JSON (and overlaps CSV when
// cached) under the effective output directory; returns the paths written
std::vector<std::string> write_artifacts(const RunConfig& config, const RunResult& result,
                                         const std::string& out_dir_override = "",
                                         bool cache_overlaps = false);

struct ObservableDeviation {
    std::string name;
    double max_abs = 0.0;
    double t_at_max = 0.0;
    double rms = 0.0;
};

// grids must agree exactly; throws ConfigError on mismatch
std::vector<ObservableDeviation> compare_curves(const ThermoCurve& a, const ThermoCurve& b);

std::string format_comparison(const std::vector<ObservableDeviation>& rows);

// verbosity from the FTQK_LOG environment variable: unset/0 = silent,
// 1/info = progress lines, 2/debug = per-sample detail (stderr only)
int log_level();
void log_line(int level, const std::string& message);

}  // namespace ftqk
