#include "ftqk/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <thread>

#include "ftqk/oracles.hpp"

namespace ftqk {

int log_level() {
    static const int level = [] {
        const char* env = std::getenv("FTQK_LOG");
        if (env == nullptr || *env == '\0') return 0;
        const std::string v(env);
        if (v == "0" || v == "off" || v == "quiet") return 0;
        if (v == "2" || v == "debug") return 2;
        return 1;  // any other value = info
    }();
    return level;
}

void log_line(int level, const std::string& message) {
    if (log_level() >= level) std::cerr << "[ftqk] " << message << "\n";
}

RegularizationParams regularization_from_config(const RunConfig& config, const AffineMap& map) {
    RegularizationParams params =
        make_regularization(config.noise_sigma, config.chain.coupling, map);
    if (!config.eps_grid.empty()) params.eps_grid = config.eps_grid;
    params.lambda_clamp_tol = config.lambda_clamp_tol;
    params.gap_merge_tol = 10.0 * std::sqrt(config.lambda_clamp_tol) / map.tau;
    if (config.weight_cap_tol) params.weight_cap_tol = *config.weight_cap_tol;
    if (config.bound_slack) params.bound_slack = *config.bound_slack;
    params.stabilization = config.stabilization;
    return params;
}

namespace {

struct SectorContext {
    SectorBasis basis;
    SectorHamiltonian hamiltonian;
    SpectralBounds bounds;
    AffineMap map;
    RegularizationParams params;
    int krylov_dim = 0;
};

struct ItemOutcome {
    std::optional<KrylovSample> sample;
    std::optional<OverlapSequence> clean;  // kept only when caching is requested
    std::string rejection;                 // non-empty when the sample was dropped
};

std::string item_coords(int q, int r) {
    return "(q=" + std::to_string(q) + ", r=" + std::to_string(r) + ")";
}

// imported sequences keyed by (q, r); value index into the loaded vector
std::map<std::pair<int, int>, std::size_t> index_imported(
    const std::vector<OverlapSequence>& seqs) {
    std::map<std::pair<int, int>, std::size_t> index;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        const auto key = std::make_pair(seqs[i].q, seqs[i].r_index);
        if (!index.emplace(key, i).second)
            throw ConfigError("overlaps file repeats sample " +
                              item_coords(seqs[i].q, seqs[i].r_index));
    }
    return index;
}

RunResult run_ftqk(const RunConfig& config, int workers, bool keep_overlaps) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();

    const TemperatureGrid grid =
        TemperatureGrid::log_spaced(config.t_min, config.t_max, config.t_points);
    const std::map<int, std::uint64_t> dims = sector_dimensions(config.chain);

    // imported sequences replace propagation entirely
    std::vector<OverlapSequence> imported;
    std::map<std::pair<int, int>, std::size_t> import_index;
    double imported_sigma = 0.0;
    if (!config.overlaps_file.empty()) {
        imported = read_overlaps_csv(config.overlaps_file);
        import_index = index_imported(imported);
        for (const auto& seq : imported) {
            if (seq.noise_sigma != imported[0].noise_sigma)
                throw ConfigError("overlaps file mixes noise levels");
        }
        imported_sigma = imported.empty() ? 0.0 : imported[0].noise_sigma;
        if (imported_sigma > 0.0 && imported_sigma != config.noise_sigma)
            throw ConfigError("overlaps file was recorded at sigma = " +
                              std::to_string(imported_sigma) +
                              "; config requests a different noise level");
        log_line(1, "imported " + std::to_string(imported.size()) + " overlap sequences from " +
                        config.overlaps_file);
    }

    // per-sector preparation: basis, sparse operator, certified bounds, map
    std::vector<SectorContext> sectors;
    for (const auto& [q, dim] : dims) {
        SectorContext ctx;
        ctx.basis = enumerate_sector(config.chain, q);
        ctx.hamiltonian = build_sector_hamiltonian(config.chain, q);
        try {
            ctx.bounds = estimate_bounds(ctx.hamiltonian);
        } catch (const ConvergenceError& e) {
            throw PipelineError("bounds estimation failed in sector q = " + std::to_string(q) +
                                ": " + e.what());
        }
        ctx.map = affine_map(ctx.bounds);
        ctx.params = regularization_from_config(config, ctx.map);
        ctx.krylov_dim = config.full_depth() ? static_cast<int>(dim) : config.krylov_dim;
        log_line(2, "sector q = " + std::to_string(q) + ": dim " + std::to_string(dim) +
                        ", bounds [" + std::to_string(ctx.bounds.lo) + ", " +
                        std::to_string(ctx.bounds.hi) + "], D = " +
                        std::to_string(ctx.krylov_dim));
        sectors.push_back(std::move(ctx));
    }

    struct Item {
        int sector_idx;
        int r;
    };
    std::vector<Item> items;
    for (std::size_t k = 0; k < sectors.size(); ++k) {
        for (int r = 1; r <= config.r_samples; ++r) {
            items.push_back({static_cast<int>(k), r});
        }
    }

    // when importing, every (q, r) pair must be present and deep enough
    if (!imported.empty()) {
        for (const Item& item : items) {
            const SectorContext& ctx = sectors[static_cast<std::size_t>(item.sector_idx)];
            const auto it = import_index.find(std::make_pair(ctx.basis.q, item.r));
            if (it == import_index.end())
                throw ConfigError("overlaps file lacks sample " +
                                  item_coords(ctx.basis.q, item.r));
            if (imported[it->second].max_index() < ctx.krylov_dim)
                throw ConfigError("overlaps file sample " + item_coords(ctx.basis.q, item.r) +
                                  " has max index " +
                                  std::to_string(imported[it->second].max_index()) +
                                  " < D = " + std::to_string(ctx.krylov_dim));
        }
    }

    std::vector<ItemOutcome> outcomes(items.size());
    std::vector<std::exception_ptr> failures(items.size());
    std::atomic<std::size_t> cursor{0};

    auto work = [&]() {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= items.size()) return;
            const Item item = items[i];
            const SectorContext& ctx = sectors[static_cast<std::size_t>(item.sector_idx)];
            const int q = ctx.basis.q;
            try {
                OverlapSequence seq;
                if (!imported.empty()) {
                    seq = imported[import_index.at(std::make_pair(q, item.r))];
                    if (imported_sigma == 0.0 && config.noise_sigma > 0.0)
                        seq = inject_noise(seq, config.noise_sigma, config.noise_seed);
                } else {
                    RandomVectorSpec spec;
                    spec.seed = config.seed;
                    spec.r_index = item.r;
                    spec.q = q;
                    const auto phi = random_sector_vector(ctx.basis, spec);
                    const OverlapSequence clean =
                        measure_overlaps(ctx.hamiltonian, ctx.map, phi, ctx.krylov_dim, spec);
                    if (keep_overlaps) outcomes[i].clean = clean;
                    seq = config.noise_sigma > 0.0
                              ? inject_noise(clean, config.noise_sigma, config.noise_seed)
                              : clean;
                }
                const ToeplitzPair pair = assemble_toeplitz(seq, ctx.krylov_dim);
                const ThresholdChoice choice =
                    select_threshold(pair, seq, ctx.params, ctx.bounds, ctx.map);
                outcomes[i].sample = recover_sample(choice, seq, ctx.params, ctx.bounds, ctx.map);
            } catch (const SampleRejectedError& e) {
                outcomes[i].rejection = e.what();
                log_line(2, "rejected " + item_coords(q, item.r) + ": " + e.what());
            } catch (...) {
                failures[i] = std::current_exception();
                return;
            }
        }
    };

    const int n_workers = std::max(1, workers);
    if (n_workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int t = 0; t < n_workers; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    for (std::size_t i = 0; i < items.size(); ++i) {
        if (!failures[i]) continue;
        const SectorContext& ctx = sectors[static_cast<std::size_t>(items[i].sector_idx)];
        try {
            std::rethrow_exception(failures[i]);
        } catch (const std::exception& e) {
            throw PipelineError("sample " + item_coords(ctx.basis.q, items[i].r) +
                                " failed: " + e.what());
        }
    }

    RunResult result;
    result.diagnostics.method = "ftqk";
    result.diagnostics.n_sites = config.chain.n_sites;
    result.diagnostics.workers = n_workers;
    result.diagnostics.samples_total = static_cast<int>(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        ItemOutcome& out = outcomes[i];
        if (out.sample) {
            ++result.diagnostics.samples_accepted;
            if (out.sample->degraded) ++result.diagnostics.samples_degraded;
            ++result.diagnostics.eps_histogram[out.sample->eps_used];
            ++result.diagnostics.d_eff_histogram[out.sample->d_eff];
            result.samples.push_back(std::move(*out.sample));
        } else {
            ++result.diagnostics.samples_rejected;
            const SectorContext& ctx = sectors[static_cast<std::size_t>(items[i].sector_idx)];
            result.diagnostics.rejections.push_back(item_coords(ctx.basis.q, items[i].r) + ": " +
                                                    out.rejection);
        }
        if (out.clean) result.overlaps.push_back(std::move(*out.clean));
    }

    try {
        result.curve = observables(result.samples, dims, config.chain.n_sites, grid, true);
    } catch (const std::exception& e) {
        throw PipelineError(std::string("aggregation failed: ") + e.what());
    }
    result.curve.provenance = "ftqk";

    result.diagnostics.wall_seconds =
        std::chrono::duration<double>(clock::now() - t0).count();
    log_line(1, "ftqk run finished: " + std::to_string(result.diagnostics.samples_accepted) +
                    "/" + std::to_string(result.diagnostics.samples_total) +
                    " samples accepted in " +
                    std::to_string(result.diagnostics.wall_seconds) + " s");
    return result;
}

}  // namespace

RunResult run_experiment(const RunConfig& config, int workers, bool keep_overlaps) {
    validate_config(config);
    if (config.method == "ftqk") return run_ftqk(config, workers, keep_overlaps);

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    const TemperatureGrid grid =
        TemperatureGrid::log_spaced(config.t_min, config.t_max, config.t_points);

    RunResult result;
    result.diagnostics.method = config.method;
    result.diagnostics.n_sites = config.chain.n_sites;
    result.diagnostics.workers = std::max(1, workers);
    try {
        if (config.method == "ed") {
            result.curve = ed_thermo(config.chain, grid);
        } else {
            FtlmParams params;
            params.r_samples = config.r_samples;
            params.lanczos_steps = config.lanczos_steps;
            params.seed = config.seed;
            result.samples = ftlm_samples(config.chain, params);
            result.curve = observables(result.samples, sector_dimensions(config.chain),
                                       config.chain.n_sites, grid, true);
            result.curve.provenance = "ftlm";
            result.diagnostics.samples_total = static_cast<int>(result.samples.size());
            result.diagnostics.samples_accepted = result.diagnostics.samples_total;
            for (const auto& s : result.samples) ++result.diagnostics.d_eff_histogram[s.d_eff];
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    } catch (const NumericalError& e) {
        throw PipelineError(e.what());
    }
    result.diagnostics.wall_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    return result;
}

std::string RunDiagnostics::to_json() const {
    nlohmann::json j;
    j["method"] = method;
    j["n_sites"] = n_sites;
    j["workers"] = workers;
    j["wall_seconds"] = wall_seconds;
    j["samples"] = {{"total", samples_total},
                    {"accepted", samples_accepted},
                    {"rejected", samples_rejected},
                    {"degraded", samples_degraded}};
    nlohmann::json eps = nlohmann::json::object();
    for (const auto& [value, count] : eps_histogram) {
        char key[32];
        std::snprintf(key, sizeof key, "%g", value);
        eps[key] = count;
    }
    j["eps_used_histogram"] = eps;
    nlohmann::json deff = nlohmann::json::object();
    for (const auto& [value, count] : d_eff_histogram) {
        deff[std::to_string(value)] = count;
    }
    j["d_eff_histogram"] = deff;
    j["rejections"] = rejections;
    return j.dump(2);
}

std::vector<std::string> write_artifacts(const RunConfig& config, const RunResult& result,
                                         const std::string& out_dir_override,
                                         bool cache_overlaps) {
    namespace fs = std::filesystem;
    const fs::path dir = out_dir_override.empty() ? config.out_dir : out_dir_override;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw PipelineError("cannot create output directory " + dir.string());

    std::vector<std::string> written;
    const fs::path curve_path = dir / config.curve_file;
    write_curve_csv(curve_path.string(), result.curve);
    written.push_back(curve_path.string());

    if (!result.samples.empty() && !config.samples_file.empty()) {
        const fs::path samples_path = dir / config.samples_file;
        write_samples_jsonl(samples_path.string(), result.samples);
        written.push_back(samples_path.string());
    }
    if (!config.diagnostics_file.empty()) {
        const fs::path diag_path = dir / config.diagnostics_file;
        std::ofstream out(diag_path);
        if (!out) throw PipelineError("cannot write " + diag_path.string());
        out << result.diagnostics.to_json() << "\n";
        written.push_back(diag_path.string());
    }
    if (cache_overlaps && !result.overlaps.empty()) {
        const fs::path overlaps_path = dir / "overlaps.csv";
        write_overlaps_csv(overlaps_path.string(), result.overlaps);
        written.push_back(overlaps_path.string());
    }
    return written;
}

std::vector<ObservableDeviation> compare_curves(const ThermoCurve& a, const ThermoCurve& b) {
    if (a.temperature != b.temperature)
        throw ConfigError("temperature grids differ; curves are not comparable");
    const std::size_t nt = a.temperature.size();
    if (nt == 0) throw ConfigError("empty curves");

    auto one = [&](const std::string& name, const std::vector<double>& xa,
                   const std::vector<double>& xb) {
        ObservableDeviation dev;
        dev.name = name;
        double ss = 0.0;
        for (std::size_t i = 0; i < nt; ++i) {
            const double d = std::abs(xa[i] - xb[i]);
            ss += d * d;
            if (d > dev.max_abs) {
                dev.max_abs = d;
                dev.t_at_max = a.temperature[i];
            }
        }
        dev.rms = std::sqrt(ss / static_cast<double>(nt));
        return dev;
    };
    return {one("U_per_site", a.u, b.u), one("C_per_site", a.c, b.c),
            one("chi_per_site", a.chi, b.chi), one("S_per_site", a.s, b.s)};
}

std::string format_comparison(const std::vector<ObservableDeviation>& rows) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-14s %14s %12s %14s\n", "observable", "max_abs_dev",
                  "T_at_max", "rms_dev");
    out << line;
    for (const auto& row : rows) {
        std::snprintf(line, sizeof line, "%-14s %14.6e %12.6g %14.6e\n", row.name.c_str(),
                      row.max_abs, row.t_at_max, row.rms);
        out << line;
    }
    return out.str();
}

}  // namespace ftqk
