#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "ftqk/config.hpp"
#include "ftqk/pipeline.hpp"
#include "ftqk/thermo.hpp"

namespace {

int cmd_run(const std::string& config_path, int workers, const std::string& out_dir,
            bool cache_overlaps) {
    const ftqk::RunConfig config = ftqk::load_config(config_path);
    const ftqk::RunResult result = ftqk::run_experiment(config, workers, cache_overlaps);
    const auto written = ftqk::write_artifacts(config, result, out_dir, cache_overlaps);
    for (const auto& path : written) std::cout << "wrote " << path << "\n";
    if (result.diagnostics.samples_rejected > 0)
        std::cout << "note: " << result.diagnostics.samples_rejected << " of "
                  << result.diagnostics.samples_total << " samples rejected (see diagnostics)\n";
    return 0;
}

int cmd_compare(const std::string& path_a, const std::string& path_b) {
    ftqk::ThermoCurve a, b;
    try {
        a = ftqk::read_curve_csv(path_a);
        b = ftqk::read_curve_csv(path_b);
    } catch (const std::runtime_error& e) {
        throw ftqk::ConfigError(e.what());
    }
    std::cout << "A: " << path_a << " (" << a.provenance << ")\n";
    std::cout << "B: " << path_b << " (" << b.provenance << ")\n";
    std::cout << ftqk::format_comparison(ftqk::compare_curves(a, b));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"thermodynamics of the spin-1/2 Heisenberg ring from real-time overlaps"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "execute one experiment from a config file");
    std::string config_path;
    run->add_option("config", config_path, "config file path")->required();
    int workers = 1;
    run->add_option("--workers", workers, "worker threads (results are independent of this)")
        ->check(CLI::Range(1, 256));
    std::string out_dir;
    run->add_option("--output-dir", out_dir, "override the configured output directory");
    bool cache_overlaps = false;
    run->add_flag("--cache-overlaps", cache_overlaps,
                  "persist measured overlap sequences for later re-processing");

    auto* compare = app.add_subcommand("compare", "report deviations between two curve CSVs");
    std::string path_a, path_b;
    compare->add_option("a", path_a, "first curve CSV")->required();
    compare->add_option("b", path_b, "second curve CSV")->required();

    auto* presets = app.add_subcommand("presets", "shipped benchmark parameter sets");
    presets->require_subcommand(1);
    presets->add_subcommand("list", "list preset names");
    auto* show = presets->add_subcommand("show", "print one preset as a config file");
    std::string preset_name;
    show->add_option("name", preset_name, "preset name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (run->parsed()) return cmd_run(config_path, workers, out_dir, cache_overlaps);
        if (compare->parsed()) return cmd_compare(path_a, path_b);
        if (presets->parsed()) {
            if (presets->get_subcommands().front()->get_name() == "list") {
                for (const auto& name : ftqk::preset_names()) std::cout << name << "\n";
            } else {
                std::cout << ftqk::serialize_config(ftqk::preset_config(preset_name));
            }
            return 0;
        }
    } catch (const ftqk::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ftqk::PipelineError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const ftqk::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
