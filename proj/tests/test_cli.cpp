#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ftqk/thermo.hpp"

#ifndef FTQK_CLI_PATH
#error "FTQK_CLI_PATH must point at the command-line binary"
#endif

namespace {

namespace fs = std::filesystem;

const fs::path kWorkDir = fs::temp_directory_path() / "ftqk_cli_test";

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd =
        std::string("\"") + FTQK_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

struct Workspace {
    Workspace() {
        fs::remove_all(kWorkDir);
        fs::create_directories(kWorkDir);
    }
    ~Workspace() { fs::remove_all(kWorkDir); }
};

const std::string kTinyMain =
    "method = ftqk\n"
    "[model]\nN = 6\n"
    "[sampling]\nR = 2\nD = 6\n"
    "[temperature]\nT_min = 0.1\nT_max = 10\npoints = 12\n";

const std::string kTinyExact =
    "method = ed\n"
    "[model]\nN = 6\n"
    "[temperature]\nT_min = 0.1\nT_max = 10\npoints = 12\n";

}  // namespace

TEST_CASE("preset listing and display") {
    Workspace ws;
    const fs::path log = kWorkDir / "log.txt";

    CHECK(run_cli("presets list", log) == 0);
    const std::string listing = slurp(log);
    for (const char* name : {"fig1_n14", "fig1_n14_ref", "fig1_n24", "fig1_n24_ref",
                             "fig2_noise_1e3", "fig2_noise_1e4"})
        CHECK(listing.find(name) != std::string::npos);

    CHECK(run_cli("presets show fig2_noise_1e3", log) == 0);
    const std::string shown = slurp(log);
    CHECK(shown.find("sigma = 0.001") != std::string::npos);
    CHECK(shown.find("N = 14") != std::string::npos);

    CHECK(run_cli("presets show no_such_preset", log) == 2);
}

TEST_CASE("bad invocations exit with the config-error code") {
    Workspace ws;
    const fs::path log = kWorkDir / "log.txt";

    CHECK(run_cli("", log) != 0);  // a subcommand is required
    CHECK(run_cli("run " + (kWorkDir / "missing.ini").string(), log) == 2);

    const fs::path bad = kWorkDir / "bad.ini";
    write_file(bad, "method = ftqk\n[model]\nN = 7\n");
    CHECK(run_cli("run " + bad.string(), log) == 2);
    CHECK(slurp(log).find("config error") != std::string::npos);

    write_file(bad, "method = ftqk\n[model]\nN = 6\nunknown_key = 3\n");
    CHECK(run_cli("run " + bad.string(), log) == 2);
}

TEST_CASE("a tiny run produces the advertised artifacts") {
    Workspace ws;
    const fs::path log = kWorkDir / "log.txt";
    const fs::path cfg = kWorkDir / "tiny.ini";
    const fs::path out = kWorkDir / "out";
    write_file(cfg, kTinyMain);

    CHECK(run_cli("run " + cfg.string() + " --output-dir " + out.string(), log) == 0);
    CHECK(fs::exists(out / "curve.csv"));
    CHECK(fs::exists(out / "samples.jsonl"));
    CHECK(fs::exists(out / "diagnostics.json"));
    CHECK(slurp(log).find("wrote") != std::string::npos);

    const ftqk::ThermoCurve curve = ftqk::read_curve_csv((out / "curve.csv").string());
    CHECK(curve.temperature.size() == 12);
    CHECK(curve.provenance == "ftqk");

    // a second run with more workers reproduces the curve file byte for byte
    const fs::path out2 = kWorkDir / "out2";
    CHECK(run_cli("run " + cfg.string() + " --workers 3 --output-dir " + out2.string(),
                  log) == 0);
    CHECK(slurp(out / "curve.csv") == slurp(out2 / "curve.csv"));

    // cached overlaps appear only on request
    CHECK_FALSE(fs::exists(out / "overlaps.csv"));
    const fs::path out3 = kWorkDir / "out3";
    CHECK(run_cli("run " + cfg.string() + " --cache-overlaps --output-dir " + out3.string(),
                  log) == 0);
    CHECK(fs::exists(out3 / "overlaps.csv"));
}

TEST_CASE("curve comparison against the exact reference") {
    Workspace ws;
    const fs::path log = kWorkDir / "log.txt";
    const fs::path main_cfg = kWorkDir / "main.ini";
    const fs::path exact_cfg = kWorkDir / "exact.ini";
    write_file(main_cfg, kTinyMain);
    write_file(exact_cfg, kTinyExact);

    const fs::path main_out = kWorkDir / "main_out";
    const fs::path exact_out = kWorkDir / "exact_out";
    REQUIRE(run_cli("run " + main_cfg.string() + " --output-dir " + main_out.string(), log) ==
            0);
    REQUIRE(run_cli("run " + exact_cfg.string() + " --output-dir " + exact_out.string(),
                    log) == 0);

    CHECK(run_cli("compare " + (main_out / "curve.csv").string() + " " +
                      (exact_out / "curve.csv").string(),
                  log) == 0);
    const std::string table = slurp(log);
    CHECK(table.find("ftqk") != std::string::npos);
    CHECK(table.find("ed") != std::string::npos);
    CHECK(table.find("chi") != std::string::npos);

    // grid mismatch is a usage error, not a crash
    const fs::path short_cfg = kWorkDir / "short.ini";
    write_file(short_cfg,
               "method = ed\n[model]\nN = 6\n"
               "[temperature]\nT_min = 0.1\nT_max = 10\npoints = 11\n");
    const fs::path short_out = kWorkDir / "short_out";
    REQUIRE(run_cli("run " + short_cfg.string() + " --output-dir " + short_out.string(),
                    log) == 0);
    CHECK(run_cli("compare " + (main_out / "curve.csv").string() + " " +
                      (short_out / "curve.csv").string(),
                  log) == 2);

    CHECK(run_cli("compare " + (main_out / "curve.csv").string() + " " +
                      (kWorkDir / "nope.csv").string(),
                  log) == 2);
}
