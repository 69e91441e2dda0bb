#include "ftqk/config.hpp"

#include <algorithm>
#include <cctype>
#include <climits>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace ftqk {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double parse_double(const std::string& where, const std::string& value) {
    char* end = nullptr;
    const double x = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
        throw ConfigError(where + ": not a number: '" + value + "'");
    return x;
}

int parse_int(const std::string& where, const std::string& value) {
    char* end = nullptr;
    const long long x = std::strtoll(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
        throw ConfigError(where + ": not an integer: '" + value + "'");
    if (x < INT_MIN || x > INT_MAX) throw ConfigError(where + ": out of range: '" + value + "'");
    return static_cast<int>(x);
}

std::uint64_t parse_u64(const std::string& where, const std::string& value) {
    if (!value.empty() && value[0] == '-')
        throw ConfigError(where + ": must be non-negative: '" + value + "'");
    char* end = nullptr;
    const unsigned long long x = std::strtoull(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
        throw ConfigError(where + ": not an integer: '" + value + "'");
    return static_cast<std::uint64_t>(x);
}

bool parse_bool(const std::string& where, const std::string& value) {
    if (value == "true" || value == "on" || value == "1") return true;
    if (value == "false" || value == "off" || value == "0") return false;
    throw ConfigError(where + ": expected true/false: '" + value + "'");
}

std::string format_double(double x) {
    char buf[40];
    if (x == std::floor(x) && std::abs(x) < 1e15) {
        std::snprintf(buf, sizeof buf, "%.0f", x);
        return buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", x);
    // shortest representation that round-trips keeps the files readable
    for (int prec = 1; prec < 17; ++prec) {
        char probe[40];
        std::snprintf(probe, sizeof probe, "%.*g", prec, x);
        if (std::strtod(probe, nullptr) == x) return probe;
    }
    return buf;
}

}  // namespace

void validate_config(const RunConfig& config) {
    if (config.method != "ftqk" && config.method != "ed" && config.method != "ftlm")
        throw ConfigError("method: expected ftqk, ed or ftlm, got '" + config.method + "'");
    try {
        validate_chain(config.chain);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    if (config.r_samples < 1) throw ConfigError("sampling.R: must be >= 1");
    if (config.krylov_dim < 0 || config.krylov_dim > 500)
        throw ConfigError("sampling.D: must be in 1..500 or 'full'");
    if (config.lanczos_steps < 1 || config.lanczos_steps > 200)
        throw ConfigError("sampling.M: must be in 1..200");
    if (!(config.noise_sigma >= 0.0)) throw ConfigError("noise.sigma: must be >= 0");
    for (double eps : config.eps_grid) {
        if (!(eps > 0.0) || !(eps < 1.0))
            throw ConfigError("regularization.eps_grid: entries must lie in (0, 1)");
    }
    if (!(config.lambda_clamp_tol > 0.0) || !(config.lambda_clamp_tol <= 0.1))
        throw ConfigError("regularization.lambda_clamp_tol: must lie in (0, 0.1]");
    if (config.weight_cap_tol && !(*config.weight_cap_tol > 0.0))
        throw ConfigError("regularization.weight_cap_tol: must be positive or 'auto'");
    if (config.bound_slack && !(*config.bound_slack >= 0.0))
        throw ConfigError("regularization.bound_slack: must be >= 0 or 'auto'");
    if (!(config.t_min > 0.0) || !(config.t_max > config.t_min))
        throw ConfigError("temperature: need 0 < T_min < T_max");
    if (config.t_points < 2) throw ConfigError("temperature.points: must be >= 2");
    if (config.out_dir.empty()) throw ConfigError("output.directory: must be non-empty");
    if (config.curve_file.empty()) throw ConfigError("output.curve_file: must be non-empty");
    if (!config.overlaps_file.empty() && config.method != "ftqk")
        throw ConfigError("sampling.overlaps_file: only meaningful for method = ftqk");
}

RunConfig parse_config(const std::string& text) {
    RunConfig config;

    // handlers keyed by "section.key"; empty section = top level
    using Handler = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, Handler> handlers = {
        {".method", [&](const std::string&, const std::string& v) { config.method = v; }},
        {"model.N",
         [&](const std::string& w, const std::string& v) { config.chain.n_sites = parse_int(w, v); }},
        {"model.J",
         [&](const std::string& w, const std::string& v) { config.chain.coupling = parse_double(w, v); }},
        {"sampling.R",
         [&](const std::string& w, const std::string& v) { config.r_samples = parse_int(w, v); }},
        {"sampling.D",
         [&](const std::string& w, const std::string& v) {
             if (v == "full") {
                 config.krylov_dim = 0;
             } else {
                 config.krylov_dim = parse_int(w, v);
                 if (config.krylov_dim < 1) throw ConfigError(w + ": must be >= 1 or 'full'");
             }
         }},
        {"sampling.seed",
         [&](const std::string& w, const std::string& v) { config.seed = parse_u64(w, v); }},
        {"sampling.M",
         [&](const std::string& w, const std::string& v) { config.lanczos_steps = parse_int(w, v); }},
        {"sampling.overlaps_file",
         [&](const std::string&, const std::string& v) { config.overlaps_file = v; }},
        {"noise.sigma",
         [&](const std::string& w, const std::string& v) { config.noise_sigma = parse_double(w, v); }},
        {"noise.noise_seed",
         [&](const std::string& w, const std::string& v) { config.noise_seed = parse_u64(w, v); }},
        {"regularization.eps_grid",
         [&](const std::string& w, const std::string& v) {
             config.eps_grid.clear();
             std::istringstream ss(v);
             std::string item;
             while (std::getline(ss, item, ',')) {
                 item = trim(item);
                 if (!item.empty()) config.eps_grid.push_back(parse_double(w, item));
             }
             if (config.eps_grid.empty()) throw ConfigError(w + ": empty list");
             std::sort(config.eps_grid.rbegin(), config.eps_grid.rend());
             config.eps_grid.erase(
                 std::unique(config.eps_grid.begin(), config.eps_grid.end()),
                 config.eps_grid.end());
         }},
        {"regularization.lambda_clamp_tol",
         [&](const std::string& w, const std::string& v) {
             config.lambda_clamp_tol = parse_double(w, v);
         }},
        {"regularization.weight_cap_tol",
         [&](const std::string& w, const std::string& v) {
             if (v == "auto")
                 config.weight_cap_tol.reset();
             else
                 config.weight_cap_tol = parse_double(w, v);
         }},
        {"regularization.bound_slack",
         [&](const std::string& w, const std::string& v) {
             if (v == "auto")
                 config.bound_slack.reset();
             else
                 config.bound_slack = parse_double(w, v);
         }},
        {"regularization.stabilization",
         [&](const std::string& w, const std::string& v) {
             config.stabilization = parse_bool(w, v);
         }},
        {"temperature.T_min",
         [&](const std::string& w, const std::string& v) { config.t_min = parse_double(w, v); }},
        {"temperature.T_max",
         [&](const std::string& w, const std::string& v) { config.t_max = parse_double(w, v); }},
        {"temperature.points",
         [&](const std::string& w, const std::string& v) { config.t_points = parse_int(w, v); }},
        {"output.directory",
         [&](const std::string&, const std::string& v) { config.out_dir = v; }},
        {"output.curve_file",
         [&](const std::string&, const std::string& v) { config.curve_file = v; }},
        {"output.samples_file",
         [&](const std::string&, const std::string& v) { config.samples_file = v; }},
        {"output.diagnostics_file",
         [&](const std::string&, const std::string& v) { config.diagnostics_file = v; }},
    };
    const std::vector<std::string> known_sections = {"model",         "sampling", "noise",
                                                     "regularization", "temperature", "output"};

    std::istringstream in(text);
    std::string line, section;
    std::vector<std::string> seen;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            section = trim(s.substr(1, s.size() - 2));
            if (std::find(known_sections.begin(), known_sections.end(), section) ==
                known_sections.end())
                throw ConfigError("line " + std::to_string(lineno) + ": unknown section [" +
                                  section + "]");
            continue;
        }
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        const std::string where = section.empty() ? key : section + "." + key;
        const auto it = handlers.find(section + "." + key);
        if (it == handlers.end())
            throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + where + "'");
        if (std::find(seen.begin(), seen.end(), it->first) != seen.end())
            throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + where + "'");
        seen.push_back(it->first);
        it->second(where, value);
    }
    validate_config(config);
    return config;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& config) {
    std::ostringstream out;
    out << "method = " << config.method << "\n\n";
    out << "[model]\n";
    out << "N = " << config.chain.n_sites << "\n";
    out << "J = " << format_double(config.chain.coupling) << "\n\n";
    out << "[sampling]\n";
    out << "R = " << config.r_samples << "\n";
    if (config.full_depth())
        out << "D = full\n";
    else
        out << "D = " << config.krylov_dim << "\n";
    out << "seed = " << config.seed << "\n";
    out << "M = " << config.lanczos_steps << "\n";
    if (!config.overlaps_file.empty()) out << "overlaps_file = " << config.overlaps_file << "\n";
    out << "\n[noise]\n";
    out << "sigma = " << format_double(config.noise_sigma) << "\n";
    out << "noise_seed = " << config.noise_seed << "\n";
    out << "\n[regularization]\n";
    if (!config.eps_grid.empty()) {
        out << "eps_grid = ";
        for (std::size_t i = 0; i < config.eps_grid.size(); ++i) {
            if (i) out << ", ";
            out << format_double(config.eps_grid[i]);
        }
        out << "\n";
    }
    out << "lambda_clamp_tol = " << format_double(config.lambda_clamp_tol) << "\n";
    out << "weight_cap_tol = "
        << (config.weight_cap_tol ? format_double(*config.weight_cap_tol) : "auto") << "\n";
    out << "bound_slack = " << (config.bound_slack ? format_double(*config.bound_slack) : "auto")
        << "\n";
    out << "stabilization = " << (config.stabilization ? "true" : "false") << "\n";
    out << "\n[temperature]\n";
    out << "T_min = " << format_double(config.t_min) << "\n";
    out << "T_max = " << format_double(config.t_max) << "\n";
    out << "points = " << config.t_points << "\n";
    out << "\n[output]\n";
    out << "directory = " << config.out_dir << "\n";
    out << "curve_file = " << config.curve_file << "\n";
    out << "samples_file = " << config.samples_file << "\n";
    out << "diagnostics_file = " << config.diagnostics_file << "\n";
    return out.str();
}

std::vector<std::string> preset_names() {
    return {"fig1_n14", "fig1_n14_ref", "fig1_n24", "fig1_n24_ref",
            "fig2_noise_1e3", "fig2_noise_1e4"};
}

RunConfig preset_config(const std::string& name) {
    RunConfig c;
    c.out_dir = name;
    if (name == "fig1_n14") {
        c.method = "ftqk";
        c.chain.n_sites = 14;
        c.r_samples = 100;
        c.krylov_dim = 20;
        c.noise_sigma = 0.0;
    } else if (name == "fig1_n14_ref") {
        c.method = "ed";
        c.chain.n_sites = 14;
    } else if (name == "fig1_n24") {
        c.method = "ftqk";
        c.chain.n_sites = 24;
        c.r_samples = 100;
        c.krylov_dim = 60;
        c.noise_sigma = 0.0;
    } else if (name == "fig1_n24_ref") {
        c.method = "ftlm";
        c.chain.n_sites = 24;
        c.r_samples = 400;
        c.lanczos_steps = 100;
    } else if (name == "fig2_noise_1e3") {
        c.method = "ftqk";
        c.chain.n_sites = 14;
        c.r_samples = 200;
        c.krylov_dim = 50;
        c.noise_sigma = 1e-3;
        c.noise_seed = 1;
    } else if (name == "fig2_noise_1e4") {
        c.method = "ftqk";
        c.chain.n_sites = 14;
        c.r_samples = 200;
        c.krylov_dim = 50;
        c.noise_sigma = 1e-4;
        c.noise_seed = 1;
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    validate_config(c);
    return c;
}

}  // namespace ftqk
