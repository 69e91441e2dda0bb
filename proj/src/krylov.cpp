#include "ftqk/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>

namespace ftqk {

Eigen::MatrixXcd overlap_matrix(const OverlapSequence& seq, int m) {
    if (m < 1) throw std::invalid_argument("matrix order must be positive");
    if (seq.max_index() < m - 1)
        throw std::invalid_argument("sequence too short for order-" + std::to_string(m) +
                                    " overlap matrix");
    Eigen::MatrixXcd s(m, m);
    for (int i = 0; i < m; ++i) {
        s(i, i) = seq.g[0].real();
        for (int j = i + 1; j < m; ++j) {
            const cdouble v = seq.g[static_cast<std::size_t>(j - i)];
            s(i, j) = v;
            s(j, i) = std::conj(v);
        }
    }
    return s;
}

ToeplitzPair assemble_toeplitz(const OverlapSequence& seq, int krylov_dim) {
    const int d = krylov_dim;
    if (d < 1) throw std::invalid_argument("krylov_dim must be positive");
    if (seq.max_index() < d)
        throw std::invalid_argument("need overlaps up to index " + std::to_string(d) +
                                    ", sequence stops at " + std::to_string(seq.max_index()));

    ToeplitzPair pair;
    pair.s = overlap_matrix(seq, d);

    // band value of F at offset k = n' - n >= 0; g_{-1} = conj(g_1)
    auto f_band = [&seq](int k) -> cdouble {
        const cdouble above = seq.g[static_cast<std::size_t>(k + 1)];
        const cdouble below = k >= 1 ? seq.g[static_cast<std::size_t>(k - 1)]
                                     : std::conj(seq.g[1]);
        return 0.5 * (above + below);
    };
    pair.f.resize(d, d);
    for (int i = 0; i < d; ++i) {
        pair.f(i, i) = seq.g[1].real();
        for (int j = i + 1; j < d; ++j) {
            const cdouble v = f_band(j - i);
            pair.f(i, j) = v;
            pair.f(j, i) = std::conj(v);
        }
    }
    return pair;
}

std::vector<double> default_eps_grid() {
    std::vector<double> grid;
    for (int p = 1; p <= 12; ++p) grid.push_back(std::pow(10.0, -p));
    return grid;
}

RegularizationParams make_regularization(double sigma, double coupling, const AffineMap& map) {
    RegularizationParams params;
    params.eps_grid = default_eps_grid();
    params.lambda_clamp_tol = 1e-6;
    params.weight_cap_tol = std::max(1e-6, 10.0 * sigma);
    params.bound_slack = 0.5 * coupling;
    params.gap_merge_tol = 10.0 * std::sqrt(params.lambda_clamp_tol) / map.tau;
    return params;
}

namespace {

struct OverlapEig {
    Eigen::VectorXd lam;   // ascending
    Eigen::MatrixXcd vec;
};

GevpSolution solve_retained(const OverlapEig& se, const Eigen::MatrixXcd& f, double eps,
                            int keep) {
    const int d = static_cast<int>(se.lam.size());
    Eigen::MatrixXcd w(d, keep);
    for (int k = 0; k < keep; ++k) {
        const int src = d - keep + k;  // retained modes are the largest ones
        w.col(k) = se.vec.col(src) / std::sqrt(se.lam(src));
    }
    Eigen::MatrixXcd a = w.adjoint() * f * w;
    a = 0.5 * (a + a.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a);

    GevpSolution sol;
    sol.eps = eps;
    sol.d_eff = keep;
    sol.lambda = es.eigenvalues();
    sol.u = w * es.eigenvectors();
    return sol;
}

int count_retained(const OverlapEig& se, double eps) {
    const double lam_max = se.lam(se.lam.size() - 1);
    if (!(lam_max > 0)) return 0;
    int keep = 0;
    for (Eigen::Index k = 0; k < se.lam.size(); ++k) {
        if (se.lam(k) > eps * lam_max) ++keep;
    }
    return keep;
}

// energies (ascending) and weights of one solution, before stabilization;
// modes with |lambda| > 1 + clamp_tol are reported via n_discarded
struct RawLevels {
    std::vector<double> energies;
    std::vector<double> weights;
    int n_discarded = 0;
    double lambda_overshoot = 0.0;  // worst |lambda| - 1 among all modes
};

RawLevels raw_levels(const GevpSolution& sol, const OverlapSequence& seq, const AffineMap& map,
                     double clamp_tol) {
    const int d = static_cast<int>(sol.u.rows());
    Eigen::VectorXcd g(d);
    for (int n = 0; n < d; ++n) g(n) = seq.g[static_cast<std::size_t>(n)];

    RawLevels out;
    out.energies.reserve(static_cast<std::size_t>(sol.d_eff));
    out.weights.reserve(static_cast<std::size_t>(sol.d_eff));
    // descending lambda gives ascending energy through the arccos branch
    for (int j = sol.d_eff - 1; j >= 0; --j) {
        const double lam = sol.lambda(j);
        out.lambda_overshoot = std::max(out.lambda_overshoot, std::abs(lam) - 1.0);
        if (std::abs(lam) > 1.0 + clamp_tol) {
            ++out.n_discarded;
            continue;
        }
        const double clamped = std::clamp(lam, -1.0, 1.0);
        out.energies.push_back(recover_energy(clamped, map));
        const cdouble amp = sol.u.col(j).cwiseProduct(g).sum();  // sum_n u_nj g_n
        out.weights.push_back(std::norm(amp));
    }
    return out;
}

}  // namespace

GevpSolution solve_regularized(const ToeplitzPair& pair, double eps) {
    if (!(eps > 0) || eps >= 1)
        throw std::invalid_argument("eps must lie in (0, 1)");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(pair.s);
    OverlapEig se{es.eigenvalues(), es.eigenvectors()};
    const int keep = count_retained(se, eps);
    if (keep == 0)
        throw EmptySubspaceError("no overlap-matrix modes above eps = " + std::to_string(eps));
    return solve_retained(se, pair.f, eps, keep);
}

ThresholdChoice select_threshold(const ToeplitzPair& pair, const OverlapSequence& seq,
                                 const RegularizationParams& params, const SpectralBounds& bounds,
                                 const AffineMap& map) {
    if (params.eps_grid.empty()) throw std::invalid_argument("empty eps grid");
    for (std::size_t i = 1; i < params.eps_grid.size(); ++i) {
        if (!(params.eps_grid[i] < params.eps_grid[i - 1]))
            throw std::invalid_argument("eps grid must be strictly decreasing");
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(pair.s);
    OverlapEig se{es.eigenvalues(), es.eigenvectors()};

    auto is_valid = [&](const GevpSolution& sol) {
        const RawLevels lv = raw_levels(sol, seq, map, params.lambda_clamp_tol);
        if (lv.n_discarded > 0) return false;  // some |lambda| beyond clamp tolerance
        double wsum = 0.0;
        for (double w : lv.weights) {
            if (w < -params.weight_cap_tol) return false;
            wsum += w;
        }
        if (wsum > 1.0 + params.weight_cap_tol) return false;
        for (double e : lv.energies) {
            if (e < bounds.lo - params.bound_slack || e > bounds.hi + params.bound_slack)
                return false;
        }
        return true;
    };

    std::optional<ThresholdChoice> valid_choice;
    std::optional<ThresholdChoice> fallback;  // largest eps with a non-empty subspace
    int prev_keep = -1;
    bool prev_valid = false;

    for (double eps : params.eps_grid) {
        const int keep = count_retained(se, eps);
        if (keep == 0) continue;
        if (keep == prev_keep) {
            // identical retained subspace: only the recorded eps changes
            if (prev_valid) {
                valid_choice->eps_used = eps;
                valid_choice->solution.eps = eps;
            }
            continue;
        }
        GevpSolution sol = solve_retained(se, pair.f, eps, keep);
        prev_keep = keep;
        prev_valid = is_valid(sol);
        if (!fallback) fallback = ThresholdChoice{sol, eps, true};
        if (prev_valid) valid_choice = ThresholdChoice{std::move(sol), eps, false};
    }

    if (valid_choice) return *valid_choice;
    if (fallback) return *fallback;
    throw SampleRejectedError("overlap matrix has no positive modes at any grid threshold");
}

KrylovSample recover_sample(const ThresholdChoice& choice, const OverlapSequence& seq,
                            const RegularizationParams& params, const SpectralBounds& bounds,
                            const AffineMap& map) {
    const RawLevels lv =
        raw_levels(choice.solution, seq, map, params.lambda_clamp_tol);
    if (lv.energies.empty())
        throw SampleRejectedError("all recovered modes fell outside the cosine range");

    KrylovSample sample;
    sample.r_index = seq.r_index;
    sample.q = seq.q;
    sample.eps_used = choice.eps_used;
    sample.d_eff = static_cast<int>(lv.energies.size());
    sample.degraded = choice.degraded;
    sample.energies = lv.energies;
    sample.weights = lv.weights;
    if (params.stabilization) stabilize_low_energy(sample, bounds, params);
    return sample;
}

void stabilize_low_energy(KrylovSample& sample, const SpectralBounds& bounds,
                          const RegularizationParams& params) {
    auto& e = sample.energies;
    auto& w = sample.weights;
    if (e.size() != w.size()) throw std::invalid_argument("energy/weight size mismatch");
    if (e.empty()) return;

    for (double& x : e) x = std::clamp(x, bounds.lo, bounds.hi);

    while (e.size() >= 2 && e[1] - e[0] < params.gap_merge_tol) {
        const double wsum = w[0] + w[1];
        const double merged =
            wsum > 0 ? (w[0] * e[0] + w[1] * e[1]) / wsum : 0.5 * (e[0] + e[1]);
        e[0] = merged;
        w[0] = wsum;
        e.erase(e.begin() + 1);
        w.erase(w.begin() + 1);
    }

    for (double& x : w) x = std::clamp(x, 0.0, 1.0);
    double total = 0.0;
    for (double x : w) total += x;
    while (total > 1.0) {
        const double scale = 1.0 / total;
        total = 0.0;
        for (double& x : w) {
            x *= scale;
            total += x;
        }
    }
    sample.d_eff = static_cast<int>(e.size());
}

void write_samples_jsonl(const std::string& path, const std::vector<KrylovSample>& samples) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (const auto& s : samples) {
        nlohmann::json row{{"r", s.r_index},     {"q", s.q},
                           {"eps_used", s.eps_used}, {"D_eff", s.d_eff},
                           {"degraded", s.degraded}, {"E", s.energies},
                           {"w", s.weights}};
        out << row.dump() << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<KrylovSample> read_samples_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::vector<KrylovSample> samples;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json row;
        try {
            row = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        KrylovSample s;
        s.r_index = row.at("r").get<int>();
        s.q = row.at("q").get<int>();
        s.eps_used = row.at("eps_used").get<double>();
        s.d_eff = row.at("D_eff").get<int>();
        s.degraded = row.value("degraded", false);
        s.energies = row.at("E").get<std::vector<double>>();
        s.weights = row.at("w").get<std::vector<double>>();
        if (s.energies.size() != s.weights.size())
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": E and w lengths differ");
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace ftqk
