#include "ftqk/propagator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ftqk/rng.hpp"

namespace ftqk {

std::vector<cdouble> random_sector_vector(const SectorBasis& basis, const RandomVectorSpec& spec,
                                          std::uint64_t tag) {
    if (spec.r_index < 1) throw std::invalid_argument("r_index counts from 1");
    rng::Stream stream{tag, spec.seed, static_cast<std::uint64_t>(spec.r_index),
                       rng::sector_key(spec.q)};
    std::vector<cdouble> v(basis.dim());
    double norm2 = 0.0;
    for (auto& amp : v) {
        double re, im;
        stream.gaussian_pair(re, im);
        amp = {re, im};
        norm2 += re * re + im * im;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& amp : v) amp *= inv;
    return v;
}

namespace {

using VectorXcd = Eigen::VectorXcd;
using MatrixXcd = Eigen::MatrixXcd;

// y = (tau H + theta) x
void apply_mapped(const SectorHamiltonian& h, const AffineMap& map, const cdouble* x, cdouble* y) {
    h.apply(x, y);
    for (std::size_t i = 0; i < h.dim; ++i) y[i] = map.tau * y[i] + map.theta * x[i];
}

// f = Q exp(-i diag(ev)) Q^T e_1 for the current tridiagonal
VectorXcd tridiagonal_phase_column(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                                   int m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(alpha.head(m), beta.head(m - 1 > 0 ? m - 1 : 0),
                              Eigen::ComputeEigenvectors);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const Eigen::MatrixXd& q = es.eigenvectors();
    VectorXcd phases(m);
    for (int k = 0; k < m; ++k) phases(k) = std::exp(cdouble(0.0, -ev(k)));
    return q * (phases.array() * q.row(0).transpose().array()).matrix();
}

}  // namespace

std::vector<cdouble> evolve_one_step(const SectorHamiltonian& h, const AffineMap& map,
                                     const std::vector<cdouble>& psi, double tol) {
    const std::size_t dim = h.dim;
    if (psi.size() != dim) throw std::invalid_argument("state size does not match sector");

    const Eigen::Map<const VectorXcd> psi_map(psi.data(), static_cast<Eigen::Index>(dim));
    const double psi_norm = psi_map.norm();
    if (!(psi_norm > 0)) throw std::invalid_argument("zero state");

    const int m_cap = static_cast<int>(std::min<std::size_t>(dim, 96));
    MatrixXcd basis(dim, std::min(m_cap, 16));
    Eigen::VectorXd alpha(m_cap), beta(m_cap);
    basis.col(0) = psi_map / psi_norm;

    VectorXcd w(dim);
    int m = 0;
    bool invariant = false;
    VectorXcd f;

    while (true) {
        apply_mapped(h, map, basis.col(m).data(), w.data());
        if (m > 0) w -= beta(m - 1) * basis.col(m - 1);
        alpha(m) = basis.col(m).dot(w).real();
        w -= alpha(m) * basis.col(m);
        for (int pass = 0; pass < 2; ++pass) {
            w -= basis.leftCols(m + 1) * (basis.leftCols(m + 1).adjoint() * w);
        }
        const double beta_next = w.norm();
        ++m;

        invariant = beta_next < 1e-14 || m == static_cast<int>(dim);
        f = tridiagonal_phase_column(alpha, beta, m);
        const double err = invariant ? 0.0 : beta_next * std::abs(f(m - 1));
        if (invariant || err <= tol) break;
        if (m == m_cap) {
            throw ConvergenceError("one-step propagation stalled at subspace size " +
                                       std::to_string(m) + " with residual " + std::to_string(err),
                                   SpectralBounds{});
        }
        if (m == basis.cols()) basis.conservativeResize(Eigen::NoChange, std::min(m_cap, 2 * m));
        beta(m - 1) = beta_next;
        basis.col(m) = w / beta_next;
    }

    VectorXcd result = basis.leftCols(m) * (psi_norm * f);
    return {result.data(), result.data() + dim};
}

OverlapSequence measure_overlaps(const SectorHamiltonian& h, const AffineMap& map,
                                 const std::vector<cdouble>& phi0, int steps,
                                 const RandomVectorSpec& spec, double tol) {
    if (steps < 1) throw std::invalid_argument("need at least one evolution step");
    OverlapSequence seq;
    seq.r_index = spec.r_index;
    seq.q = spec.q;
    seq.g.resize(static_cast<std::size_t>(steps) + 1);
    seq.g[0] = 1.0;

    const Eigen::Map<const VectorXcd> phi_map(phi0.data(), static_cast<Eigen::Index>(phi0.size()));
    std::vector<cdouble> psi = phi0;
    for (int n = 1; n <= steps; ++n) {
        psi = evolve_one_step(h, map, psi, tol);
        const Eigen::Map<const VectorXcd> psi_map(psi.data(), static_cast<Eigen::Index>(psi.size()));
        seq.g[static_cast<std::size_t>(n)] = phi_map.dot(psi_map);
    }
    return seq;
}

OverlapSequence inject_noise(const OverlapSequence& clean, double sigma,
                             std::uint64_t noise_seed) {
    if (sigma < 0) throw std::invalid_argument("sigma must be non-negative");
    OverlapSequence noisy = clean;
    noisy.noise_sigma = sigma;
    if (sigma == 0.0) return noisy;
    for (int n = 1; n <= clean.max_index(); ++n) {
        rng::Stream stream{rng::kTagOverlapNoise, noise_seed,
                           static_cast<std::uint64_t>(clean.r_index), rng::sector_key(clean.q),
                           static_cast<std::uint64_t>(n)};
        double dre, dim_;
        stream.gaussian_pair(dre, dim_);
        noisy.g[static_cast<std::size_t>(n)] += cdouble(sigma * dre, sigma * dim_);
    }
    return noisy;
}

void write_overlaps_csv(const std::string& path, const std::vector<OverlapSequence>& seqs) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "n,re_g,im_g,r,q,sigma\n";
    char buf[160];
    for (const auto& seq : seqs) {
        for (int n = 0; n <= seq.max_index(); ++n) {
            std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%d,%d,%.17g\n", n,
                          seq.g[static_cast<std::size_t>(n)].real(),
                          seq.g[static_cast<std::size_t>(n)].imag(), seq.r_index, seq.q,
                          seq.noise_sigma);
            out << buf;
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<OverlapSequence> read_overlaps_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "n,re_g,im_g,r,q,sigma")
        throw std::runtime_error("unexpected overlap CSV header in " + path);

    std::map<std::pair<int, int>, OverlapSequence> groups;  // keyed (q, r)
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        int n, r, q;
        double re, im, sigma;
        char c;
        if (!(ss >> n >> c >> re >> c >> im >> c >> r >> c >> q >> c >> sigma))
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed row");
        auto& seq = groups[{q, r}];
        seq.r_index = r;
        seq.q = q;
        seq.noise_sigma = sigma;
        if (n != static_cast<int>(seq.g.size()))
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": indices must be contiguous from 0 per (r, q)");
        seq.g.emplace_back(re, im);
    }

    std::vector<OverlapSequence> out;
    out.reserve(groups.size());
    for (auto& [key, seq] : groups) {
        const double sigma = seq.noise_sigma;
        if (seq.g.empty()) continue;
        if (std::abs(seq.g[0] - cdouble(1.0, 0.0)) > 4.0 * sigma + 1e-12)
            throw std::runtime_error("imported sequence (r=" + std::to_string(seq.r_index) +
                                     ", q=" + std::to_string(seq.q) + ") has g_0 != 1");
        for (int n = 0; n <= seq.max_index(); ++n) {
            if (std::abs(seq.g[static_cast<std::size_t>(n)]) > 1.0 + 6.0 * sigma + 1e-9)
                throw std::runtime_error("imported overlap |g_" + std::to_string(n) +
                                         "| out of range for (r=" + std::to_string(seq.r_index) +
                                         ", q=" + std::to_string(seq.q) + ")");
        }
        out.push_back(std::move(seq));
    }
    return out;
}

}  // namespace ftqk
