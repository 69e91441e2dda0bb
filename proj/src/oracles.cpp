#include "ftqk/oracles.hpp"

#include <lapacke.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ftqk/hamiltonian.hpp"
#include "ftqk/propagator.hpp"
#include "ftqk/rng.hpp"

namespace ftqk {

namespace {

std::vector<double> dense_sector_eigenvalues(const SectorHamiltonian& h) {
    const lapack_int n = static_cast<lapack_int>(h.dim);
    std::vector<double> a(h.dim * h.dim, 0.0);
    for (std::size_t row = 0; row < h.dim; ++row) {
        a[row * h.dim + row] = h.diag[row];
        for (std::int64_t k = h.row_ptr[row]; k < h.row_ptr[row + 1]; ++k) {
            a[static_cast<std::size_t>(h.cols[k]) * h.dim + row] = h.vals[k];
        }
    }
    std::vector<double> w(h.dim);
    const lapack_int info =
        LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'U', n, a.data(), n, w.data());
    if (info != 0)
        throw std::runtime_error("dense eigensolve failed, sector q = " + std::to_string(h.q) +
                                 ", info = " + std::to_string(info));
    return w;
}

}  // namespace

std::vector<std::vector<double>> sector_spectra(const ChainSpec& chain) {
    validate_chain(chain);
    if (chain.n_sites > kMaxExactSites)
        throw std::invalid_argument("dense diagonalization supports n_sites <= " +
                                    std::to_string(kMaxExactSites) + ", got " +
                                    std::to_string(chain.n_sites) +
                                    "; use the ftlm method for larger chains");
    std::vector<std::vector<double>> spectra;
    spectra.reserve(static_cast<std::size_t>(max_sector(chain)) + 1);
    for (int q = 0; q <= max_sector(chain); ++q) {
        spectra.push_back(dense_sector_eigenvalues(build_sector_hamiltonian(chain, q)));
    }
    return spectra;
}

ThermoCurve ed_thermo(const ChainSpec& chain, const TemperatureGrid& grid) {
    const auto spectra = sector_spectra(chain);

    double e_ref = spectra[0][0];
    for (const auto& spec : spectra) e_ref = std::min(e_ref, spec.front());

    const std::size_t nt = grid.size();
    ThermoSums sums;
    sums.e_ref = e_ref;
    sums.z.assign(nt, 0.0);
    sums.e.assign(nt, 0.0);
    sums.e2.assign(nt, 0.0);
    sums.q2.assign(nt, 0.0);
    for (int q = -max_sector(chain); q <= max_sector(chain); ++q) {
        const auto& spec = spectra[static_cast<std::size_t>(std::abs(q))];
        const double q2 = static_cast<double>(q) * static_cast<double>(q);
        for (std::size_t i = 0; i < nt; ++i) {
            const double beta = 1.0 / grid.t[i];
            double z = 0, e = 0, e2 = 0;
            for (double ev : spec) {
                const double boltz = std::exp(-beta * (ev - e_ref));
                z += boltz;
                e += ev * boltz;
                e2 += ev * ev * boltz;
            }
            sums.z[i] += z;
            sums.e[i] += e;
            sums.e2[i] += e2;
            sums.q2[i] += q2 * z;
        }
    }

    ThermoCurve curve;
    fill_curve_from_sums(sums, chain.n_sites, grid, curve);
    curve.provenance = "ed";
    curve.u_err.assign(nt, 0.0);
    curve.c_err.assign(nt, 0.0);
    curve.chi_err.assign(nt, 0.0);
    curve.s_err.assign(nt, 0.0);
    return curve;
}

namespace {

// Fixed-step symmetric Lanczos with full reorthogonalization; returns the
// Ritz values and the squared first components of the tridiagonal eigenbasis.
// The start vector is complex, drawn from the shared sector generator, but a
// real symmetric operator makes every Krylov Gram entry real, so the run is
// carried out on the stacked real vector [Re phi; Im phi] at half the cost of
// complex arithmetic while producing the identical tridiagonal and weights.
KrylovSample lanczos_trace_sample(const SectorHamiltonian& h, const SectorBasis& sector,
                                  int steps, int r_index, std::uint64_t seed) {
    const std::size_t dim = h.dim;
    const int m_max =
        static_cast<int>(std::min(static_cast<std::size_t>(steps), dim));

    RandomVectorSpec spec;
    spec.seed = seed;
    spec.r_index = r_index;
    spec.q = h.q;
    const std::vector<cdouble> phi = random_sector_vector(sector, spec, rng::kTagFtlmVector);

    const Eigen::Index n2 = 2 * static_cast<Eigen::Index>(dim);
    Eigen::VectorXd v(n2);
    for (std::size_t i = 0; i < dim; ++i) {
        v[static_cast<Eigen::Index>(i)] = phi[i].real();
        v[static_cast<Eigen::Index>(dim + i)] = phi[i].imag();
    }

    auto apply_stacked = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
        h.apply(x.data(), y.data());
        h.apply(x.data() + dim, y.data() + dim);
    };

    Eigen::MatrixXd basis(n2, m_max);
    Eigen::VectorXd alpha(m_max), beta(m_max);
    Eigen::VectorXd w(n2);
    int m = 0;
    double beta_prev = 0.0;
    basis.col(0) = v;  // the generator already returns a unit-norm vector
    for (;;) {
        apply_stacked(basis.col(m), w);
        if (m > 0) w -= beta_prev * basis.col(m - 1);
        alpha[m] = basis.col(m).dot(w);
        w -= alpha[m] * basis.col(m);
        // two reorthogonalization passes keep the basis orthogonal to working
        // precision even after many steps
        w -= basis.leftCols(m + 1) * (basis.leftCols(m + 1).transpose() * w);
        w -= basis.leftCols(m + 1) * (basis.leftCols(m + 1).transpose() * w);
        ++m;
        if (m == m_max) break;
        const double b = w.norm();
        if (b < 1e-13 * (std::abs(alpha[m - 1]) + 1.0)) break;  // invariant subspace
        beta[m - 1] = b;
        beta_prev = b;
        basis.col(m) = w / b;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    tri.computeFromTridiagonal(alpha.head(m), beta.head(std::max(m - 1, 0)),
                               Eigen::ComputeEigenvectors);
    if (tri.info() != Eigen::Success)
        throw std::runtime_error("tridiagonal eigensolve failed in the stochastic reference");

    KrylovSample sample;
    sample.r_index = r_index;
    sample.q = h.q;
    sample.eps_used = 0.0;
    sample.d_eff = m;
    sample.degraded = false;
    sample.energies.resize(static_cast<std::size_t>(m));
    sample.weights.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        sample.energies[static_cast<std::size_t>(j)] = tri.eigenvalues()[j];
        const double first = tri.eigenvectors()(0, j);
        sample.weights[static_cast<std::size_t>(j)] = first * first;
    }
    return sample;
}

}  // namespace

std::vector<KrylovSample> ftlm_samples(const ChainSpec& chain, const FtlmParams& params) {
    validate_chain(chain);
    if (params.r_samples < 1)
        throw std::invalid_argument("need at least one random vector per sector");
    if (params.lanczos_steps < 1 || params.lanczos_steps > kMaxFtlmSteps)
        throw std::invalid_argument("lanczos_steps must lie in [1, " +
                                    std::to_string(kMaxFtlmSteps) + "]");

    std::vector<KrylovSample> samples;
    samples.reserve(static_cast<std::size_t>(chain.n_sites + 1) *
                    static_cast<std::size_t>(params.r_samples));
    for (int q = -max_sector(chain); q <= max_sector(chain); ++q) {
        const SectorBasis sector = enumerate_sector(chain, q);
        const SectorHamiltonian h = build_sector_hamiltonian(chain, q);
        for (int r = 1; r <= params.r_samples; ++r) {
            samples.push_back(
                lanczos_trace_sample(h, sector, params.lanczos_steps, r, params.seed));
        }
    }
    return samples;
}

ThermoCurve ftlm_thermo(const ChainSpec& chain, const FtlmParams& params,
                        const TemperatureGrid& grid) {
    const auto samples = ftlm_samples(chain, params);
    ThermoCurve curve =
        observables(samples, sector_dimensions(chain), chain.n_sites, grid, true);
    curve.provenance = "ftlm";
    return curve;
}

}  // namespace ftqk
