#include "ftqk/hamiltonian.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ftqk/rng.hpp"

namespace ftqk {

void SectorHamiltonian::apply(const std::complex<double>* x, std::complex<double>* y) const {
    for (std::size_t i = 0; i < dim; ++i) {
        std::complex<double> acc = diag[i] * x[i];
        for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
            acc += vals[k] * x[cols[k]];
        }
        y[i] = acc;
    }
}

void SectorHamiltonian::apply(const double* x, double* y) const {
    for (std::size_t i = 0; i < dim; ++i) {
        double acc = diag[i] * x[i];
        for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
            acc += vals[k] * x[cols[k]];
        }
        y[i] = acc;
    }
}

SectorHamiltonian build_sector_hamiltonian(const ChainSpec& chain, int q) {
    const SectorBasis basis = enumerate_sector(chain, q);
    const int n = chain.n_sites;
    const double j = chain.coupling;

    SectorHamiltonian h;
    h.chain = chain;
    h.q = q;
    h.dim = basis.dim();
    h.diag.resize(h.dim);
    h.row_ptr.resize(h.dim + 1, 0);
    h.cols.reserve(h.dim * static_cast<std::size_t>(n) / 2);
    h.vals.reserve(h.dim * static_cast<std::size_t>(n) / 2);

    for (std::size_t i = 0; i < h.dim; ++i) {
        const std::uint32_t s = basis.states[i];
        double dz = 0.0;
        for (int b = 0; b < n; ++b) {
            const int bn = (b + 1) % n;
            const bool up_b = (s >> b) & 1u;
            const bool up_bn = (s >> bn) & 1u;
            if (up_b == up_bn) {
                dz += 0.25;
            } else {
                dz -= 0.25;
                // (S+ S- + S- S+)/2 flips the antiparallel pair
                const std::uint32_t t = s ^ ((1u << b) | (1u << bn));
                h.cols.push_back(static_cast<std::uint32_t>(state_rank(n, t)));
                h.vals.push_back(0.5 * j);
            }
        }
        h.diag[i] = j * dz;
        h.row_ptr[i + 1] = static_cast<std::int64_t>(h.cols.size());
    }
    return h;
}

namespace {

// extremal Ritz values plus their residual estimates for a Lanczos tridiagonal
struct RitzEnds {
    double lo, hi, res_lo, res_hi;
};

RitzEnds tridiagonal_ends(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                          double beta_next) {
    const int m = static_cast<int>(alpha.size());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(alpha, beta.head(m - 1), Eigen::ComputeEigenvectors);
    const auto& ev = es.eigenvalues();
    const auto& vec = es.eigenvectors();
    RitzEnds ends;
    ends.lo = ev(0);
    ends.hi = ev(m - 1);
    ends.res_lo = std::abs(beta_next * vec(m - 1, 0));
    ends.res_hi = std::abs(beta_next * vec(m - 1, m - 1));
    return ends;
}

}  // namespace

SpectralBounds estimate_bounds(const SectorHamiltonian& h, double residual_tol) {
    const std::size_t dim = h.dim;
    if (dim == 0) throw std::invalid_argument("empty sector");

    const int max_steps = 2 * static_cast<int>(std::min<std::size_t>(dim, 500));
    const int cap = static_cast<int>(std::min<std::size_t>(dim, static_cast<std::size_t>(max_steps)));
    rng::Stream stream{rng::kTagLanczosStart, rng::sector_key(h.q),
                       static_cast<std::uint64_t>(h.chain.n_sites)};

    Eigen::MatrixXd basis(dim, std::min(cap, 64));
    Eigen::VectorXd v(dim);
    for (std::size_t i = 0; i + 1 < dim; i += 2) {
        stream.gaussian_pair(v(i), v(i + 1));
    }
    if (dim % 2 == 1) {
        double z0, z1;
        stream.gaussian_pair(z0, z1);
        v(dim - 1) = z0;
    }
    v.normalize();
    basis.col(0) = v;

    Eigen::VectorXd alpha(max_steps), beta(max_steps);
    Eigen::VectorXd w(dim);
    RitzEnds best{0, 0, 1e300, 1e300};
    int m = 0;
    double beta_next = 0.0;

    while (m < cap) {
        h.apply(basis.col(m).data(), w.data());
        if (m > 0) w -= beta(m - 1) * basis.col(m - 1);
        alpha(m) = basis.col(m).dot(w);
        w -= alpha(m) * basis.col(m);
        // full reorthogonalization, two passes
        for (int pass = 0; pass < 2; ++pass) {
            w -= basis.leftCols(m + 1) * (basis.leftCols(m + 1).transpose() * w);
        }
        beta_next = w.norm();
        ++m;

        const int cadence = m < 100 ? 5 : (m < 300 ? 20 : 50);
        const bool invariant = beta_next < 1e-13 * (std::abs(alpha(m - 1)) + 1.0);
        if (invariant || m % cadence == 0 || m == cap) {
            const RitzEnds ends =
                tridiagonal_ends(alpha.head(m), beta.head(std::max(m - 1, 1)), invariant ? 0.0 : beta_next);
            best = ends;
            if (invariant || (ends.res_lo <= residual_tol && ends.res_hi <= residual_tol)) {
                const double spread = ends.hi - ends.lo;
                const double widen = std::max(residual_tol, 1e-6 * spread);
                return SpectralBounds{ends.lo - widen, ends.hi + widen};
            }
        }
        if (m < cap) {
            if (m == basis.cols()) {
                basis.conservativeResize(Eigen::NoChange, std::min(cap, 2 * m));
            }
            beta(m - 1) = beta_next;
            basis.col(m) = w / beta_next;
        }
    }

    const double spread = best.hi - best.lo;
    const double widen = std::max(residual_tol, 1e-6 * spread);
    throw ConvergenceError(
        "extremal Lanczos did not reach residual " + std::to_string(residual_tol) + " in " +
            std::to_string(m) + " steps (best residuals " + std::to_string(best.res_lo) + ", " +
            std::to_string(best.res_hi) + ")",
        SpectralBounds{best.lo - widen, best.hi + widen});
}

double default_margin() { return 0.05 * std::numbers::pi; }

AffineMap affine_map(const SpectralBounds& bounds, double margin) {
    const double spread = bounds.hi - bounds.lo;
    if (spread < 0)
        throw std::invalid_argument("bounds out of order");
    if (!(margin > 0.0) || !(margin < 0.5 * std::numbers::pi))
        throw std::invalid_argument("margin must lie in (0, pi/2)");
    AffineMap map;
    if (spread < 1e-12 * (std::abs(bounds.lo) + 1.0)) {
        // collapsed bracket (dimension-1 sector): park the phase mid-interval
        map.tau = 1.0;
        map.theta = 0.5 * std::numbers::pi - bounds.lo;
        return map;
    }
    map.tau = (std::numbers::pi - 2.0 * margin) / spread;
    map.theta = margin - map.tau * bounds.lo;
    return map;
}

double recover_energy(double lambda, const AffineMap& map) {
    if (lambda < -1.0 || lambda > 1.0)
        throw std::domain_error("cosine eigenvalue outside [-1, 1]: " + std::to_string(lambda));
    return (std::acos(lambda) - map.theta) / map.tau;
}

}  // namespace ftqk
