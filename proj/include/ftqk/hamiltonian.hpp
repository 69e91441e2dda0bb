#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ftqk/chain.hpp"

namespace ftqk {

// sector-restricted Hamiltonian in compressed-row form;
// off-diagonal entries come from the spin-flip part of each bond
struct SectorHamiltonian {
    ChainSpec chain;
    int q = 0;
    std::size_t dim = 0;
    std::vector<std::int64_t> row_ptr;
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;
    std::vector<double> diag;

    void apply(const std::complex<double>* x, std::complex<double>* y) const;
    void apply(const double* x, double* y) const;
};

SectorHamiltonian build_sector_hamiltonian(const ChainSpec& chain, int q);

struct SpectralBounds {
    double lo = 0.0;
    double hi = 0.0;
};

// raised when an iterative eigensolve stalls; carries the best iterate
struct ConvergenceError : std::runtime_error {
    ConvergenceError(const std::string& what, SpectralBounds best)
        : std::runtime_error(what), best_bounds(best) {}
    SpectralBounds best_bounds;
};

inline constexpr double kBoundsResidualTol = 1e-8;

// certified-enough extremal eigenvalue bracket: symmetric Lanczos with full
// reorthogonalization, converged to `residual_tol` and widened outward by
// max(residual_tol, 1e-6 * spread)
SpectralBounds estimate_bounds(const SectorHamiltonian& h,
                               double residual_tol = kBoundsResidualTol);

// E -> tau*E + theta maps the certified spectral bracket into
// [margin, pi - margin] so that phases stay clear of the arccos endpoints
struct AffineMap {
    double tau = 1.0;
    double theta = 0.0;
};

double default_margin();  // 0.05 * pi

AffineMap affine_map(const SpectralBounds& bounds, double margin = default_margin());

// principal-branch inversion of lambda = cos(tau*E + theta);
// throws std::domain_error when |lambda| > 1
double recover_energy(double lambda, const AffineMap& map);

}  // namespace ftqk
