#pragma once

#include <cstdint>

#include "ftqk/chain.hpp"
#include "ftqk/krylov.hpp"
#include "ftqk/thermo.hpp"

namespace ftqk {

// dense per-sector diagonalization stays tractable up to this lattice size
inline constexpr int kMaxExactSites = 16;

// per-sector eigenvalues, ascending; sectors -q and q share a spectrum under
// the global spin flip, so only q >= 0 is diagonalized
std::vector<std::vector<double>> sector_spectra(const ChainSpec& chain);

// exact reference curve from full dense diagonalization; error columns are 0
ThermoCurve ed_thermo(const ChainSpec& chain, const TemperatureGrid& grid);

// stochastic trace reference: R random vectors per sector, M Lanczos steps
// with full reorthogonalization (hence the cap on M)
struct FtlmParams {
    int r_samples = 100;
    int lanczos_steps = 100;
    std::uint64_t seed = 1;
};

inline constexpr int kMaxFtlmSteps = 200;

// Ritz values and start-vector weights for every (sector, vector) pair;
// the aggregation is shared with the main method via observables()
std::vector<KrylovSample> ftlm_samples(const ChainSpec& chain, const FtlmParams& params);

ThermoCurve ftlm_thermo(const ChainSpec& chain, const FtlmParams& params,
                        const TemperatureGrid& grid);

}  // namespace ftqk
