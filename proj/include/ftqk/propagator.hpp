#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "ftqk/hamiltonian.hpp"
#include "ftqk/rng.hpp"

namespace ftqk {

using cdouble = std::complex<double>;

// identifies one pseudorandom sector vector; r_index counts samples from 1
struct RandomVectorSpec {
    std::uint64_t seed = 1;
    int r_index = 1;
    int q = 0;
};

// unit-norm vector on the sector basis with i.i.d. complex-normal amplitudes;
// bitwise deterministic in (tag, seed, r_index, q) regardless of scheduling.
// `tag` separates consumers (main method vs. stochastic reference) that share
// this one audited generator.
std::vector<cdouble> random_sector_vector(const SectorBasis& basis, const RandomVectorSpec& spec,
                                          std::uint64_t tag = rng::kTagInitialVector);

// overlap sequence g_n = <phi0| exp(-i n Htilde) |phi0>, stored for n >= 0;
// the n < 0 half is implied by g_{-n} = conj(g_n)
struct OverlapSequence {
    std::vector<cdouble> g;  // indices 0..max_index
    int r_index = 0;
    int q = 0;
    double noise_sigma = 0.0;

    int max_index() const { return static_cast<int>(g.size()) - 1; }
};

inline constexpr double kEvolveTol = 1e-12;

// applies the phase-mapped operator exp(-i (tau H + theta)) once, via an
// adaptively sized Lanczos subspace with per-step accuracy `tol`
std::vector<cdouble> evolve_one_step(const SectorHamiltonian& h, const AffineMap& map,
                                     const std::vector<cdouble>& psi, double tol = kEvolveTol);

// g_0 is pinned to exactly 1; g_1..g_steps come from repeated one-step evolution
OverlapSequence measure_overlaps(const SectorHamiltonian& h, const AffineMap& map,
                                 const std::vector<cdouble>& phi0, int steps,
                                 const RandomVectorSpec& spec, double tol = kEvolveTol);

// adds i.i.d. Gaussian(0, sigma^2) noise to Re and Im of g_1..g_D (g_0 stays 1);
// the stream is keyed by (noise_seed, r, q, n), independent of the vector stream
OverlapSequence inject_noise(const OverlapSequence& clean, double sigma,
                             std::uint64_t noise_seed);

// sidecar serialization: columns n, Re g_n, Im g_n, r, q, sigma
void write_overlaps_csv(const std::string& path, const std::vector<OverlapSequence>& seqs);

// import validates g_0 = 1 within 4 sigma and |g_n| <= 1 + 6 sigma
std::vector<OverlapSequence> read_overlaps_csv(const std::string& path);

}  // namespace ftqk
