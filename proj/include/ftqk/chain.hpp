#pragma once

#include <cstdint>
#include <map>
#include <vector>

namespace ftqk {

// Spin-1/2 antiferromagnetic Heisenberg ring (periodic boundary, even number
// of sites). Units: k_B = g = mu_B = 1, energies in units of the coupling.
struct ChainSpec {
    int n_sites = 4;
    double coupling = 1.0;
};

// throws std::invalid_argument when the lattice parameters are unusable
void validate_chain(const ChainSpec& chain);

std::uint64_t binomial(int n, int k);

// magnetization sector q = (#up - #down)/2 ranges over -n/2 .. n/2
inline int max_sector(const ChainSpec& chain) { return chain.n_sites / 2; }

// basis of one magnetization sector: bit i set means site i is up,
// states sorted in increasing integer order
struct SectorBasis {
    int n_sites = 0;
    int q = 0;
    std::vector<std::uint32_t> states;

    std::size_t dim() const { return states.size(); }
};

SectorBasis enumerate_sector(const ChainSpec& chain, int q);

// q -> dimension for every sector; dimensions sum to 2^n
std::map<int, std::uint64_t> sector_dimensions(const ChainSpec& chain);

// position of `state` inside the sorted sector enumeration, O(n) combinadic
std::size_t state_rank(int n_sites, std::uint32_t state);

}  // namespace ftqk
