#include "ftqk/chain.hpp"

#include <bit>
#include <stdexcept>
#include <string>

namespace ftqk {

void validate_chain(const ChainSpec& chain) {
    if (chain.n_sites < 4 || chain.n_sites % 2 != 0)
        throw std::invalid_argument("n_sites must be even and >= 4, got " +
                                    std::to_string(chain.n_sites));
    if (chain.n_sites > 30)
        throw std::invalid_argument("n_sites > 30 exceeds the supported basis width");
    if (!(chain.coupling > 0.0))
        throw std::invalid_argument("coupling must be positive (antiferromagnetic)");
}

std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    if (k > n - k) k = n - k;
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) {
        r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    }
    return r;
}

SectorBasis enumerate_sector(const ChainSpec& chain, int q) {
    validate_chain(chain);
    const int n = chain.n_sites;
    if (q < -n / 2 || q > n / 2)
        throw std::invalid_argument("sector label out of range: q = " + std::to_string(q));
    const int n_up = n / 2 + q;

    SectorBasis basis;
    basis.n_sites = n;
    basis.q = q;
    basis.states.reserve(binomial(n, n_up));
    if (n_up == 0) {
        basis.states.push_back(0);
        return basis;
    }
    std::uint32_t state = (1u << n_up) - 1u;
    const std::uint32_t limit = 1u << n;
    while (state < limit) {
        basis.states.push_back(state);
        // Gosper's hack: next integer with the same popcount
        const std::uint32_t c = state & (~state + 1u);
        const std::uint32_t r = state + c;
        state = (((r ^ state) >> 2) / c) | r;
    }
    return basis;
}

std::map<int, std::uint64_t> sector_dimensions(const ChainSpec& chain) {
    validate_chain(chain);
    std::map<int, std::uint64_t> dims;
    const int half = chain.n_sites / 2;
    for (int q = -half; q <= half; ++q) {
        dims[q] = binomial(chain.n_sites, half + q);
    }
    return dims;
}

std::size_t state_rank(int n_sites, std::uint32_t state) {
    // colexicographic rank of the set-bit positions, which coincides with the
    // index in the increasing-integer enumeration of fixed-popcount states
    std::size_t rank = 0;
    int seen = 0;
    for (int pos = 0; pos < n_sites; ++pos) {
        if (state & (1u << pos)) {
            ++seen;
            rank += binomial(pos, seen);
        }
    }
    return rank;
}

}  // namespace ftqk
