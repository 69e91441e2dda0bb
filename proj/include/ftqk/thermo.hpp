#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ftqk/krylov.hpp"

namespace ftqk {

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// log-spaced grid with both endpoints pinned exactly
struct TemperatureGrid {
    std::vector<double> t;

    static TemperatureGrid log_spaced(double t_min, double t_max, int points);
    std::size_t size() const { return t.size(); }
};

struct ThermoCurve {
    std::vector<double> temperature;
    std::vector<double> u, c, chi, s;                  // per site
    std::vector<double> u_err, c_err, chi_err, s_err;  // NaN when unavailable
    std::string provenance;                            // "ed" | "ftlm" | "ftqk"
    std::map<int, int> r_used;                         // accepted samples per sector
};

// Boltzmann sums on the grid, shifted by e_ref: z = sum w exp(-beta (E - e_ref)),
// e and e2 carry an extra factor E and E^2, q2 a factor q^2
struct ThermoSums {
    std::vector<double> z, e, e2, q2;
    double e_ref = 0.0;
};

// single evaluation path for every method: turns accumulated sums into
// per-site curves; throws NumericalError when the partition sum is not positive
void fill_curve_from_sums(const ThermoSums& sums, int n_sites, const TemperatureGrid& grid,
                          ThermoCurve& curve);

// reconstructed partition function with the global shift applied:
// z_shifted(T) = sum_q (N_q / R_q) sum_{r,j} w_j exp(-beta (E_j - e_ref))
struct PartitionFunction {
    std::vector<double> z_shifted;
    double e_ref = 0.0;
};

PartitionFunction partition_function(const std::vector<KrylovSample>& samples,
                                     const std::map<int, std::uint64_t>& sector_dims,
                                     const TemperatureGrid& grid);

// sample aggregation with optional delete-one jackknife over the vector index r
ThermoCurve observables(const std::vector<KrylovSample>& samples,
                        const std::map<int, std::uint64_t>& sector_dims, int n_sites,
                        const TemperatureGrid& grid, bool with_jackknife = true);

void write_curve_csv(const std::string& path, const ThermoCurve& curve);
ThermoCurve read_curve_csv(const std::string& path);

}  // namespace ftqk
