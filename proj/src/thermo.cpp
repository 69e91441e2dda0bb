#include "ftqk/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace ftqk {

TemperatureGrid TemperatureGrid::log_spaced(double t_min, double t_max, int points) {
    if (!(t_min > 0) || !(t_max > t_min))
        throw std::invalid_argument("temperature grid needs 0 < t_min < t_max");
    if (points < 2) throw std::invalid_argument("temperature grid needs at least 2 points");
    TemperatureGrid grid;
    grid.t.resize(static_cast<std::size_t>(points));
    const double ratio = std::log(t_max / t_min);
    for (int i = 0; i < points; ++i) {
        grid.t[static_cast<std::size_t>(i)] = t_min * std::exp(ratio * i / (points - 1));
    }
    grid.t.front() = t_min;
    grid.t.back() = t_max;
    return grid;
}

void fill_curve_from_sums(const ThermoSums& sums, int n_sites, const TemperatureGrid& grid,
                          ThermoCurve& curve) {
    const std::size_t nt = grid.size();
    curve.temperature = grid.t;
    curve.u.resize(nt);
    curve.c.resize(nt);
    curve.chi.resize(nt);
    curve.s.resize(nt);
    const double n = static_cast<double>(n_sites);
    for (std::size_t i = 0; i < nt; ++i) {
        const double t = grid.t[i];
        const double beta = 1.0 / t;
        const double z = sums.z[i];
        if (!(z > 0.0) || !std::isfinite(z))
            throw NumericalError("partition sum is not positive at T = " + std::to_string(t));
        const double u_tot = sums.e[i] / z;
        const double c_tot = beta * beta * (sums.e2[i] / z - u_tot * u_tot);
        const double chi_tot = beta * sums.q2[i] / z;
        const double ln_z = std::log(z) - beta * sums.e_ref;
        const double s_tot = beta * u_tot + ln_z;
        curve.u[i] = u_tot / n;
        curve.c[i] = c_tot / n;
        curve.chi[i] = chi_tot / n;
        curve.s[i] = s_tot / n;
    }
}

namespace {

double global_shift(const std::vector<KrylovSample>& samples) {
    double e_ref = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
        for (double e : s.energies) e_ref = std::min(e_ref, e);
    }
    if (!std::isfinite(e_ref)) throw std::invalid_argument("no energies to aggregate");
    return e_ref;
}

// per-sample Boltzmann partials: z, z*E, z*E^2 stacked per temperature
struct SamplePartials {
    std::vector<double> z, e, e2;  // length = grid size
};

SamplePartials sample_partials(const KrylovSample& s, double e_ref,
                               const TemperatureGrid& grid) {
    const std::size_t nt = grid.size();
    SamplePartials p{std::vector<double>(nt, 0.0), std::vector<double>(nt, 0.0),
                     std::vector<double>(nt, 0.0)};
    for (std::size_t i = 0; i < nt; ++i) {
        const double beta = 1.0 / grid.t[i];
        double z = 0, e = 0, e2 = 0;
        for (std::size_t j = 0; j < s.energies.size(); ++j) {
            const double boltz = s.weights[j] * std::exp(-beta * (s.energies[j] - e_ref));
            z += boltz;
            e += s.energies[j] * boltz;
            e2 += s.energies[j] * s.energies[j] * boltz;
        }
        p.z[i] = z;
        p.e[i] = e;
        p.e2[i] = e2;
    }
    return p;
}

struct GroupedSamples {
    // sector order is ascending in q; samples inside a sector ascend in r
    std::vector<int> qs;
    std::vector<double> dims;
    std::vector<std::vector<const KrylovSample*>> members;
    int r_max = 0;
};

GroupedSamples group_by_sector(const std::vector<KrylovSample>& samples,
                               const std::map<int, std::uint64_t>& sector_dims) {
    GroupedSamples g;
    for (const auto& [q, dim] : sector_dims) {
        g.qs.push_back(q);
        g.dims.push_back(static_cast<double>(dim));
        g.members.emplace_back();
    }
    for (const auto& s : samples) {
        const auto it = sector_dims.find(s.q);
        if (it == sector_dims.end())
            throw std::invalid_argument("sample sector q = " + std::to_string(s.q) +
                                        " missing from sector_dims");
        const std::size_t idx =
            static_cast<std::size_t>(std::distance(sector_dims.begin(), it));
        g.members[idx].push_back(&s);
        g.r_max = std::max(g.r_max, s.r_index);
    }
    for (std::size_t k = 0; k < g.qs.size(); ++k) {
        if (g.members[k].empty())
            throw NumericalError("no accepted samples in sector q = " + std::to_string(g.qs[k]));
        std::sort(g.members[k].begin(), g.members[k].end(),
                  [](const KrylovSample* a, const KrylovSample* b) {
                      return a->r_index < b->r_index;
                  });
    }
    return g;
}

}  // namespace

PartitionFunction partition_function(const std::vector<KrylovSample>& samples,
                                     const std::map<int, std::uint64_t>& sector_dims,
                                     const TemperatureGrid& grid) {
    const GroupedSamples g = group_by_sector(samples, sector_dims);
    PartitionFunction pf;
    pf.e_ref = global_shift(samples);
    pf.z_shifted.assign(grid.size(), 0.0);
    for (std::size_t k = 0; k < g.qs.size(); ++k) {
        const double coeff = g.dims[k] / static_cast<double>(g.members[k].size());
        for (const KrylovSample* s : g.members[k]) {
            const SamplePartials p = sample_partials(*s, pf.e_ref, grid);
            for (std::size_t i = 0; i < grid.size(); ++i) pf.z_shifted[i] += coeff * p.z[i];
        }
    }
    return pf;
}

ThermoCurve observables(const std::vector<KrylovSample>& samples,
                        const std::map<int, std::uint64_t>& sector_dims, int n_sites,
                        const TemperatureGrid& grid, bool with_jackknife) {
    const GroupedSamples g = group_by_sector(samples, sector_dims);
    const std::size_t nt = grid.size();
    const double e_ref = global_shift(samples);

    // cache per-sample partials, grouped exactly like the aggregation loop
    std::vector<std::vector<SamplePartials>> partials(g.qs.size());
    for (std::size_t k = 0; k < g.qs.size(); ++k) {
        partials[k].reserve(g.members[k].size());
        for (const KrylovSample* s : g.members[k]) {
            partials[k].push_back(sample_partials(*s, e_ref, grid));
        }
    }

    // sector-level sums enable cheap delete-one recombination
    std::vector<SamplePartials> sector_sums(
        g.qs.size(), SamplePartials{std::vector<double>(nt, 0.0), std::vector<double>(nt, 0.0),
                                    std::vector<double>(nt, 0.0)});
    for (std::size_t k = 0; k < g.qs.size(); ++k) {
        for (const SamplePartials& p : partials[k]) {
            for (std::size_t i = 0; i < nt; ++i) {
                sector_sums[k].z[i] += p.z[i];
                sector_sums[k].e[i] += p.e[i];
                sector_sums[k].e2[i] += p.e2[i];
            }
        }
    }

    auto combine = [&](int drop_r) {
        ThermoSums sums;
        sums.e_ref = e_ref;
        sums.z.assign(nt, 0.0);
        sums.e.assign(nt, 0.0);
        sums.e2.assign(nt, 0.0);
        sums.q2.assign(nt, 0.0);
        for (std::size_t k = 0; k < g.qs.size(); ++k) {
            double zk, ek, e2k;
            std::size_t count = g.members[k].size();
            const double q2 = static_cast<double>(g.qs[k]) * static_cast<double>(g.qs[k]);
            const SamplePartials* dropped = nullptr;
            if (drop_r > 0) {
                for (std::size_t s = 0; s < g.members[k].size(); ++s) {
                    if (g.members[k][s]->r_index == drop_r) {
                        dropped = &partials[k][s];
                        --count;
                        break;
                    }
                }
            }
            if (count == 0)
                throw NumericalError("jackknife replicate empties sector q = " +
                                     std::to_string(g.qs[k]));
            const double coeff = g.dims[k] / static_cast<double>(count);
            for (std::size_t i = 0; i < nt; ++i) {
                zk = sector_sums[k].z[i];
                ek = sector_sums[k].e[i];
                e2k = sector_sums[k].e2[i];
                if (dropped) {
                    zk -= dropped->z[i];
                    ek -= dropped->e[i];
                    e2k -= dropped->e2[i];
                }
                sums.z[i] += coeff * zk;
                sums.e[i] += coeff * ek;
                sums.e2[i] += coeff * e2k;
                sums.q2[i] += coeff * q2 * zk;
            }
        }
        return sums;
    };

    ThermoCurve curve;
    fill_curve_from_sums(combine(0), n_sites, grid, curve);
    for (std::size_t k = 0; k < g.qs.size(); ++k) {
        curve.r_used[g.qs[k]] = static_cast<int>(g.members[k].size());
    }

    const double nan = std::numeric_limits<double>::quiet_NaN();
    curve.u_err.assign(nt, nan);
    curve.c_err.assign(nt, nan);
    curve.chi_err.assign(nt, nan);
    curve.s_err.assign(nt, nan);

    if (with_jackknife && g.r_max >= 2) {
        std::vector<ThermoCurve> replicates;
        replicates.reserve(static_cast<std::size_t>(g.r_max));
        bool usable = true;
        try {
            for (int r = 1; r <= g.r_max; ++r) {
                ThermoCurve rep;
                fill_curve_from_sums(combine(r), n_sites, grid, rep);
                replicates.push_back(std::move(rep));
            }
        } catch (const NumericalError&) {
            usable = false;  // a replicate emptied some sector: no error bars
        }
        if (usable) {
            const double nrep = static_cast<double>(replicates.size());
            auto stderr_of = [&](auto field, std::size_t i) {
                double mean = 0.0;
                for (const auto& rep : replicates) mean += (rep.*field)[i];
                mean /= nrep;
                double ss = 0.0;
                for (const auto& rep : replicates) {
                    const double d = (rep.*field)[i] - mean;
                    ss += d * d;
                }
                return std::sqrt((nrep - 1.0) / nrep * ss);
            };
            for (std::size_t i = 0; i < nt; ++i) {
                curve.u_err[i] = stderr_of(&ThermoCurve::u, i);
                curve.c_err[i] = stderr_of(&ThermoCurve::c, i);
                curve.chi_err[i] = stderr_of(&ThermoCurve::chi, i);
                curve.s_err[i] = stderr_of(&ThermoCurve::s, i);
            }
        }
    }
    return curve;
}

void write_curve_csv(const std::string& path, const ThermoCurve& curve) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "T,U_per_site,U_err,C_per_site,C_err,chi_per_site,chi_err,S_per_site,S_err,"
           "provenance\n";
    char buf[320];
    for (std::size_t i = 0; i < curve.temperature.size(); ++i) {
        std::snprintf(buf, sizeof buf,
                      "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s\n",
                      curve.temperature[i], curve.u[i], curve.u_err[i], curve.c[i],
                      curve.c_err[i], curve.chi[i], curve.chi_err[i], curve.s[i], curve.s_err[i],
                      curve.provenance.c_str());
        out << buf;
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

ThermoCurve read_curve_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) ||
        line != "T,U_per_site,U_err,C_per_site,C_err,chi_per_site,chi_err,S_per_site,S_err,"
                "provenance")
        throw std::runtime_error("unexpected curve CSV header in " + path);
    ThermoCurve curve;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 10)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 10 fields");
        auto num = [&](std::size_t k) { return std::strtod(fields[k].c_str(), nullptr); };
        curve.temperature.push_back(num(0));
        curve.u.push_back(num(1));
        curve.u_err.push_back(num(2));
        curve.c.push_back(num(3));
        curve.c_err.push_back(num(4));
        curve.chi.push_back(num(5));
        curve.chi_err.push_back(num(6));
        curve.s.push_back(num(7));
        curve.s_err.push_back(num(8));
        if (curve.provenance.empty()) curve.provenance = fields[9];
    }
    return curve;
}

}  // namespace ftqk
