#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "ftqk/hamiltonian.hpp"
#include "ftqk/propagator.hpp"

namespace ftqk {

// Hermitian Toeplitz pair built from one overlap sequence:
//   S(n,n') = g_{n'-n}
//   F(n,n') = (g_{n'-n+1} + g_{n'-n-1}) / 2
// with g_{-n} = conj(g_n); F represents cos(Htilde) on the Krylov frame.
struct ToeplitzPair {
    Eigen::MatrixXcd s;
    Eigen::MatrixXcd f;
};

// S alone may be built one order larger than F (needs g up to index m-1)
Eigen::MatrixXcd overlap_matrix(const OverlapSequence& seq, int m);

ToeplitzPair assemble_toeplitz(const OverlapSequence& seq, int krylov_dim);

// concrete per-sample regularization parameters (resolved from run config)
struct RegularizationParams {
    std::vector<double> eps_grid;   // strictly decreasing relative thresholds
    double lambda_clamp_tol = 1e-6; // |lambda| may exceed 1 by at most this
    double weight_cap_tol = 1e-6;   // slack on w_j >= 0 and sum w <= 1
    double bound_slack = 0.5;       // energy slack outside certified bounds
    double gap_merge_tol = 0.0;     // merge window for the two lowest levels
    bool stabilization = true;
};

std::vector<double> default_eps_grid();  // 1e-1 .. 1e-12

// resolved defaults: weight_cap_tol = max(1e-6, 10 sigma), bound_slack = J/2,
// gap_merge_tol = 10 sqrt(lambda_clamp_tol) / tau
RegularizationParams make_regularization(double sigma, double coupling, const AffineMap& map);

struct EmptySubspaceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SampleRejectedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// eigenpairs of the whitened problem; columns of `u` satisfy u^H S u = 1
struct GevpSolution {
    double eps = 0.0;
    int d_eff = 0;
    Eigen::VectorXd lambda;  // ascending
    Eigen::MatrixXcd u;
};

// canonical orthogonalization: drop S-modes with eigenvalue <= eps * max,
// solve the ordinary Hermitian problem on the whitened subspace
GevpSolution solve_regularized(const ToeplitzPair& pair, double eps);

struct ThresholdChoice {
    GevpSolution solution;
    double eps_used = 0.0;
    bool degraded = false;  // no grid entry satisfied the physicality checks
};

// scans eps_grid from largest to smallest and keeps the smallest eps whose
// solution passes the physicality checks (cosine range, energy bounds within
// slack, weight bounds); throws SampleRejectedError when every entry is
// rank-deficient
ThresholdChoice select_threshold(const ToeplitzPair& pair, const OverlapSequence& seq,
                                 const RegularizationParams& params, const SpectralBounds& bounds,
                                 const AffineMap& map);

// one recovered sample: energies ascending with matching spectral weights
struct KrylovSample {
    int r_index = 0;
    int q = 0;
    double eps_used = 0.0;
    int d_eff = 0;
    bool degraded = false;
    std::vector<double> energies;
    std::vector<double> weights;
};

// clamps energies into the certified bounds, merges the two lowest levels
// while they are closer than gap_merge_tol, clips weights into [0, 1] and
// rescales when their sum exceeds 1; idempotent
void stabilize_low_energy(KrylovSample& sample, const SpectralBounds& bounds,
                          const RegularizationParams& params);

// converts a threshold choice into a sample (arccos inversion + weights);
// applies stabilization when enabled
KrylovSample recover_sample(const ThresholdChoice& choice, const OverlapSequence& seq,
                            const RegularizationParams& params, const SpectralBounds& bounds,
                            const AffineMap& map);

// JSON-lines serialization: one object {r, q, eps_used, D_eff, E, w} per line
void write_samples_jsonl(const std::string& path, const std::vector<KrylovSample>& samples);
std::vector<KrylovSample> read_samples_jsonl(const std::string& path);

}  // namespace ftqk
