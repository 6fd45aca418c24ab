#pragma once

#include <span>
#include <vector>

#include "saflab/adaptive.hpp"
#include "saflab/linalg.hpp"
#include "saflab/moments.hpp"

namespace saflab {

// Mean model: state(k+1) = Xi state(k) with Xi = (I - mu E{A_blk}) C, where
// C carries the reuse combination (beta row on top, shifted identity below)
// and E{A_blk} embeds ea in the top-left M x M block. state stacks the P
// lagged mean weight-error vectors and starts at P copies of w_o.
struct MeanModel {
  Matrix xi;                  // MP x MP
  std::vector<double> state;  // MP
  int m = 0;
  int p = 0;
};

MeanModel build_mean_model(const MomentSet& ms, const AlgoConfig& cfg,
                           std::span<const double> w_o);

struct MeanTrajectory {
  // ew[k] = expected weight vector E{w(k)}, k = 0..n_iters-1.
  std::vector<std::vector<double>> ew;
  double rho_xi = 0.0;
};

MeanTrajectory mean_trajectory(const MomentSet& ms, const AlgoConfig& cfg,
                               std::span<const double> w_o, int64_t n_iters);

// Mean-square model: vec(phi) iterates under the M^2P^2 x M^2P^2 matrix F
// with the vectorized noise term added each step; phi is the covariance of
// the stacked weight-error vector and starts at (ones(P,P) (x) w_o w_o')
// from the zero weight-history initialization.
struct MsdModel {
  Matrix f;                       // (MP)^2 x (MP)^2
  std::vector<double> noise_vec;  // mu^2 * vec(E{B B'})
  Matrix phi;                     // MP x MP current iterate
  double mu = 0.0;
  int m = 0;
  int p = 0;
};

// Assembles F from the moment estimates and the reuse structure. sigma_eta_sq
// and w_o feed the noise vector and phi(0); pass 0 / zeros when only the
// operator itself is needed (stability checks).
MsdModel build_f(const MomentSet& ms, const AlgoConfig& cfg,
                 double sigma_eta_sq = 0.0, std::span<const double> w_o = {},
                 NoiseTermVariant variant = NoiseTermVariant::exact);

struct MsdSeries {
  std::vector<double> msd;  // MSD(k), linear scale, k = 0..n_iters-1
  bool diverged = false;
  bool psd_ok = true;  // phi stayed PSD within tolerance at the spot checks
};

// Iterates the covariance recursion n_iters times, recording the trace of
// the first M x M diagonal block before each step. phi is resymmetrized
// every step and spot-checked for positive semidefiniteness every 100
// steps. Divergence truncates the series.
MsdSeries msd_transient(MsdModel& model, int64_t n_iters);

// Traces of the P M x M diagonal blocks of the model's current phi.
std::vector<double> phi_block_traces(const MsdModel& model);

struct SteadyState {
  double msd = 0.0;                  // linear scale
  std::vector<double> block_traces;  // P diagonal-block traces of phi(inf)
  double rho_f = 0.0;
};

// Steady-state MSD via one linear solve of (I - F) x = noise_vec:
// MSD(inf) = vec(I_MP)' x / P. Requires spectral_radius_estimate(F) < 1,
// else numeric_error.
SteadyState msd_steady_state(const MsdModel& model);

struct StabilityReport {
  double mu_max_mean = 0.0;  // 2 / lambda_max(ea)
  double rho_xi = 0.0;
  double rho_f = 0.0;
  bool mean_square_window_ok = false;  // rho_f < 1 (with estimator guard band)
};

// Mean-stability step-size bound 2 / lambda_max(E{A}).
double stability_bound(const MomentSet& ms);

// rho(F) estimate plus the contraction flag. rho(C (x) C) = 1 exactly (the
// reuse combination preserves constants), so the flag uses a 1e-6 guard
// band below 1 to avoid calling the non-contractive boundary stable.
StabilityReport mean_square_stability(const MsdModel& model);

// Full report: bound, rho(Xi) and rho(F) for the given configuration.
StabilityReport stability_report(const MomentSet& ms, const AlgoConfig& cfg);

struct SubbandNoise {
  std::vector<double> per_subband;  // ||h_i||^2 sigma_eta^2
  double paraunitary_alternative = 0.0;  // sigma_eta^2 / N, diagnostic
};

SubbandNoise subband_noise_variances(const FilterBank& fb,
                                     double sigma_eta_sq);

}  // namespace saflab
