#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "saflab/filterbank.hpp"
#include "saflab/signals.hpp"

namespace saflab {

// NR-NSAF parameters. P = 1 reduces the update to NSAF, alpha = 1 to INSAF.
struct AlgoConfig {
  int filter_len = 16;     // M
  int n_subbands = 8;      // N
  int reuse_depth = 1;     // P >= 1
  double alpha = 1.0;      // weighting factor in (0, 1]
  double step_size = 0.5;  // mu > 0
  double regularizer = 1e-3;  // epsilon >= 0

  void validate() const;
};

// Reuse weights beta_p = alpha^p / sum_q alpha^q, p = 0..P-1.
std::vector<double> beta_weights(double alpha, int p_depth);

// Per-trial adaptive state: the P most recent weight vectors (index 0 is
// w(k)), the fullband input window (length M+L-1, newest first) and the
// desired window (length L, newest first). Everything starts at zero.
struct AdaptiveState {
  std::vector<std::vector<double>> weight_history;
  std::vector<double> input_window;
  std::vector<double> desired_window;
  int64_t iteration = 0;

  const std::vector<double>& weights() const { return weight_history.front(); }

  // Scratch reused across steps (not semantically part of the state).
  Matrix scratch_regressors;
  std::vector<double> scratch_desired;
  std::vector<double> scratch_combined;
  std::vector<double> scratch_beta;
};

AdaptiveState make_adaptive_state(const AlgoConfig& cfg, const FilterBank& fb);

// Shifts one (input, desired) sample pair into the delay lines without
// adapting. Used to prime the windows with stationary signal before k = 0,
// so the statistics the update sees at k = 0 match the model's stationary
// expectations.
void prime_windows(AdaptiveState& state, double input_sample,
                   double desired_sample);

struct StepOutput {
  std::vector<double> subband_errors;    // zeta_i against the reuse-combined weights
  std::vector<double> decimated_errors;  // e_i against the current weights
  std::vector<double> new_weights;
};

// One decimated iteration: shifts both windows by the N new samples, forms
// the subband regressors and desired entries, computes the errors against
// the beta-combined weight history, and applies the normalized update.
StepOutput step(AdaptiveState& state, const AlgoConfig& cfg,
                const FilterBank& fb, std::span<const double> new_inputs,
                std::span<const double> new_desired);

// Scenario signals for a single trial.
struct TrialSignals {
  InputModel input;
  RngStream input_rng;
  RngStream noise_rng;
  double sigma_eta_sq = 0.0;
  std::vector<double> w_o;
};

struct TrialResult {
  std::vector<double> sq_deviation;  // ||w_o - w(k)||^2, recorded before step k
  Matrix weights;                    // n_iters x M when recorded, else empty
  bool diverged = false;
  int64_t diverged_at = -1;
};

// Runs n_iters decimated iterations against the linear model
// d(n) = u'(n) w_o + eta(n). Deterministic given the two RNG streams.
TrialResult run_trial(const AlgoConfig& cfg, const FilterBank& fb,
                      const TrialSignals& signals, int64_t n_iters,
                      bool record_weights = false);

}  // namespace saflab
