#include "saflab/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "saflab/errors.hpp"
#include "saflab/kernels.hpp"

namespace saflab {

void AlgoConfig::validate() const {
  if (filter_len < 1) throw config_error("algo: filter_len must be >= 1");
  if (n_subbands < 1) throw config_error("algo: n_subbands must be >= 1");
  if (reuse_depth < 1) throw config_error("algo: reuse_depth must be >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw config_error("algo: alpha must be in (0, 1]");
  }
  // mu = 0 is admitted for the degenerate no-adaptation checks.
  if (!(step_size >= 0.0)) throw config_error("algo: step_size must be >= 0");
  if (!(regularizer >= 0.0)) {
    throw config_error("algo: regularizer must be >= 0");
  }
}

std::vector<double> beta_weights(double alpha, int p_depth) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw config_error("beta_weights: alpha must be in (0, 1]");
  }
  if (p_depth < 1) throw config_error("beta_weights: P must be >= 1");
  std::vector<double> beta(p_depth);
  double power = 1.0;
  double sum = 0.0;
  for (int p = 0; p < p_depth; ++p) {
    beta[p] = power;
    sum += power;
    power *= alpha;
  }
  for (double& b : beta) b /= sum;
  return beta;
}

AdaptiveState make_adaptive_state(const AlgoConfig& cfg,
                                  const FilterBank& fb) {
  cfg.validate();
  if (fb.n_subbands != cfg.n_subbands) {
    throw dimension_error("adaptive: filter bank and config disagree on N");
  }
  AdaptiveState st;
  st.weight_history.assign(cfg.reuse_depth,
                           std::vector<double>(cfg.filter_len, 0.0));
  st.input_window.assign(cfg.filter_len + fb.filter_len - 1, 0.0);
  st.desired_window.assign(fb.filter_len, 0.0);
  st.scratch_regressors = Matrix(cfg.filter_len, cfg.n_subbands);
  st.scratch_desired.assign(cfg.n_subbands, 0.0);
  st.scratch_combined.assign(cfg.filter_len, 0.0);
  st.scratch_beta = beta_weights(cfg.alpha, cfg.reuse_depth);
  return st;
}

namespace {

// Pushes `fresh` (oldest first) into a newest-first delay line.
void push_samples(std::vector<double>& window, std::span<const double> fresh) {
  const std::size_t n = fresh.size();
  const std::size_t len = window.size();
  if (n >= len) {
    for (std::size_t i = 0; i < len; ++i) window[i] = fresh[n - 1 - i];
    return;
  }
  std::move_backward(window.begin(), window.end() - n, window.end());
  for (std::size_t i = 0; i < n; ++i) window[i] = fresh[n - 1 - i];
}

}  // namespace

void prime_windows(AdaptiveState& state, double input_sample,
                   double desired_sample) {
  push_samples(state.input_window, std::span<const double>(&input_sample, 1));
  push_samples(state.desired_window,
               std::span<const double>(&desired_sample, 1));
}

StepOutput step(AdaptiveState& state, const AlgoConfig& cfg,
                const FilterBank& fb, std::span<const double> new_inputs,
                std::span<const double> new_desired) {
  const std::size_t n = cfg.n_subbands;
  const std::size_t m = cfg.filter_len;
  if (new_inputs.size() != n || new_desired.size() != n) {
    throw dimension_error("step: expected exactly N new input and desired samples");
  }

  push_samples(state.input_window, new_inputs);
  push_samples(state.desired_window, new_desired);

  subband_regressors_into(fb, state.input_window, state.scratch_regressors);
  subband_desired_into(fb, state.desired_window, state.scratch_desired);
  const Matrix& u_mat = state.scratch_regressors;

  // Reuse-combined weights w_bar = sum_p beta_p w(k-p).
  if (state.scratch_beta.size() != std::size_t(cfg.reuse_depth)) {
    state.scratch_beta = beta_weights(cfg.alpha, cfg.reuse_depth);
  }
  const std::vector<double>& beta = state.scratch_beta;
  std::vector<double>& wbar = state.scratch_combined;
  std::fill(wbar.begin(), wbar.end(), 0.0);
  for (int p = 0; p < cfg.reuse_depth; ++p) {
    kern::axpy(beta[p], state.weight_history[p].data(), wbar.data(), m);
  }

  StepOutput out;
  out.subband_errors.resize(n);
  out.decimated_errors.resize(n);
  out.new_weights = wbar;
  const std::vector<double>& w_now = state.weight_history.front();
  for (std::size_t i = 0; i < n; ++i) {
    const double* u = u_mat.col(i);
    double d = state.scratch_desired[i];
    double zeta = d - kern::dot(u, wbar.data(), m);
    out.subband_errors[i] = zeta;
    out.decimated_errors[i] = d - kern::dot(u, w_now.data(), m);
    double denom = kern::sumsq(u, m) + cfg.regularizer;
    if (denom == 0.0) {
      throw numeric_error(
          "step: zero-norm subband regressor with epsilon = 0 (subband " +
          std::to_string(i) + ")");
    }
    kern::axpy(cfg.step_size * zeta / denom, u, out.new_weights.data(), m);
  }

  // Rotate the history: w(k+1) becomes the head.
  std::rotate(state.weight_history.begin(), state.weight_history.end() - 1,
              state.weight_history.end());
  state.weight_history.front() = out.new_weights;
  state.iteration += 1;
  return out;
}

TrialResult run_trial(const AlgoConfig& cfg, const FilterBank& fb,
                      const TrialSignals& signals, int64_t n_iters,
                      bool record_weights) {
  cfg.validate();
  const std::size_t m = cfg.filter_len;
  const std::size_t n = cfg.n_subbands;
  if (signals.w_o.size() != m) {
    throw dimension_error("run_trial: w_o length != filter_len");
  }
  if (!(signals.sigma_eta_sq >= 0.0)) {
    throw config_error("run_trial: sigma_eta_sq must be >= 0");
  }

  AdaptiveState state = make_adaptive_state(cfg, fb);
  InputStream input(signals.input, signals.input_rng);
  RngStream noise = signals.noise_rng;
  const double sigma = std::sqrt(signals.sigma_eta_sq);

  TrialResult result;
  result.sq_deviation.resize(n_iters);
  if (record_weights) result.weights = Matrix(n_iters, m);

  std::vector<double> fullband(m, 0.0);  // newest first, length M
  std::vector<double> xs(n), ds(n);
  std::vector<double> diff(m);

  // Prime the delay lines with stationary signal (weights stay zero): the
  // window length plus slack for the AR transient to die out.
  const int64_t warmup = int64_t(state.input_window.size()) + 50;
  for (int64_t t = 0; t < warmup; ++t) {
    double x = input.next();
    std::move_backward(fullband.begin(), fullband.end() - 1, fullband.end());
    fullband[0] = x;
    double eta = (sigma > 0.0) ? sigma * noise.gaussian() : 0.0;
    double d = kern::dot(fullband.data(), signals.w_o.data(), m) + eta;
    prime_windows(state, x, d);
  }

  for (int64_t k = 0; k < n_iters; ++k) {
    const std::vector<double>& w = state.weights();
    for (std::size_t i = 0; i < m; ++i) diff[i] = signals.w_o[i] - w[i];
    double dev = kern::sumsq(diff.data(), m);
    result.sq_deviation[k] = dev;
    if (record_weights) {
      for (std::size_t i = 0; i < m; ++i) result.weights(k, i) = w[i];
    }
    if (!std::isfinite(dev) || dev > 1e12) {
      result.diverged = true;
      result.diverged_at = k;
      for (int64_t kk = k; kk < n_iters; ++kk) {
        result.sq_deviation[kk] = dev;
      }
      break;
    }

    for (std::size_t j = 0; j < n; ++j) {
      double x = input.next();
      std::move_backward(fullband.begin(), fullband.end() - 1, fullband.end());
      fullband[0] = x;
      xs[j] = x;
      double eta = (sigma > 0.0) ? sigma * noise.gaussian() : 0.0;
      ds[j] = kern::dot(fullband.data(), signals.w_o.data(), m) + eta;
    }
    step(state, cfg, fb, xs, ds);
  }
  return result;
}

}  // namespace saflab
