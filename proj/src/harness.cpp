#include "saflab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

#include "saflab/errors.hpp"
#include "saflab/kernels.hpp"

namespace saflab {

double to_db(double x) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(x);
}

std::span<const double> fig2_unknown_system() {
  static const std::vector<double> kW = {
      0.51, -0.04, 0.02, 0.09, 0.22,  0.20, 0.13, -0.48,
      -0.39, 0.32, -0.11, -0.30, 0.25, -0.24, 0.6, -0.01};
  return kW;
}

void ScenarioConfig::validate() const {
  algo.validate();
  input.validate();
  if (trials < 1) throw config_error("scenario: trials must be >= 1");
  if (n_iters < 1) throw config_error("scenario: iters must be >= 1");
  if (steady_state_window < 1 || steady_state_window > n_iters) {
    throw config_error("scenario: steady_state_window must be in [1, iters]");
  }
  if (moment_samples < 100) {
    throw config_error("scenario: moment_samples must be >= 100");
  }
  if (wo.kind == WoSpec::Kind::explicit_values &&
      wo.values.size() != std::size_t(algo.filter_len)) {
    throw config_error("scenario: explicit wo length != M");
  }
  if (wo.kind == WoSpec::Kind::fig2_preset && algo.filter_len != 16) {
    throw config_error("scenario: the fig2 preset system requires M = 16");
  }
  int len = resolved_fb_len();
  if (len < 2 || len % (2 * algo.n_subbands) != 0) {
    throw config_error("scenario: fb_len must be a positive multiple of 2N");
  }
}

int worker_count() {
  if (const char* env = std::getenv("SAFLAB_WORKERS")) {
    int w = std::atoi(env);
    if (w >= 1) return w;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? int(hw) : 1;
}

namespace {

// Runs fn(i) for i in [0, count) across the worker pool. Each index writes
// only its own slot, so scheduling order cannot affect results.
template <typename Fn>
void parallel_for(int64_t count, const Fn& fn) {
  int workers = std::min<int64_t>(worker_count(), count);
  if (workers <= 1) {
    for (int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int64_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        int64_t i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

std::vector<double> resolve_unknown_system(const ScenarioConfig& sc) {
  switch (sc.wo.kind) {
    case WoSpec::Kind::explicit_values:
      return gen_unknown_system(sc.algo.filter_len,
                                RngStream(sc.seed, stream_purpose::kUnknownSystem),
                                UnknownSystemKind::explicit_values, sc.wo.values)
          .coefficients;
    case WoSpec::Kind::fig2_preset: {
      auto w = fig2_unknown_system();
      return {w.begin(), w.end()};
    }
    default:
      return gen_unknown_system(sc.algo.filter_len,
                                RngStream(sc.seed, stream_purpose::kUnknownSystem),
                                UnknownSystemKind::random)
          .coefficients;
  }
}

double resolve_noise_variance(const ScenarioConfig& sc,
                              std::span<const double> w_o) {
  double power = measure_desired_power(
      sc.input, w_o, RngStream(sc.seed, stream_purpose::kCalibration));
  return noise_variance_for_snr(power, sc.snr_db);
}

MomentCache::MomentCache(std::filesystem::path disk_dir)
    : disk_dir_(std::move(disk_dir)) {}

std::shared_ptr<const MomentSet> MomentCache::get_or_estimate(
    const FilterBank& fb, const InputModel& input, double eps, int m,
    int64_t samples, uint64_t seed) {
  uint64_t key = moments_cache_key(fb, input, eps, m, samples, seed);
  if (auto it = mem_.find(key); it != mem_.end()) return it->second;

  std::filesystem::path file;
  if (disk_dir_) {
    char name[64];
    std::snprintf(name, sizeof(name), "moments_%016llx.bin",
                  static_cast<unsigned long long>(key));
    file = *disk_dir_ / name;
    if (auto loaded = load_moments(file)) {
      auto ptr = std::make_shared<const MomentSet>(std::move(*loaded));
      mem_[key] = ptr;
      return ptr;
    }
  }

  auto ptr = std::make_shared<const MomentSet>(
      estimate_moments(fb, input, eps, m, samples, seed));
  mem_[key] = ptr;
  if (disk_dir_) {
    std::error_code ec;
    std::filesystem::create_directories(*disk_dir_, ec);
    if (!ec) save_moments(file, *ptr);
  }
  return ptr;
}

namespace {

SimulationResult simulate_ensemble(const ScenarioConfig& sc,
                                   const FilterBank& fb,
                                   std::vector<double> w_o, double sigma_sq) {
  const int m = sc.algo.filter_len;
  const int64_t n_iters = sc.n_iters;

  // Per-trial results land in their own slots, then a single ordered
  // reduction, so any execution order gives identical bytes.
  std::vector<TrialResult> slots(sc.trials);
  parallel_for(sc.trials, [&](int64_t t) {
    TrialSignals sig;
    sig.input = sc.input;
    sig.input_rng = RngStream(sc.seed, stream_purpose::trial_input(t));
    sig.noise_rng = RngStream(sc.seed, stream_purpose::trial_noise(t));
    sig.sigma_eta_sq = sigma_sq;
    sig.w_o = w_o;
    slots[t] = run_trial(sc.algo, fb, sig, sc.n_iters, sc.record_weights);
  });

  SimulationResult out;
  out.w_o = std::move(w_o);
  out.sigma_eta_sq = sigma_sq;
  std::vector<double> sum_dev(n_iters, 0.0);
  Matrix sum_w;
  if (sc.record_weights) sum_w = Matrix(n_iters, m);
  std::vector<double> sum_final(m, 0.0);
  for (int64_t t = 0; t < sc.trials; ++t) {
    const TrialResult& tr = slots[t];
    if (tr.diverged) out.diverged = true;
    kern::axpy(1.0, tr.sq_deviation.data(), sum_dev.data(), n_iters);
    if (sc.record_weights) {
      kern::axpy(1.0, tr.weights.data(), sum_w.data(), sum_w.size());
      for (int i = 0; i < m; ++i) sum_final[i] += tr.weights(n_iters - 1, i);
    }
  }
  const double inv_trials = 1.0 / double(sc.trials);
  kern::scale(inv_trials, sum_dev.data(), sum_dev.size());
  out.msd_sim_db.resize(n_iters);
  for (int64_t k = 0; k < n_iters; ++k) out.msd_sim_db[k] = to_db(sum_dev[k]);
  out.msd_sim_linear = std::move(sum_dev);
  if (sc.record_weights) {
    kern::scale(inv_trials, sum_w.data(), sum_w.size());
    out.weights_sim = std::move(sum_w);
    for (int i = 0; i < m; ++i) sum_final[i] *= inv_trials;
    out.mean_final_weights = std::move(sum_final);
  }
  return out;
}

}  // namespace

SimulationResult run_simulation(const ScenarioConfig& sc) {
  sc.validate();
  FilterBank fb = design_cmfb(sc.algo.n_subbands, sc.resolved_fb_len());
  std::vector<double> w_o = resolve_unknown_system(sc);
  double sigma_sq = resolve_noise_variance(sc, w_o);
  return simulate_ensemble(sc, fb, std::move(w_o), sigma_sq);
}

ComparisonResult run_scenario(const ScenarioConfig& sc, MomentCache* cache) {
  sc.validate();
  const int m = sc.algo.filter_len;
  const int64_t n_iters = sc.n_iters;

  FilterBank fb = design_cmfb(sc.algo.n_subbands, sc.resolved_fb_len());
  ComparisonResult out;
  out.w_o = resolve_unknown_system(sc);
  out.sigma_eta_sq = resolve_noise_variance(sc, out.w_o);

  MomentCache local;
  MomentCache& mc = cache != nullptr ? *cache : local;
  std::shared_ptr<const MomentSet> ms =
      mc.get_or_estimate(fb, sc.input, sc.algo.regularizer, m,
                         sc.moment_samples, sc.moment_seed);

  // Theory side.
  MeanTrajectory mean = mean_trajectory(*ms, sc.algo, out.w_o, n_iters);
  out.rho_xi = mean.rho_xi;
  out.weights_theory = Matrix(n_iters, m);
  for (int64_t k = 0; k < n_iters; ++k) {
    for (int i = 0; i < m; ++i) out.weights_theory(k, i) = mean.ew[k][i];
  }
  MsdModel model =
      build_f(*ms, sc.algo, out.sigma_eta_sq, out.w_o, sc.noise_variant);
  MsdSeries theory = msd_transient(model, n_iters);
  out.theory_diverged = theory.diverged;
  out.msd_theory_db.resize(n_iters,
                           std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < theory.msd.size(); ++k) {
    out.msd_theory_db[k] = to_db(theory.msd[k]);
  }

  // Simulation side.
  SimulationResult sim =
      simulate_ensemble(sc, fb, out.w_o, out.sigma_eta_sq);
  out.msd_sim_db = std::move(sim.msd_sim_db);
  out.weights_sim = std::move(sim.weights_sim);
  out.mean_final_weights = std::move(sim.mean_final_weights);
  out.sim_diverged = sim.diverged;

  // Burn-in-excluded gap and final-window steady levels (linear averages).
  out.max_abs_gap_db = 0.0;
  for (int64_t k = out.burn_in; k < n_iters; ++k) {
    double gap = std::abs(out.msd_sim_db[k] - out.msd_theory_db[k]);
    if (!std::isfinite(gap)) gap = std::numeric_limits<double>::infinity();
    out.max_abs_gap_db = std::max(out.max_abs_gap_db, gap);
  }
  const int64_t w0 = n_iters - sc.steady_state_window;
  double acc_sim = 0.0, acc_thr = 0.0;
  for (int64_t k = w0; k < n_iters; ++k) {
    acc_sim += sim.msd_sim_linear[k];
    acc_thr += (std::size_t(k) < theory.msd.size()) ? theory.msd[k]
               : std::numeric_limits<double>::infinity();
  }
  out.steady_sim_db = to_db(acc_sim / double(sc.steady_state_window));
  out.steady_theory_db = to_db(acc_thr / double(sc.steady_state_window));
  return out;
}

std::vector<SweepPoint> steady_state_sweep(const ScenarioConfig& base,
                                           std::span<const double> mu_values,
                                           MomentCache* cache) {
  base.validate();
  const int m = base.algo.filter_len;
  FilterBank fb = design_cmfb(base.algo.n_subbands, base.resolved_fb_len());
  std::vector<double> w_o = resolve_unknown_system(base);
  double sigma_sq = resolve_noise_variance(base, w_o);

  MomentCache local;
  MomentCache& mc = cache != nullptr ? *cache : local;
  std::shared_ptr<const MomentSet> ms =
      mc.get_or_estimate(fb, base.input, base.algo.regularizer, m,
                         base.moment_samples, base.moment_seed);

  std::vector<SweepPoint> points;
  points.reserve(mu_values.size());
  for (double mu : mu_values) {
    SweepPoint pt;
    pt.mu = mu;
    ScenarioConfig sc = base;
    sc.algo.step_size = mu;
    sc.record_weights = false;

    if (mu == 0.0) {
      // No adaptation: both sides sit at ||w_o||^2.
      double dev = kern::sumsq(w_o.data(), w_o.size());
      pt.steady_sim_db = to_db(dev);
      pt.steady_theory_db = to_db(dev);
      points.push_back(pt);
      continue;
    }

    MsdModel model = build_f(*ms, sc.algo, sigma_sq, w_o, sc.noise_variant);
    try {
      SteadyState ss = msd_steady_state(model);
      pt.steady_theory_db = to_db(ss.msd);
    } catch (const numeric_error&) {
      pt.divergent = true;
      pt.steady_theory_db = std::numeric_limits<double>::quiet_NaN();
    }

    if (!pt.divergent) {
      SimulationResult sim = simulate_ensemble(sc, fb, w_o, sigma_sq);
      double acc = 0.0;
      int64_t w0 = sc.n_iters - sc.steady_state_window;
      for (int64_t k = w0; k < sc.n_iters; ++k) acc += sim.msd_sim_linear[k];
      pt.steady_sim_db = to_db(acc / double(sc.steady_state_window));
    } else {
      pt.steady_sim_db = std::numeric_limits<double>::quiet_NaN();
    }
    points.push_back(pt);
  }
  return points;
}

namespace {

ScenarioConfig base_preset(uint64_t seed) {
  ScenarioConfig sc;
  sc.algo.filter_len = 16;
  sc.algo.n_subbands = 8;
  sc.algo.reuse_depth = 3;
  sc.algo.alpha = 1.0;
  sc.algo.step_size = 0.5;
  sc.algo.regularizer = 1e-3;
  sc.input.source_kind = InputModel::Source::gaussian;
  sc.input.ar_pole = 0.9;
  sc.snr_db = 10.0;
  sc.trials = 200;
  sc.n_iters = 2000;
  sc.seed = seed;
  sc.wo.kind = WoSpec::Kind::random;
  sc.moment_samples = 10000;
  sc.record_weights = false;
  return sc;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& known_figures() {
  static const std::vector<std::string> kIds = {
      "fig2", "fig3", "fig4a", "fig4b", "fig5a",
      "fig5b", "fig6a", "fig6b", "fig7"};
  return kIds;
}

FigureResult reproduce(const std::string& figure_id, MomentCache* cache) {
  MomentCache local;
  MomentCache& mc = cache != nullptr ? *cache : local;
  FigureResult fig;
  fig.figure = figure_id;

  if (figure_id == "fig2") {
    for (double alpha : {0.5, 1.0}) {
      ScenarioConfig sc = base_preset(0x5AF1AB02);
      sc.algo.alpha = alpha;
      sc.wo.kind = WoSpec::Kind::fig2_preset;
      sc.record_weights = true;
      fig.curves.push_back({"alpha" + fmt_double(alpha), sc,
                            run_scenario(sc, &mc)});
    }
  } else if (figure_id == "fig3") {
    for (double alpha : {0.25, 0.5, 1.0}) {
      ScenarioConfig sc = base_preset(0x5AF1AB03);
      sc.algo.alpha = alpha;
      fig.curves.push_back({"alpha" + fmt_double(alpha), sc,
                            run_scenario(sc, &mc)});
    }
  } else if (figure_id == "fig4a" || figure_id == "fig4b") {
    const bool high_snr = figure_id == "fig4b";
    for (int p : {1, 2, 3, 4}) {
      ScenarioConfig sc = base_preset(high_snr ? 0x5AF1AB4B : 0x5AF1AB4A);
      sc.algo.reuse_depth = p;
      sc.snr_db = high_snr ? 40.0 : 10.0;
      sc.n_iters = high_snr ? 20000 : 2000;
      std::string label = "P" + std::to_string(p);
      if (p == 1) label += "_NSAF";
      fig.curves.push_back({label, sc, run_scenario(sc, &mc)});
    }
  } else if (figure_id == "fig5a" || figure_id == "fig5b" ||
             figure_id == "fig6a" || figure_id == "fig6b") {
    const bool uniform = figure_id.back() == 'b';
    const bool four_bands = figure_id[3] == '6';
    for (double mu : {0.1, 0.4, 0.5}) {
      ScenarioConfig sc =
          base_preset(four_bands ? 0x5AF1AB06 : 0x5AF1AB05);
      sc.algo.step_size = mu;
      sc.algo.n_subbands = four_bands ? 4 : 8;
      if (uniform) sc.input.source_kind = InputModel::Source::uniform;
      fig.curves.push_back({"mu" + fmt_double(mu), sc, run_scenario(sc, &mc)});
    }
  } else if (figure_id == "fig7") {
    ScenarioConfig sc = base_preset(0x5AF1AB07);
    sc.algo.regularizer = 0.0;
    fig.sweep_base = sc;
    std::vector<double> mus;
    for (int i = 1; i <= 10; ++i) mus.push_back(0.1 * i);
    fig.sweep = steady_state_sweep(sc, mus, &mc);
  } else {
    throw config_error("unknown figure id '" + figure_id + "' (known: fig2, "
                       "fig3, fig4a, fig4b, fig5a, fig5b, fig6a, fig6b, fig7)");
  }
  return fig;
}

}  // namespace saflab
