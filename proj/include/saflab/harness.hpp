#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "saflab/adaptive.hpp"
#include "saflab/moments.hpp"
#include "saflab/theory.hpp"

namespace saflab {

// 10 log10(x); -inf for x <= 0.
double to_db(double x);

struct WoSpec {
  enum class Kind { random, explicit_values, fig2_preset };
  Kind kind = Kind::random;
  std::vector<double> values;
};

// The 16-tap preset system used by the mean-behavior experiment.
std::span<const double> fig2_unknown_system();

// All knobs of one experiment.
struct ScenarioConfig {
  AlgoConfig algo;
  InputModel input;
  double snr_db = 10.0;
  int64_t trials = 200;
  int64_t n_iters = 2000;
  uint64_t seed = 1;
  WoSpec wo;
  int fb_len = 0;  // L; 0 means the 8N default
  int64_t moment_samples = 10000;
  uint64_t moment_seed = 1000003;
  int64_t steady_state_window = 200;
  NoiseTermVariant noise_variant = NoiseTermVariant::exact;
  bool record_weights = true;

  int resolved_fb_len() const {
    return fb_len > 0 ? fb_len : 8 * algo.n_subbands;
  }
  void validate() const;
};

struct ComparisonResult {
  std::vector<double> msd_sim_db;
  std::vector<double> msd_theory_db;
  double max_abs_gap_db = 0.0;  // over k >= burn-in (50)
  double steady_sim_db = 0.0;   // final-window mean, linear, then dB
  double steady_theory_db = 0.0;
  Matrix weights_sim;     // n_iters x M ensemble means (when recorded)
  Matrix weights_theory;  // n_iters x M from the mean recursion
  std::vector<double> mean_final_weights;  // ensemble mean of w(n_iters-1)
  std::vector<double> w_o;
  double sigma_eta_sq = 0.0;
  double rho_xi = 0.0;
  bool sim_diverged = false;
  bool theory_diverged = false;
  int64_t burn_in = 50;
};

// In-memory (and optionally on-disk) cache of moment estimates, keyed by
// content hash; mu, alpha, P and the noise level do not enter the key
// because the moments do not depend on them.
class MomentCache {
 public:
  MomentCache() = default;
  explicit MomentCache(std::filesystem::path disk_dir);

  std::shared_ptr<const MomentSet> get_or_estimate(const FilterBank& fb,
                                                   const InputModel& input,
                                                   double eps, int m,
                                                   int64_t samples,
                                                   uint64_t seed);

 private:
  std::map<uint64_t, std::shared_ptr<const MomentSet>> mem_;
  std::optional<std::filesystem::path> disk_dir_;
};

// Resolution rules shared by all runners: the unknown system comes from the
// wo spec (random draws use the scenario seed), the noise variance from an
// empirical power calibration at the configured SNR.
std::vector<double> resolve_unknown_system(const ScenarioConfig& sc);
double resolve_noise_variance(const ScenarioConfig& sc,
                              std::span<const double> w_o);

struct SimulationResult {
  std::vector<double> msd_sim_db;
  std::vector<double> msd_sim_linear;  // trial-averaged, before the dB map
  Matrix weights_sim;                  // ensemble means (when recorded)
  std::vector<double> mean_final_weights;
  std::vector<double> w_o;
  double sigma_eta_sq = 0.0;
  bool diverged = false;
};

// Ensemble simulation only (no theory pipeline).
SimulationResult run_simulation(const ScenarioConfig& sc);

// Runs the ensemble simulation and the matching theory pipeline and
// compares them. Deterministic given the config; trial execution order does
// not affect the result (per-trial RNG streams, ordered reduction).
ComparisonResult run_scenario(const ScenarioConfig& sc,
                              MomentCache* cache = nullptr);

struct SweepPoint {
  double mu = 0.0;
  double steady_sim_db = 0.0;
  double steady_theory_db = 0.0;  // via the steady-state resolvent
  bool divergent = false;
};

// Steady-state MSD versus step size: theory from the resolvent expression,
// simulation from the mean of the final steady_state_window iterations.
std::vector<SweepPoint> steady_state_sweep(const ScenarioConfig& base,
                                           std::span<const double> mu_values,
                                           MomentCache* cache = nullptr);

struct CurveRun {
  std::string label;
  ScenarioConfig config;
  ComparisonResult result;
};

struct FigureResult {
  std::string figure;
  std::vector<CurveRun> curves;       // empty for the sweep figure
  std::vector<SweepPoint> sweep;      // fig7 only
  ScenarioConfig sweep_base;          // fig7 only
};

const std::vector<std::string>& known_figures();

// Preset experiment configurations; see README for the parameter tables.
FigureResult reproduce(const std::string& figure_id,
                       MomentCache* cache = nullptr);

// Writes one CSV per curve (or the sweep CSV) plus manifest.json.
void write_figure_outputs(const FigureResult& fig,
                          const std::filesystem::path& outdir);

// Number of workers for trial fan-out: SAFLAB_WORKERS if set, else
// hardware_concurrency.
int worker_count();

}  // namespace saflab
