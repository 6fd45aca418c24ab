// saflab: subband adaptive filter laboratory.
//
// Subcommands: design, simulate, predict, compare, sweep, reproduce.
// Exit codes: 0 ok, 2 config error, 3 numeric/instability error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "saflab/errors.hpp"
#include "saflab/harness.hpp"
#include "saflab/io.hpp"
#include "saflab/kernels.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string outdir = ".";
  bool have_seed_override = false;
  uint64_t seed_override = 0;
  bool moment_cache = true;
  std::string cache_dir;
  std::string noise_term;
};

saflab::ScenarioConfig load_scenario(const CommonOpts& opts) {
  std::ifstream in(opts.config_path);
  if (!in) {
    throw saflab::config_error("cannot open config file " + opts.config_path);
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw saflab::config_error(std::string("config is not valid JSON: ") +
                               e.what());
  }
  saflab::ScenarioConfig sc = saflab::scenario_from_json(j);
  if (opts.have_seed_override) sc.seed = opts.seed_override;
  if (!opts.noise_term.empty()) {
    sc.noise_variant = saflab::parse_noise_variant(opts.noise_term);
  }
  return sc;
}

saflab::MomentCache make_cache(const CommonOpts& opts) {
  if (!opts.moment_cache) return saflab::MomentCache();
  fs::path dir = opts.cache_dir.empty()
                     ? fs::path(opts.outdir) / "moments_cache"
                     : fs::path(opts.cache_dir);
  return saflab::MomentCache(dir);
}

void write_manifest(const CommonOpts& opts, const std::string& subcommand,
                    const saflab::ScenarioConfig& sc) {
  json manifest;
  manifest["subcommand"] = subcommand;
  manifest["config"] = saflab::scenario_to_json(sc);
  manifest["simd"] = saflab::kern::isa_name(saflab::kern::active_isa());
  saflab::write_json(fs::path(opts.outdir) / "manifest.json", manifest);
}

saflab::FilterBank scenario_filterbank(const saflab::ScenarioConfig& sc) {
  return saflab::design_cmfb(sc.algo.n_subbands, sc.resolved_fb_len());
}

std::shared_ptr<const saflab::MomentSet> scenario_moments(
    const saflab::ScenarioConfig& sc, saflab::MomentCache& cache,
    const saflab::FilterBank& fb) {
  return cache.get_or_estimate(fb, sc.input, sc.algo.regularizer,
                               sc.algo.filter_len, sc.moment_samples,
                               sc.moment_seed);
}

int run(int argc, char** argv) {
  CLI::App app{"saflab: subband adaptive filter laboratory"};
  app.require_subcommand(1);

  CommonOpts opts;

  // design
  auto* design = app.add_subcommand("design", "design a filter bank, write CSV");
  int design_n = 8;
  int design_len = 64;
  std::string design_out;
  design->add_option("--n", design_n, "number of subbands")->required();
  design->add_option("--len", design_len, "prototype length")->required();
  design->add_option("--out", design_out, "output CSV path");
  design->add_option("--outdir", opts.outdir, "output directory");

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opts.config_path, "scenario config JSON")
        ->required();
    cmd->add_option("--outdir", opts.outdir, "output directory");
    cmd->add_option("--seed", opts.seed_override, "override the config seed")
        ->each([&](const std::string&) { opts.have_seed_override = true; });
    cmd->add_flag("!--no-moment-cache", opts.moment_cache,
                  "disable the on-disk moment cache");
    cmd->add_option("--cache-dir", opts.cache_dir,
                    "moment cache directory (default <outdir>/moments_cache)");
    cmd->add_option("--noise-term", opts.noise_term,
                    "noise-term variant: exact|diagonal");
  };

  auto* simulate = app.add_subcommand("simulate", "ensemble simulation only");
  add_common(simulate);
  std::string trajectory_out;
  simulate->add_option("--trajectory", trajectory_out,
                       "also write the trial-0 weight trajectory CSV");

  auto* predict = app.add_subcommand("predict", "theory curves only");
  add_common(predict);

  auto* compare = app.add_subcommand("compare", "simulation vs theory");
  add_common(compare);

  auto* sweep = app.add_subcommand("sweep", "steady-state MSD vs step size");
  add_common(sweep);
  std::vector<double> sweep_mus;
  sweep->add_option("--mus", sweep_mus,
                    "step sizes (default 0.1 0.2 .. 1.0)");

  auto* reproduce = app.add_subcommand("reproduce", "run a preset experiment");
  std::string figure_id;
  reproduce->add_option("figure", figure_id, "figure id (fig2..fig7)")
      ->required();
  reproduce->add_option("--outdir", opts.outdir, "output directory");
  reproduce->add_flag("!--no-moment-cache", opts.moment_cache,
                      "disable the on-disk moment cache");
  reproduce->add_option("--cache-dir", opts.cache_dir,
                        "moment cache directory");

  CLI11_PARSE(app, argc, argv);

  fs::create_directories(opts.outdir);

  if (design->parsed()) {
    saflab::FilterBank fb = saflab::design_cmfb(design_n, design_len);
    fs::path out = design_out.empty()
                       ? fs::path(opts.outdir) / "filters.csv"
                       : fs::path(design_out);
    saflab::write_filter_csv(out, fb);
    double residual = saflab::power_complementarity_residual(fb);
    std::fprintf(stderr,
                 "designed %d filters of length %d; "
                 "power-complementarity residual %.3g\n",
                 fb.n_subbands, fb.filter_len, residual);
    json manifest;
    manifest["subcommand"] = "design";
    manifest["n_subbands"] = design_n;
    manifest["filter_len"] = design_len;
    manifest["out"] = out.string();
    saflab::write_json(fs::path(opts.outdir) / "manifest.json", manifest);
    return 0;
  }

  if (simulate->parsed()) {
    saflab::ScenarioConfig sc = load_scenario(opts);
    write_manifest(opts, "simulate", sc);
    saflab::SimulationResult res = saflab::run_simulation(sc);
    saflab::write_msd_csv(fs::path(opts.outdir) / "msd_sim.csv",
                          &res.msd_sim_db, nullptr);
    if (!trajectory_out.empty()) {
      saflab::FilterBank fb = scenario_filterbank(sc);
      saflab::TrialSignals sig;
      sig.input = sc.input;
      sig.input_rng =
          saflab::RngStream(sc.seed, saflab::stream_purpose::trial_input(0));
      sig.noise_rng =
          saflab::RngStream(sc.seed, saflab::stream_purpose::trial_noise(0));
      sig.sigma_eta_sq = res.sigma_eta_sq;
      sig.w_o = res.w_o;
      saflab::TrialResult tr =
          saflab::run_trial(sc.algo, fb, sig, sc.n_iters, true);
      saflab::write_trajectory_csv(fs::path(trajectory_out), tr);
    }
    return 0;
  }

  if (predict->parsed()) {
    saflab::ScenarioConfig sc = load_scenario(opts);
    write_manifest(opts, "predict", sc);
    saflab::MomentCache cache = make_cache(opts);
    saflab::FilterBank fb = scenario_filterbank(sc);
    auto ms = scenario_moments(sc, cache, fb);

    saflab::StabilityReport report = saflab::stability_report(*ms, sc.algo);
    saflab::write_json(fs::path(opts.outdir) / "stability.json",
                       saflab::stability_to_json(report));
    if (!(report.rho_f < 1.0)) {
      throw saflab::numeric_error(
          "mean-square unstable: rho(F) ~= " + std::to_string(report.rho_f) +
          " >= 1 for mu=" + std::to_string(sc.algo.step_size));
    }

    std::vector<double> w_o = saflab::resolve_unknown_system(sc);
    double sigma_sq = saflab::resolve_noise_variance(sc, w_o);

    saflab::MeanTrajectory mean =
        saflab::mean_trajectory(*ms, sc.algo, w_o, sc.n_iters);
    saflab::MsdModel model =
        saflab::build_f(*ms, sc.algo, sigma_sq, w_o, sc.noise_variant);
    saflab::MsdSeries series = saflab::msd_transient(model, sc.n_iters);
    std::vector<double> theory_db(series.msd.size());
    for (std::size_t k = 0; k < series.msd.size(); ++k) {
      theory_db[k] = saflab::to_db(series.msd[k]);
    }
    saflab::write_theory_msd_csv(fs::path(opts.outdir) / "msd_theory.csv",
                                 theory_db);
    saflab::Matrix weights_theory(mean.ew.size(), sc.algo.filter_len);
    for (std::size_t k = 0; k < mean.ew.size(); ++k) {
      for (int i = 0; i < sc.algo.filter_len; ++i) {
        weights_theory(k, i) = mean.ew[k][i];
      }
    }
    saflab::write_theory_weights_csv(
        fs::path(opts.outdir) / "weights_theory.csv", weights_theory);
    return 0;
  }

  if (compare->parsed()) {
    saflab::ScenarioConfig sc = load_scenario(opts);
    write_manifest(opts, "compare", sc);
    saflab::MomentCache cache = make_cache(opts);
    saflab::ComparisonResult res = saflab::run_scenario(sc, &cache);
    saflab::write_msd_csv(fs::path(opts.outdir) / "msd_compare.csv",
                          &res.msd_sim_db, &res.msd_theory_db);
    if (res.weights_sim.size() > 0) {
      saflab::write_weights_csv(fs::path(opts.outdir) / "weights.csv",
                                res.weights_sim, res.weights_theory);
    }
    json summary;
    summary["max_abs_gap_db"] = res.max_abs_gap_db;
    summary["steady_sim_db"] = res.steady_sim_db;
    summary["steady_theory_db"] = res.steady_theory_db;
    summary["sigma_eta_sq"] = res.sigma_eta_sq;
    summary["rho_xi"] = res.rho_xi;
    summary["sim_diverged"] = res.sim_diverged;
    summary["theory_diverged"] = res.theory_diverged;
    saflab::write_json(fs::path(opts.outdir) / "summary.json", summary);
    return 0;
  }

  if (sweep->parsed()) {
    saflab::ScenarioConfig sc = load_scenario(opts);
    write_manifest(opts, "sweep", sc);
    saflab::MomentCache cache = make_cache(opts);
    if (sweep_mus.empty()) {
      for (int i = 1; i <= 10; ++i) sweep_mus.push_back(0.1 * i);
    }
    auto points = saflab::steady_state_sweep(sc, sweep_mus, &cache);
    saflab::write_sweep_csv(fs::path(opts.outdir) / "sweep.csv", points);
    return 0;
  }

  if (reproduce->parsed()) {
    saflab::MomentCache cache = make_cache(opts);
    saflab::FigureResult fig = saflab::reproduce(figure_id, &cache);
    saflab::write_figure_outputs(fig, opts.outdir);
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const saflab::numeric_error& e) {
    std::fprintf(stderr, "error: numeric: %s\n", e.what());
    return 3;
  } catch (const saflab::config_error& e) {
    std::fprintf(stderr, "error: config: %s\n", e.what());
    return 2;
  } catch (const saflab::dimension_error& e) {
    std::fprintf(stderr, "error: config: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
