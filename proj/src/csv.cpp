#include "saflab/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "saflab/errors.hpp"

namespace saflab {

namespace {

class CsvFile {
 public:
  explicit CsvFile(const std::filesystem::path& path)
      : f_(std::fopen(path.string().c_str(), "wb")) {
    if (f_ == nullptr) {
      throw config_error("cannot open output file " + path.string());
    }
  }
  ~CsvFile() {
    if (f_ != nullptr) std::fclose(f_);
  }
  CsvFile(const CsvFile&) = delete;
  CsvFile& operator=(const CsvFile&) = delete;

  void raw(const char* s) { std::fputs(s, f_); }
  void number(double v) { std::fprintf(f_, "%.9g", v); }
  void integer(long long v) { std::fprintf(f_, "%lld", v); }
  void comma() { std::fputc(',', f_); }
  void end_row() { std::fputc('\n', f_); }

 private:
  std::FILE* f_;
};

}  // namespace

void write_msd_csv(const std::filesystem::path& path,
                   const std::vector<double>* sim_db,
                   const std::vector<double>* theory_db) {
  CsvFile csv(path);
  csv.raw("k");
  if (sim_db != nullptr) csv.raw(",msd_sim_db");
  if (theory_db != nullptr) csv.raw(",msd_theory_db");
  csv.end_row();
  std::size_t rows = 0;
  if (sim_db != nullptr) rows = sim_db->size();
  if (theory_db != nullptr) rows = std::max(rows, theory_db->size());
  for (std::size_t k = 0; k < rows; ++k) {
    csv.integer(static_cast<long long>(k));
    if (sim_db != nullptr) {
      csv.comma();
      csv.number(k < sim_db->size() ? (*sim_db)[k] : NAN);
    }
    if (theory_db != nullptr) {
      csv.comma();
      csv.number(k < theory_db->size() ? (*theory_db)[k] : NAN);
    }
    csv.end_row();
  }
}

void write_theory_msd_csv(const std::filesystem::path& path,
                          const std::vector<double>& msd_db) {
  CsvFile csv(path);
  csv.raw("k,msd_db");
  csv.end_row();
  for (std::size_t k = 0; k < msd_db.size(); ++k) {
    csv.integer(static_cast<long long>(k));
    csv.comma();
    csv.number(msd_db[k]);
    csv.end_row();
  }
}

void write_theory_weights_csv(const std::filesystem::path& path,
                              const Matrix& theory) {
  CsvFile csv(path);
  csv.raw("k,coef_index,theory_mean");
  csv.end_row();
  for (std::size_t k = 0; k < theory.rows(); ++k) {
    for (std::size_t i = 0; i < theory.cols(); ++i) {
      csv.integer(static_cast<long long>(k));
      csv.comma();
      csv.integer(static_cast<long long>(i));
      csv.comma();
      csv.number(theory(k, i));
      csv.end_row();
    }
  }
}

void write_weights_csv(const std::filesystem::path& path, const Matrix& sim,
                       const Matrix& theory) {
  if (sim.rows() != theory.rows() || sim.cols() != theory.cols()) {
    throw dimension_error("write_weights_csv: sim/theory shape mismatch");
  }
  CsvFile csv(path);
  csv.raw("k,coef_index,sim_mean,theory_mean");
  csv.end_row();
  for (std::size_t k = 0; k < sim.rows(); ++k) {
    for (std::size_t i = 0; i < sim.cols(); ++i) {
      csv.integer(static_cast<long long>(k));
      csv.comma();
      csv.integer(static_cast<long long>(i));
      csv.comma();
      csv.number(sim(k, i));
      csv.comma();
      csv.number(theory(k, i));
      csv.end_row();
    }
  }
}

void write_sweep_csv(const std::filesystem::path& path,
                     const std::vector<SweepPoint>& points) {
  CsvFile csv(path);
  csv.raw("mu,steady_sim_db,steady_theory_db");
  csv.end_row();
  for (const SweepPoint& pt : points) {
    csv.number(pt.mu);
    csv.comma();
    csv.number(pt.steady_sim_db);
    csv.comma();
    csv.number(pt.steady_theory_db);
    csv.end_row();
  }
}

void write_filter_csv(const std::filesystem::path& path,
                      const FilterBank& fb) {
  CsvFile csv(path);
  csv.raw("subband_index,tap_index,value");
  csv.end_row();
  for (int i = 0; i < fb.n_subbands; ++i) {
    for (int l = 0; l < fb.filter_len; ++l) {
      csv.integer(i);
      csv.comma();
      csv.integer(l);
      csv.comma();
      csv.number(fb.filters[i][l]);
      csv.end_row();
    }
  }
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const TrialResult& trial) {
  CsvFile csv(path);
  csv.raw("k");
  for (std::size_t i = 0; i < trial.weights.cols(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), ",coef_%zu", i);
    csv.raw(buf);
  }
  csv.raw(",sq_deviation");
  csv.end_row();
  for (std::size_t k = 0; k < trial.weights.rows(); ++k) {
    csv.integer(static_cast<long long>(k));
    for (std::size_t i = 0; i < trial.weights.cols(); ++i) {
      csv.comma();
      csv.number(trial.weights(k, i));
    }
    csv.comma();
    csv.number(trial.sq_deviation[k]);
    csv.end_row();
  }
}

namespace {

const char* wo_kind_name(WoSpec::Kind k) {
  switch (k) {
    case WoSpec::Kind::explicit_values:
      return "explicit";
    case WoSpec::Kind::fig2_preset:
      return "fig2";
    default:
      return "random";
  }
}

}  // namespace

nlohmann::json scenario_to_json(const ScenarioConfig& sc) {
  nlohmann::json j;
  j["M"] = sc.algo.filter_len;
  j["N"] = sc.algo.n_subbands;
  j["P"] = sc.algo.reuse_depth;
  j["alpha"] = sc.algo.alpha;
  j["mu"] = sc.algo.step_size;
  j["epsilon"] = sc.algo.regularizer;
  j["snr_db"] = sc.snr_db;
  j["input"] = {{"kind", source_kind_name(sc.input.source_kind)},
                {"pole", sc.input.ar_pole}};
  j["trials"] = sc.trials;
  j["iters"] = sc.n_iters;
  j["seed"] = sc.seed;
  j["wo"]["kind"] = wo_kind_name(sc.wo.kind);
  if (sc.wo.kind == WoSpec::Kind::explicit_values) {
    j["wo"]["values"] = sc.wo.values;
  }
  j["L"] = sc.resolved_fb_len();
  j["moment_samples"] = sc.moment_samples;
  j["moment_seed"] = sc.moment_seed;
  j["steady_state_window"] = sc.steady_state_window;
  j["noise_term"] = noise_variant_name(sc.noise_variant);
  j["record_weights"] = sc.record_weights;
  return j;
}

namespace {

class FieldErrors {
 public:
  void add(const std::string& field, const std::string& msg) {
    messages_.push_back(field + ": " + msg);
  }
  bool empty() const { return messages_.empty(); }
  [[noreturn]] void raise() const {
    std::string all = "config schema violations:";
    for (const auto& m : messages_) all += "\n  " + m;
    throw config_error(all);
  }

 private:
  std::vector<std::string> messages_;
};

template <typename T>
bool fetch(const nlohmann::json& j, const char* field, T& out,
           FieldErrors& errs, bool required, const char* type_name) {
  if (!j.contains(field)) {
    if (required) errs.add(field, "missing required field");
    return false;
  }
  try {
    out = j.at(field).get<T>();
    return true;
  } catch (const nlohmann::json::exception&) {
    errs.add(field, std::string("expected ") + type_name);
    return false;
  }
}

}  // namespace

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  FieldErrors errs;
  ScenarioConfig sc;
  if (!j.is_object()) {
    errs.add("(root)", "config must be a JSON object");
    errs.raise();
  }

  fetch(j, "M", sc.algo.filter_len, errs, true, "integer");
  fetch(j, "N", sc.algo.n_subbands, errs, true, "integer");
  fetch(j, "P", sc.algo.reuse_depth, errs, true, "integer");
  fetch(j, "alpha", sc.algo.alpha, errs, true, "number");
  fetch(j, "mu", sc.algo.step_size, errs, true, "number");
  fetch(j, "epsilon", sc.algo.regularizer, errs, true, "number");
  fetch(j, "snr_db", sc.snr_db, errs, true, "number");
  fetch(j, "trials", sc.trials, errs, true, "integer");
  fetch(j, "iters", sc.n_iters, errs, true, "integer");
  fetch(j, "seed", sc.seed, errs, true, "integer");
  fetch(j, "moment_samples", sc.moment_samples, errs, true, "integer");

  if (j.contains("input") && j.at("input").is_object()) {
    std::string kind = "gaussian";
    fetch(j.at("input"), "kind", kind, errs, true, "string");
    try {
      sc.input.source_kind = parse_source_kind(kind);
    } catch (const config_error& e) {
      errs.add("input.kind", e.what());
    }
    fetch(j.at("input"), "pole", sc.input.ar_pole, errs, true, "number");
  } else {
    errs.add("input", "missing required object {kind, pole}");
  }

  if (j.contains("wo") && j.at("wo").is_object()) {
    std::string kind = "random";
    fetch(j.at("wo"), "kind", kind, errs, true, "string");
    if (kind == "random") {
      sc.wo.kind = WoSpec::Kind::random;
    } else if (kind == "explicit") {
      sc.wo.kind = WoSpec::Kind::explicit_values;
      fetch(j.at("wo"), "values", sc.wo.values, errs, true,
            "array of numbers");
    } else if (kind == "fig2") {
      sc.wo.kind = WoSpec::Kind::fig2_preset;
    } else {
      errs.add("wo.kind", "expected random|explicit|fig2");
    }
  } else {
    errs.add("wo", "missing required object {kind[, values]}");
  }

  // Optional fields.
  fetch(j, "L", sc.fb_len, errs, false, "integer");
  fetch(j, "moment_seed", sc.moment_seed, errs, false, "integer");
  fetch(j, "steady_state_window", sc.steady_state_window, errs, false,
        "integer");
  fetch(j, "record_weights", sc.record_weights, errs, false, "boolean");
  if (j.contains("noise_term")) {
    std::string v;
    fetch(j, "noise_term", v, errs, false, "string");
    try {
      sc.noise_variant = parse_noise_variant(v);
    } catch (const config_error& e) {
      errs.add("noise_term", e.what());
    }
  }

  if (!errs.empty()) errs.raise();

  // Range checks, reported field-by-field as well.
  try {
    sc.validate();
  } catch (const config_error& e) {
    throw config_error(std::string("config schema violations:\n  ") + e.what());
  }
  return sc;
}

nlohmann::json stability_to_json(const StabilityReport& report) {
  return nlohmann::json{{"mu_max_mean", report.mu_max_mean},
                        {"rho_xi", report.rho_xi},
                        {"rho_f", report.rho_f},
                        {"mean_square_window_ok", report.mean_square_window_ok}};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open output file " + path.string());
  out << j.dump(2) << "\n";
}

void write_figure_outputs(const FigureResult& fig,
                          const std::filesystem::path& outdir) {
  std::filesystem::create_directories(outdir);
  nlohmann::json manifest;
  manifest["figure"] = fig.figure;

  if (!fig.sweep.empty()) {
    auto path = outdir / (fig.figure + "_sweep.csv");
    write_sweep_csv(path, fig.sweep);
    manifest["config"] = scenario_to_json(fig.sweep_base);
    nlohmann::json mus = nlohmann::json::array();
    for (const auto& pt : fig.sweep) mus.push_back(pt.mu);
    manifest["mu_values"] = mus;
    manifest["files"] = {path.filename().string()};
  } else {
    nlohmann::json curves = nlohmann::json::array();
    nlohmann::json files = nlohmann::json::array();
    for (const CurveRun& curve : fig.curves) {
      std::string stem = fig.figure + "_" + curve.label;
      auto msd_path = outdir / (stem + ".csv");
      write_msd_csv(msd_path, &curve.result.msd_sim_db,
                    &curve.result.msd_theory_db);
      files.push_back(msd_path.filename().string());
      if (curve.result.weights_sim.size() > 0) {
        auto w_path = outdir / (stem + "_weights.csv");
        write_weights_csv(w_path, curve.result.weights_sim,
                          curve.result.weights_theory);
        files.push_back(w_path.filename().string());
      }
      curves.push_back({{"label", curve.label},
                        {"config", scenario_to_json(curve.config)}});
    }
    manifest["curves"] = curves;
    manifest["files"] = files;
  }
  write_json(outdir / "manifest.json", manifest);
}

}  // namespace saflab
