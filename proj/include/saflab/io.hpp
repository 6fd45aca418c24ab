#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "saflab/harness.hpp"

#include <json.hpp>

namespace saflab {

// CSV writers. All floating-point values are printed with 9 significant
// digits; every file carries a header row.

// k,msd_sim_db[,msd_theory_db] (either series may be omitted).
void write_msd_csv(const std::filesystem::path& path,
                   const std::vector<double>* sim_db,
                   const std::vector<double>* theory_db);

// k,msd_db (theory-only series).
void write_theory_msd_csv(const std::filesystem::path& path,
                          const std::vector<double>& msd_db);

// k,coef_index,theory_mean (theory-only mean trajectory).
void write_theory_weights_csv(const std::filesystem::path& path,
                              const Matrix& theory);

// k,coef_index,sim_mean,theory_mean (long format).
void write_weights_csv(const std::filesystem::path& path, const Matrix& sim,
                       const Matrix& theory);

// mu,steady_sim_db,steady_theory_db.
void write_sweep_csv(const std::filesystem::path& path,
                     const std::vector<SweepPoint>& points);

// subband_index,tap_index,value.
void write_filter_csv(const std::filesystem::path& path, const FilterBank& fb);

// k,coef_0..coef_{M-1},sq_deviation (single-trial trajectory export).
void write_trajectory_csv(const std::filesystem::path& path,
                          const TrialResult& trial);

// JSON round trip for scenario configs. from-JSON collects one message per
// offending field and throws config_error listing all of them.
nlohmann::json scenario_to_json(const ScenarioConfig& sc);
ScenarioConfig scenario_from_json(const nlohmann::json& j);

nlohmann::json stability_to_json(const StabilityReport& report);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace saflab
