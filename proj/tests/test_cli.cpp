#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const char* cli_path() { return SAFLAB_CLI_PATH; }

int run_cli(const std::string& args) {
  std::string cmd = std::string(cli_path()) + " " + args + " 2>/dev/null";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

int count_data_rows(const fs::path& csv) {
  std::ifstream in(csv);
  REQUIRE(in.good());
  std::string line;
  int rows = -1;  // skip the header
  while (std::getline(in, line)) {
    if (!line.empty()) ++rows;
  }
  return rows;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path make_dir(const char* name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_config(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  out << j.dump(2);
}

nlohmann::json small_config() {
  return nlohmann::json{
      {"M", 8},
      {"N", 4},
      {"P", 2},
      {"alpha", 1.0},
      {"mu", 0.5},
      {"epsilon", 1e-3},
      {"snr_db", 10.0},
      {"input", {{"kind", "gaussian"}, {"pole", 0.9}}},
      {"trials", 4},
      {"iters", 80},
      {"seed", 42},
      {"wo", {{"kind", "random"}}},
      {"moment_samples", 1000},
      {"steady_state_window", 20},
  };
}

}  // namespace

TEST_CASE("design writes the coefficient csv") {
  fs::path dir = make_dir("saflab_cli_design");
  int rc = run_cli("design --n 8 --len 64 --outdir " + dir.string());
  CHECK(rc == 0);
  CHECK(count_data_rows(dir / "filters.csv") == 512);
  CHECK(fs::exists(dir / "manifest.json"));

  std::ifstream csv(dir / "filters.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "subband_index,tap_index,value");

  fs::path dir2 = make_dir("saflab_cli_design2");
  CHECK(run_cli("design --n 1 --len 2 --outdir " + dir2.string()) == 0);
  CHECK(count_data_rows(dir2 / "filters.csv") == 2);
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("design rejects a bad length multiple with exit code 2") {
  fs::path dir = make_dir("saflab_cli_design_bad");
  CHECK(run_cli("design --n 8 --len 63 --outdir " + dir.string()) == 2);
  fs::remove_all(dir);
}

TEST_CASE("simulate/compare produce csvs and manifest") {
  fs::path dir = make_dir("saflab_cli_sim");
  write_config(dir / "cfg.json", small_config());
  int rc = run_cli("simulate --config " + (dir / "cfg.json").string() +
                   " --outdir " + dir.string());
  CHECK(rc == 0);
  CHECK(count_data_rows(dir / "msd_sim.csv") == 80);
  CHECK(fs::exists(dir / "manifest.json"));

  rc = run_cli("compare --config " + (dir / "cfg.json").string() +
               " --outdir " + dir.string());
  CHECK(rc == 0);
  CHECK(count_data_rows(dir / "msd_compare.csv") == 80);
  CHECK(fs::exists(dir / "summary.json"));

  // Manifest echoes the resolved config.
  auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["config"]["M"] == 8);
  CHECK(manifest["config"]["L"] == 32);
  CHECK(manifest["config"]["noise_term"] == "exact");
  fs::remove_all(dir);
}

TEST_CASE("minimal one-iteration simulate emits 0 dB for a unit system") {
  fs::path dir = make_dir("saflab_cli_minimal");
  nlohmann::json cfg = small_config();
  cfg["trials"] = 1;
  cfg["iters"] = 1;
  cfg["steady_state_window"] = 1;
  write_config(dir / "cfg.json", cfg);
  CHECK(run_cli("simulate --config " + (dir / "cfg.json").string() +
                " --outdir " + dir.string()) == 0);
  std::ifstream csv(dir / "msd_sim.csv");
  std::string header, row;
  std::getline(csv, header);
  std::getline(csv, row);
  CHECK(row.substr(0, 2) == "0,");
  double val = std::stod(row.substr(2));
  CHECK(std::abs(val) <= 1e-9);  // random w_o is unit norm -> 0 dB
  fs::remove_all(dir);
}

TEST_CASE("schema violations are listed field by field with exit code 2") {
  fs::path dir = make_dir("saflab_cli_schema");
  nlohmann::json cfg = small_config();
  cfg.erase("mu");
  cfg["trials"] = "many";
  write_config(dir / "cfg.json", cfg);
  std::string cmd = std::string(cli_path()) + " compare --config " +
                    (dir / "cfg.json").string() + " --outdir " + dir.string() +
                    " 2> " + (dir / "err.txt").string();
  int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 2);
  std::string err = slurp(dir / "err.txt");
  CHECK(err.find("mu") != std::string::npos);
  CHECK(err.find("trials") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("predict writes theory csvs and the stability report") {
  fs::path dir = make_dir("saflab_cli_predict");
  write_config(dir / "cfg.json", small_config());
  CHECK(run_cli("predict --config " + (dir / "cfg.json").string() +
                " --outdir " + dir.string()) == 0);
  std::ifstream csv(dir / "msd_theory.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "k,msd_db");
  CHECK(count_data_rows(dir / "msd_theory.csv") == 80);

  std::ifstream wcsv(dir / "weights_theory.csv");
  std::getline(wcsv, header);
  CHECK(header == "k,coef_index,theory_mean");

  auto stability = nlohmann::json::parse(slurp(dir / "stability.json"));
  CHECK(stability.contains("mu_max_mean"));
  CHECK(stability.contains("rho_xi"));
  CHECK(stability.contains("rho_f"));
  CHECK(stability["mu_max_mean"].get<double>() > 0.0);
  CHECK(stability["rho_f"].get<double>() < 1.0);
  fs::remove_all(dir);
}

TEST_CASE("predict refuses an unstable step size with exit code 3") {
  fs::path dir = make_dir("saflab_cli_unstable");
  nlohmann::json cfg = small_config();
  // NSAF (P = 1): rho(F) >= 1 well beyond the mean-stability bound.
  cfg["P"] = 1;
  cfg["mu"] = 2.5;
  cfg["iters"] = 50;
  write_config(dir / "cfg.json", cfg);
  std::string cmd = std::string(cli_path()) + " predict --config " +
                    (dir / "cfg.json").string() + " --outdir " + dir.string() +
                    " 2> " + (dir / "err.txt").string();
  int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 3);
  std::string err = slurp(dir / "err.txt");
  CHECK(err.find("rho(F)") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("reproduce rejects unknown figure ids") {
  fs::path dir = make_dir("saflab_cli_fig9");
  CHECK(run_cli("reproduce fig9 --outdir " + dir.string()) == 2);
  fs::remove_all(dir);
}

TEST_CASE("same config and seed give byte-identical outputs") {
  fs::path a = make_dir("saflab_cli_rep_a");
  fs::path b = make_dir("saflab_cli_rep_b");
  write_config(a / "cfg.json", small_config());
  CHECK(run_cli("compare --config " + (a / "cfg.json").string() +
                " --outdir " + a.string()) == 0);
  CHECK(run_cli("compare --config " + (a / "cfg.json").string() +
                " --outdir " + b.string()) == 0);
  CHECK(slurp(a / "msd_compare.csv") == slurp(b / "msd_compare.csv"));
  CHECK(slurp(a / "weights.csv") == slurp(b / "weights.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("seed override changes the outputs") {
  fs::path dir = make_dir("saflab_cli_seed");
  write_config(dir / "cfg.json", small_config());
  CHECK(run_cli("simulate --config " + (dir / "cfg.json").string() +
                " --outdir " + dir.string()) == 0);
  std::string base = slurp(dir / "msd_sim.csv");
  CHECK(run_cli("simulate --config " + (dir / "cfg.json").string() +
                " --seed 777 --outdir " + dir.string()) == 0);
  CHECK(slurp(dir / "msd_sim.csv") != base);
  fs::remove_all(dir);
}

TEST_CASE("sweep writes the mu table") {
  fs::path dir = make_dir("saflab_cli_sweep");
  nlohmann::json cfg = small_config();
  cfg["iters"] = 200;
  cfg["steady_state_window"] = 50;
  write_config(dir / "cfg.json", cfg);
  CHECK(run_cli("sweep --config " + (dir / "cfg.json").string() +
                " --mus 0.2 0.5 --outdir " + dir.string()) == 0);
  CHECK(count_data_rows(dir / "sweep.csv") == 2);
  std::ifstream csv(dir / "sweep.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "mu,steady_sim_db,steady_theory_db");
  fs::remove_all(dir);
}

TEST_CASE("trajectory export has the wide per-coefficient layout") {
  fs::path dir = make_dir("saflab_cli_traj");
  write_config(dir / "cfg.json", small_config());
  CHECK(run_cli("simulate --config " + (dir / "cfg.json").string() +
                " --outdir " + dir.string() + " --trajectory " +
                (dir / "traj.csv").string()) == 0);
  std::ifstream csv(dir / "traj.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header.substr(0, 9) == "k,coef_0,");
  CHECK(header.find("coef_7") != std::string::npos);
  CHECK(header.find("sq_deviation") != std::string::npos);
  CHECK(count_data_rows(dir / "traj.csv") == 80);
  fs::remove_all(dir);
}
