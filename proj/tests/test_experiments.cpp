#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <sys/wait.h>
#include <vector>

#include "qadia/experiments.hpp"

using namespace qadia;
using Catch::Approx;

namespace fs = std::filesystem;

namespace {

const char* kBaseConfig = R"(
# rotating-drive ensemble example
[model]
name = model_a
omega_drive = 5.0
omega_z = 5.0

[noise]
kind = gaussian_white
strength = 1.0
seed = 11

[solver]
method = auxiliary_ode
steps = 800
t_end = 2.0

[ensemble]
n_traj = 4
base_seed = 9

[output]
dir = exp_out
name = demo
)";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

int run_cli(const std::string& args) {
#ifdef QADIA_CLI_PATH
  const std::string cmd = std::string(QADIA_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
#else
  (void)args;
  return -1;
#endif
}

}  // namespace

TEST_CASE("config parsing") {
  SECTION("full round trip") {
    const ExperimentConfig cfg = parse_config_text(kBaseConfig);
    CHECK(cfg.model.kind == ModelKind::ModelA);
    CHECK(cfg.model.omega_drive == 5.0);
    CHECK(cfg.noise.kind == NoiseKind::GaussianWhite);
    CHECK(cfg.noise.strength == 1.0);
    CHECK(cfg.noise.seed == 11);
    CHECK(cfg.solver.steps == 800);
    CHECK(cfg.solver.t_end == 2.0);
    CHECK(cfg.n_traj == 4);
    CHECK(cfg.base_seed == 9);
    CHECK(cfg.out_name == "demo");
  }
  SECTION("unknown keys are hard errors naming the offender") {
    const std::string bad = std::string(kBaseConfig) + "\n[model]\nomega_drvie = 1\n";
    try {
      parse_config_text(bad);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("omega_drvie") != std::string::npos);
    }
  }
  SECTION("unknown sections, models, methods and kinds are refused") {
    CHECK_THROWS_AS(parse_config_text("[modell]\nname = model_a\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[model]\nname = model_c\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[model]\nname = model_a\n[solver]\nmethod = euler\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config_text("[model]\nname = model_a\n[noise]\nkind = pink\n"),
                    ConfigError);
  }
  SECTION("malformed values are refused") {
    CHECK_THROWS_AS(parse_config_text("[model]\nname = model_a\nomega_z = fast\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[model]\nname = model_a\n[scan]\nvalues = 1, ,2\n"),
                    ConfigError);
  }
  SECTION("required fields") {
    CHECK_THROWS_AS(parse_config_text("[noise]\nkind = none\n"), ConfigError);  // no model.name
    // unbounded model needs t_end
    CHECK_THROWS_AS(parse_config_text("[model]\nname = model_a\n"), ConfigError);
    // sweep model inherits t_end = T
    const ExperimentConfig cfg =
        parse_config_text("[model]\nname = linear_sweep\npassage_time = 2.0\n");
    CHECK(cfg.solver.t_end == 2.0);
    // t_end beyond the passage is refused
    CHECK_THROWS_AS(parse_config_text("[model]\nname = linear_sweep\npassage_time = 1.0\n"
                                      "[solver]\nt_end = 2.0\n"),
                    ConfigError);
  }
}

TEST_CASE("constant-model run emits unit-amplitude rows") {
  fs::remove_all("exp_out_const");
  ExperimentConfig cfg = parse_config_text(R"(
[model]
name = generic_tls
a0 = 0.5
b0 = 0.25
omega_z = 1.5
[solver]
t_end = 1.0
steps = 200
[output]
dir = exp_out_const
name = smoke
)");
  const RunOutputs out = run_experiment(cfg);
  const auto rows = read_csv("exp_out_const/smoke_trajectory.csv");
  REQUIRE(rows.size() == 202);  // header + 201 points
  CHECK(rows[0] == std::vector<std::string>{"t", "abs_psi0", "re_psi0", "im_psi0",
                                            "residual_abs"});
  const std::regex sci(R"(-?\d\.\d{8}e[+-]\d{2,3})");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 5);
    for (const std::string& cell : rows[i]) CHECK(std::regex_match(cell, sci));
    CHECK(std::stod(rows[i][1]) == Approx(1.0).margin(1e-9));
  }
  CHECK(out.summary["metrics"]["min_abs_psi0"].get<double>() == Approx(1.0).margin(1e-9));
}

TEST_CASE("ensemble run emits the documented schema") {
  fs::remove_all("exp_out_ens");
  ExperimentConfig cfg = parse_config_text(kBaseConfig);
  cfg.out_dir = "exp_out_ens";
  const RunOutputs out = run_experiment(cfg);
  const auto rows = read_csv("exp_out_ens/demo_ensemble.csv");
  CHECK(rows[0] == std::vector<std::string>{"t", "mean_abs_psi0", "stderr_abs", "mean_pop0",
                                            "stderr_pop", "purity"});
  REQUIRE(rows.size() == 802);
  CHECK(out.summary.contains("ensemble"));
}

TEST_CASE("identical config and seed reproduce byte-identical output") {
  fs::remove_all("exp_det_a");
  fs::remove_all("exp_det_b");
  ExperimentConfig cfg = parse_config_text(kBaseConfig);
  cfg.n_traj = 32;
  cfg.out_dir = "exp_det_a";
  run_experiment(cfg);
  cfg.out_dir = "exp_det_b";
  run_experiment(cfg);
  CHECK(read_file("exp_det_a/demo_ensemble.csv") == read_file("exp_det_b/demo_ensemble.csv"));
}

TEST_CASE("numerical refusal carries a usable step suggestion") {
  ExperimentConfig cfg = parse_config_text(kBaseConfig);
  cfg.solver.steps = 20;
  cfg.steps_given = true;
  cfg.out_dir = "exp_refuse";
  try {
    run_experiment(cfg);
    FAIL("expected ResolutionError");
  } catch (const ResolutionError& e) {
    CHECK(e.suggested_steps > 100);
  }
}

TEST_CASE("passage-time scan reports finals and a threshold") {
  fs::remove_all("exp_scan_t");
  ExperimentConfig cfg = parse_config_text(R"(
[model]
name = linear_sweep
passage_time = 2.0
[scan]
values = 0.5, 1.0, 2.0
fidelity_target = 0.8
[output]
dir = exp_scan_t
name = sweep
)");
  const RunOutputs out = scan_passage_time(cfg);
  const auto rows = read_csv("exp_scan_t/sweep_scan_time.csv");
  REQUIRE(rows.size() == 4);
  const double f05 = std::stod(rows[1][1]);
  const double f1 = std::stod(rows[2][1]);
  const double f2 = std::stod(rows[3][1]);
  CHECK(f05 < f1);
  CHECK(f1 < f2);
  CHECK(f1 == Approx(0.76).margin(0.01));
  CHECK(out.summary["threshold"]["reached"].get<bool>());
  CHECK(out.summary["threshold"]["smallest_scanned_T"].get<double>() == 2.0);
  const double refined = out.summary["threshold"]["refined_T"].get<double>();
  CHECK(refined > 1.0);
  CHECK(refined <= 2.0);
  // noise must be disabled for this scan
  ExperimentConfig noisy = cfg;
  noisy.noise = NoiseSpec::gaussian_white(1.0);
  CHECK_THROWS_AS(scan_passage_time(noisy), ConfigError);
}

TEST_CASE("noise scan enforces the gamma-list contract and reports monotonicity") {
  fs::remove_all("exp_scan_n");
  ExperimentConfig cfg = parse_config_text(R"(
[model]
name = model_a
omega_drive = 5.0
omega_z = 5.0
[noise]
kind = gaussian_white
[solver]
t_end = 2.0
steps = 1000
[ensemble]
n_traj = 120
base_seed = 4242
[scan]
values = 0.0, 0.5, 4.0
[output]
dir = exp_scan_n
name = drive
)");
  const RunOutputs out = scan_noise(cfg);
  CHECK(out.summary["monotone"].get<bool>());
  CHECK(out.summary["saturation_reached"].get<bool>());
  CHECK(out.summary["saturation_gamma"].get<double>() == 4.0);
  CHECK(fs::exists("exp_scan_n/drive_scan_noise.csv"));
  CHECK(fs::exists("exp_scan_n/drive_noise0_ensemble.csv"));
  CHECK(fs::exists("exp_scan_n/drive_noise2_ensemble.csv"));

  ExperimentConfig unsorted = cfg;
  unsorted.scan_values = {0.0, 4.0, 0.5};
  CHECK_THROWS_AS(scan_noise(unsorted), ConfigError);
  ExperimentConfig nozero = cfg;
  nozero.scan_values = {0.5, 4.0};
  CHECK_THROWS_AS(scan_noise(nozero), ConfigError);
}

TEST_CASE("speedup report degenerate cases") {
  SECTION("no noise on either side gives ratio 1") {
    fs::remove_all("exp_speed_1");
    ExperimentConfig cfg = parse_config_text(R"(
[model]
name = linear_sweep
passage_time = 2.0
[scan]
values = 0.5, 1.0, 2.0
fidelity_target = 0.5
[output]
dir = exp_speed_1
name = speed
)");
    const RunOutputs out = speedup_report(cfg);
    CHECK(out.summary["reached"].get<bool>());
    CHECK(out.summary["speedup_ratio"].get<double>() == Approx(1.0));
  }
  SECTION("unreachable target is reported, not faked") {
    fs::remove_all("exp_speed_2");
    ExperimentConfig cfg = parse_config_text(R"(
[model]
name = linear_sweep
passage_time = 1.0
[scan]
values = 0.25, 0.5, 1.0
fidelity_target = 0.999
[output]
dir = exp_speed_2
name = speed
)");
    const RunOutputs out = speedup_report(cfg);
    CHECK_FALSE(out.summary["reached"].get<bool>());
    CHECK(out.summary["speedup_ratio"].is_null());
  }
}

#ifdef QADIA_CLI_PATH
TEST_CASE("cli exit codes") {
  fs::remove_all("cli_exit");
  fs::create_directories("cli_exit");
  {
    std::ofstream good("cli_exit/good.cfg");
    good << "[model]\nname = generic_tls\na0 = 1.0\n[solver]\nt_end = 1.0\nsteps = 100\n"
         << "[output]\ndir = cli_exit/out\nname = ok\n";
  }
  {
    std::ofstream bad("cli_exit/bad.cfg");
    bad << "[model]\nname = not_a_model\n";
  }
  {
    std::ofstream coarse("cli_exit/coarse.cfg");
    coarse << "[model]\nname = model_a\nomega_drive = 5.0\nomega_z = 5.0\n"
           << "[solver]\nt_end = 2.0\nsteps = 20\n[output]\ndir = cli_exit/out\nname = c\n";
  }
  CHECK(run_cli("run cli_exit/good.cfg") == 0);
  CHECK(run_cli("run cli_exit/bad.cfg") == 2);
  CHECK(run_cli("run cli_exit/coarse.cfg") == 3);
  CHECK(run_cli("run cli_exit/missing.cfg") == 2);
}
#endif
