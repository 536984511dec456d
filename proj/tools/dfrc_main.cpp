#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "dfrc/design.hpp"
#include "dfrc/evaluation.hpp"
#include "dfrc/io.hpp"
#include "dfrc/radar.hpp"
#include "dfrc/scenario.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dfrc;

namespace {

std::string default_out_dir() {
  const char* env = std::getenv("DFRC_OUT_DIR");
  return env && *env ? std::string(env) : std::string(".");
}

void write_infeasibility_record(const std::string& out_dir, const std::string& command,
                                const std::string& message) {
  json j;
  j["command"] = command;
  j["status"] = "Infeasible";
  j["message"] = message;
  std::ofstream out(fs::path(out_dir) / "infeasible.json");
  out << j.dump(2) << "\n";
  std::cerr << "infeasible: " << message << "\n";
}

struct DesignOptions {
  std::string scenario_path;
  std::string out_dir = default_out_dir();
  double gamma_c_db = 10.0;
  double gamma_e_db = 0.0;
  bool no_eve = false;
  double beam_width_deg = 10.0;
  double crosscorr_weight = 1.0;
  // robust knobs
  double csi_fraction = 0.0;
  double angle_resolution_deg = 0.1;
};

void add_design_flags(CLI::App* cmd, DesignOptions& opt) {
  cmd->add_option("--scenario", opt.scenario_path, "Scenario JSON file")->required();
  cmd->add_option("--out", opt.out_dir, "Output directory (default: $DFRC_OUT_DIR or .)");
  cmd->add_option("--gamma-c-db", opt.gamma_c_db, "LU SINR threshold in dB (0 linear disables)");
  cmd->add_option("--gamma-e-db", opt.gamma_e_db, "Eve SINR ceiling in dB");
  cmd->add_flag("--no-eve", opt.no_eve, "Drop the eavesdropper constraints");
  cmd->add_option("--beam-width-deg", opt.beam_width_deg, "Desired mainlobe width");
  cmd->add_option("--eta", opt.crosscorr_weight, "Cross-correlation weight");
}

SecurityThresholds thresholds_from(const DesignOptions& opt) {
  SecurityThresholds t;
  t.gamma_c = db2lin(opt.gamma_c_db);
  t.gamma_e = opt.no_eve ? std::nullopt : std::optional<double>(db2lin(opt.gamma_e_db));
  return t;
}

int emit_design_outputs(const DesignOptions& opt, const Scenario& scenario,
                        const BeampatternSpec& pattern, const DesignResult& result,
                        const conic::SolverSettings& settings) {
  fs::create_directories(opt.out_dir);
  const fs::path dir(opt.out_dir);
  dfrc::io::write_result((dir / "result.json").string(), result);
  dfrc::io::write_beampattern_csv((dir / "beampattern.csv").string(), result.covariance,
                                  scenario.config);
  const CMat reference = radar_only_design(pattern, scenario.config, settings).covariance;
  const MetricsReport metrics = compute_metrics(result, scenario, reference);
  std::ofstream metrics_out(dir / "metrics.json");
  metrics_out << dfrc::io::metrics_to_json(metrics);
  std::cout << "objective " << result.objective << ", iterations " << result.iterations
            << ", wrote " << (dir / "result.json").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secure dual-function radar-communication transmit beamforming"};
  app.require_subcommand(1);

  DesignOptions opt;
  conic::SolverSettings settings;

  CLI::App* sdr = app.add_subcommand("design-sdr", "Globally-optimal SDR-based design");
  add_design_flags(sdr, opt);
  CLI::App* zf = app.add_subcommand("design-zf", "Low-complexity zero-forcing design");
  add_design_flags(zf, opt);
  CLI::App* robust = app.add_subcommand("design-robust", "Robust design under imperfect CSI");
  add_design_flags(robust, opt);
  robust->add_option("--csi-fraction", opt.csi_fraction,
                     "CSI uncertainty radius as a fraction of ||h_k||");
  robust->add_option("--angle-resolution-deg", opt.angle_resolution_deg,
                     "Sampling step for the Eve angle uncertainty sets");

  CLI::App* radar = app.add_subcommand("radar-only", "Radar-only reference design");
  std::string radar_scenario, radar_out = default_out_dir();
  double radar_width = 10.0, radar_eta = 1.0;
  radar->add_option("--scenario", radar_scenario, "Scenario JSON file")->required();
  radar->add_option("--out", radar_out, "Output directory");
  radar->add_option("--beam-width-deg", radar_width, "Desired mainlobe width");
  radar->add_option("--eta", radar_eta, "Cross-correlation weight");

  CLI::App* sweep = app.add_subcommand("sweep", "Monte-Carlo sweep over a threshold axis");
  std::string sweep_axis = "gamma-c-db", sweep_designer = "sdr";
  std::string sweep_out = default_out_dir();
  std::vector<double> sweep_values;
  int sweep_trials = 50, sweep_users = 2, sweep_targets = 1, sweep_antennas = 10;
  double sweep_grid_res = 0.1;
  uint64_t sweep_seed = 1;
  DesignOptions sweep_opt;
  sweep->add_option("--axis", sweep_axis, "gamma-c-db | gamma-e-db | csi-fraction");
  sweep->add_option("--values", sweep_values, "Axis values")->required();
  sweep->add_option("--designer", sweep_designer, "sdr | zf | robust");
  sweep->add_option("--trials", sweep_trials, "Monte-Carlo trials per point");
  sweep->add_option("--users", sweep_users, "Number of downlink users K");
  sweep->add_option("--targets", sweep_targets, "Number of radar targets Q");
  sweep->add_option("--antennas", sweep_antennas, "Number of transmit antennas M");
  sweep->add_option("--grid-resolution-deg", sweep_grid_res, "Beampattern grid step");
  sweep->add_option("--seed", sweep_seed, "Base RNG seed");
  sweep->add_option("--out", sweep_out, "Output directory");
  sweep->add_option("--gamma-c-db", sweep_opt.gamma_c_db, "Fixed LU threshold when not swept");
  sweep->add_option("--gamma-e-db", sweep_opt.gamma_e_db, "Fixed Eve ceiling when not swept");
  sweep->add_flag("--no-eve", sweep_opt.no_eve, "Drop the eavesdropper constraints");
  sweep->add_option("--beam-width-deg", sweep_opt.beam_width_deg, "Desired mainlobe width");
  sweep->add_option("--eta", sweep_opt.crosscorr_weight, "Cross-correlation weight");
  sweep->add_option("--csi-fraction", sweep_opt.csi_fraction, "Fixed CSI radius fraction");
  double sweep_angle_unc = 0.0;
  sweep->add_option("--angle-uncertainty-deg", sweep_angle_unc,
                    "Target angle uncertainty half-width (robust)");
  sweep->add_option("--angle-resolution-deg", sweep_opt.angle_resolution_deg,
                    "Sampling step for the Eve angle uncertainty sets");

  CLI::App* validate = app.add_subcommand("validate", "Frame-level empirical validation");
  std::string val_scenario, val_result, val_out = default_out_dir();
  int val_samples = 1 << 16;
  uint64_t val_seed = 1;
  validate->add_option("--scenario", val_scenario, "Scenario JSON file")->required();
  validate->add_option("--result", val_result, "Design result JSON file")->required();
  validate->add_option("--samples", val_samples, "Frame length N");
  validate->add_option("--seed", val_seed, "RNG seed");
  validate->add_option("--out", val_out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (sdr->parsed() || zf->parsed() || robust->parsed()) {
      const Scenario scenario = io::read_scenario(opt.scenario_path);
      const BeampatternSpec pattern = BeampatternSpec::for_targets(
          scenario.targets, opt.beam_width_deg, opt.crosscorr_weight);
      const SecurityThresholds thresholds = thresholds_from(opt);
      DesignResult result;
      if (sdr->parsed()) {
        result = solve_sdr(scenario, pattern, thresholds, settings);
      } else if (zf->parsed()) {
        result = solve_zf(scenario, pattern, thresholds, settings);
      } else {
        result = solve_robust(scenario, pattern, thresholds,
                              CsiUncertainty::relative(scenario, opt.csi_fraction),
                              AngularUncertaintySet::build(scenario, opt.angle_resolution_deg),
                              settings);
      }
      return emit_design_outputs(opt, scenario, pattern, result, settings);
    }

    if (radar->parsed()) {
      const Scenario scenario = io::read_scenario(radar_scenario);
      const BeampatternSpec pattern =
          BeampatternSpec::for_targets(scenario.targets, radar_width, radar_eta);
      const RadarOnlyDesign design = radar_only_design(pattern, scenario.config, settings);
      fs::create_directories(radar_out);
      const fs::path dir(radar_out);
      dfrc::io::write_beampattern_csv((dir / "beampattern.csv").string(), design.covariance,
                                      scenario.config);
      json j;
      j["objective"] = design.objective;
      j["alpha"] = design.alpha;
      std::ofstream out(dir / "radar_only.json");
      out << j.dump(2) << "\n";
      std::cout << "objective " << design.objective << ", wrote "
                << (dir / "beampattern.csv").string() << "\n";
      return 0;
    }

    if (sweep->parsed()) {
      SweepSpec spec;
      if (sweep_axis == "gamma-c-db") spec.axis = SweepAxis::GammaCdb;
      else if (sweep_axis == "gamma-e-db") spec.axis = SweepAxis::GammaEdb;
      else if (sweep_axis == "csi-fraction") spec.axis = SweepAxis::CsiRadiusFraction;
      else throw CLI::ValidationError("--axis", "unknown axis " + sweep_axis);
      if (sweep_designer == "sdr") spec.designer = DesignerKind::Sdr;
      else if (sweep_designer == "zf") spec.designer = DesignerKind::Zf;
      else if (sweep_designer == "robust") spec.designer = DesignerKind::Robust;
      else throw CLI::ValidationError("--designer", "unknown designer " + sweep_designer);
      spec.axis_values = sweep_values;
      spec.gamma_c_db = sweep_opt.gamma_c_db;
      spec.gamma_e_db = sweep_opt.no_eve ? std::nullopt
                                         : std::optional<double>(sweep_opt.gamma_e_db);
      spec.beam_width_deg = sweep_opt.beam_width_deg;
      spec.crosscorr_weight = sweep_opt.crosscorr_weight;
      spec.csi_radius_fraction = sweep_opt.csi_fraction;
      spec.angle_uncertainty_deg = sweep_angle_unc;
      spec.angle_resolution_deg = sweep_opt.angle_resolution_deg;

      TrialTemplate tmpl;
      tmpl.config.num_antennas = sweep_antennas;
      tmpl.config.grid_resolution_deg = sweep_grid_res;
      tmpl.num_users = sweep_users;
      tmpl.num_targets = sweep_targets;

      const SweepResult result = run_sweep(tmpl, spec, sweep_trials, sweep_seed, settings);
      fs::create_directories(sweep_out);
      const std::string path = (fs::path(sweep_out) / "sweep.csv").string();
      io::write_sweep_csv(path, result);
      std::cout << "wrote " << path << " (" << result.points.size() << " points, "
                << sweep_trials << " trials)\n";
      return 0;
    }

    if (validate->parsed()) {
      const Scenario scenario = io::read_scenario(val_scenario);
      const DesignResult result = io::read_result(val_result);
      const EmpiricalReport report =
          empirical_validate(result, scenario, val_samples, val_seed);
      json j;
      j["cov_error_fro"] = report.cov_error_fro;
      j["cov_error_rel"] = report.cov_error_rel;
      j["max_sinr_dev_db"] = report.max_sinr_dev_db;
      j["analytic_sinr"] = std::vector<double>(
          report.analytic_sinr.data(), report.analytic_sinr.data() + report.analytic_sinr.size());
      j["empirical_sinr"] = std::vector<double>(
          report.empirical_sinr.data(),
          report.empirical_sinr.data() + report.empirical_sinr.size());
      fs::create_directories(val_out);
      std::ofstream out(fs::path(val_out) / "validation.json");
      out << j.dump(2) << "\n";
      std::cout << "max SINR deviation " << report.max_sinr_dev_db << " dB, covariance error "
                << report.cov_error_rel << " (relative)\n";
      return 0;
    }
  } catch (const InfeasibleDesign& e) {
    std::string dir = opt.out_dir;
    if (sweep->parsed()) dir = sweep_out;
    fs::create_directories(dir);
    write_infeasibility_record(dir, command, e.what());
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
