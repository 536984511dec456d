#include "dfrc/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "dfrc/radar.hpp"
#include "json.hpp"

namespace dfrc::io {

namespace {

using nlohmann::json;

json cx_to_json(const cxd& v) { return json::array({v.real(), v.imag()}); }

cxd cx_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("complex must be [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

json cmat_to_json(const CMat& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(cx_to_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

CMat cmat_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("matrix must be an array of rows");
  const int rows = static_cast<int>(j.size());
  const int cols = rows > 0 ? static_cast<int>(j[0].size()) : 0;
  CMat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols) throw std::invalid_argument("ragged matrix rows");
    for (int c = 0; c < cols; ++c) m(r, c) = cx_from_json(j[r][c]);
  }
  return m;
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const char* where) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* key : allowed) ok = ok || item.key() == key;
    if (!ok) throw std::invalid_argument(std::string("unknown key '") + item.key() + "' in " + where);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
}

}  // namespace

std::string scenario_to_json(const Scenario& scenario) {
  const SystemConfig& c = scenario.config;
  json j;
  j["config"] = {{"num_antennas", c.num_antennas},
                 {"total_power", c.total_power},
                 {"noise_var_lu", c.noise_var_lu},
                 {"noise_var_eve", c.noise_var_eve},
                 {"spacing_ratio", c.spacing_ratio},
                 {"grid_resolution_deg", c.grid_resolution_deg},
                 {"grid_min_deg", c.grid_min_deg},
                 {"grid_max_deg", c.grid_max_deg}};
  j["channel"] = cmat_to_json(scenario.channel);
  json targets = json::array();
  for (const Target& t : scenario.targets) {
    targets.push_back({{"angle_deg", t.angle_deg},
                       {"path_loss", cx_to_json(t.path_loss)},
                       {"angle_uncertainty_deg", t.angle_uncertainty_deg}});
  }
  j["targets"] = std::move(targets);
  return j.dump(2) + "\n";
}

Scenario scenario_from_json(const std::string& text) {
  const json j = json::parse(text);
  reject_unknown_keys(j, {"config", "channel", "targets"}, "scenario");
  Scenario s;
  const json& jc = j.at("config");
  reject_unknown_keys(jc,
                      {"num_antennas", "total_power", "noise_var_lu", "noise_var_eve",
                       "spacing_ratio", "grid_resolution_deg", "grid_min_deg", "grid_max_deg"},
                      "config");
  SystemConfig& c = s.config;
  c.num_antennas = jc.at("num_antennas").get<int>();
  c.total_power = jc.value("total_power", c.total_power);
  c.noise_var_lu = jc.value("noise_var_lu", c.noise_var_lu);
  c.noise_var_eve = jc.value("noise_var_eve", c.noise_var_eve);
  c.spacing_ratio = jc.value("spacing_ratio", c.spacing_ratio);
  c.grid_resolution_deg = jc.value("grid_resolution_deg", c.grid_resolution_deg);
  c.grid_min_deg = jc.value("grid_min_deg", c.grid_min_deg);
  c.grid_max_deg = jc.value("grid_max_deg", c.grid_max_deg);
  s.channel = cmat_from_json(j.at("channel"));
  for (const json& jt : j.at("targets")) {
    reject_unknown_keys(jt, {"angle_deg", "path_loss", "angle_uncertainty_deg"}, "target");
    Target t;
    t.angle_deg = jt.at("angle_deg").get<double>();
    if (jt.contains("path_loss")) t.path_loss = cx_from_json(jt["path_loss"]);
    t.angle_uncertainty_deg = jt.value("angle_uncertainty_deg", 0.0);
    s.targets.push_back(t);
  }
  s.validate();
  return s;
}

void write_scenario(const std::string& path, const Scenario& scenario) {
  write_file(path, scenario_to_json(scenario));
}

Scenario read_scenario(const std::string& path) { return scenario_from_json(read_file(path)); }

std::string result_to_json(const DesignResult& result) {
  json j;
  j["covariance"] = cmat_to_json(result.covariance);
  json per_user = json::array();
  for (const CMat& rk : result.per_user_covs) per_user.push_back(cmat_to_json(rk));
  j["per_user_covs"] = std::move(per_user);
  j["precoder_comm"] = cmat_to_json(result.precoders.comm);
  j["precoder_radar"] = cmat_to_json(result.precoders.radar);
  j["alpha"] = result.alpha;
  j["objective"] = result.objective;
  j["status"] = conic::to_string(result.status);
  j["iterations"] = result.iterations;
  // solve_seconds is deliberately omitted: identical inputs must produce
  // byte-identical files, and wall-clock time is not part of the design.
  return j.dump(2) + "\n";
}

DesignResult result_from_json(const std::string& text) {
  const json j = json::parse(text);
  reject_unknown_keys(j,
                      {"covariance", "per_user_covs", "precoder_comm", "precoder_radar", "alpha",
                       "objective", "status", "iterations"},
                      "result");
  DesignResult r;
  r.covariance = cmat_from_json(j.at("covariance"));
  for (const json& jk : j.at("per_user_covs")) r.per_user_covs.push_back(cmat_from_json(jk));
  r.precoders.comm = cmat_from_json(j.at("precoder_comm"));
  r.precoders.radar = cmat_from_json(j.at("precoder_radar"));
  r.alpha = j.at("alpha").get<double>();
  r.objective = j.at("objective").get<double>();
  const std::string status = j.at("status").get<std::string>();
  if (status == "optimal") r.status = conic::SolveStatus::Optimal;
  else if (status == "infeasible") r.status = conic::SolveStatus::Infeasible;
  else if (status == "unbounded") r.status = conic::SolveStatus::Unbounded;
  else if (status == "numerical_limit") r.status = conic::SolveStatus::NumericalLimit;
  else throw std::invalid_argument("unknown solve status: " + status);
  r.iterations = j.at("iterations").get<int>();
  return r;
}

void write_result(const std::string& path, const DesignResult& result) {
  write_file(path, result_to_json(result));
}

DesignResult read_result(const std::string& path) { return result_from_json(read_file(path)); }

std::string metrics_to_json(const MetricsReport& report) {
  json j;
  j["user_sinr"] = std::vector<double>(report.user_sinr.data(),
                                       report.user_sinr.data() + report.user_sinr.size());
  j["eve_sinr"] = std::vector<double>(report.eve_sinr.data(),
                                      report.eve_sinr.data() + report.eve_sinr.size());
  const Vec user_db = report.user_sinr_db();
  const Vec eve_db = report.eve_sinr_db();
  j["user_sinr_db"] = std::vector<double>(user_db.data(), user_db.data() + user_db.size());
  j["eve_sinr_db"] = std::vector<double>(eve_db.data(), eve_db.data() + eve_db.size());
  j["sum_rate"] = report.sum_rate;
  j["secrecy_rate"] = report.secrecy_rate;
  j["beampattern_mse"] = report.beampattern_mse;
  j["feasible"] = report.feasible;
  return j.dump(2) + "\n";
}

namespace {

// Full-precision float formatting shared by every CSV writer so that files
// re-read bit-exactly.
std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

}  // namespace

void write_beampattern_csv(const std::string& path, const CMat& covariance,
                           const SystemConfig& config) {
  std::ostringstream out;
  out << "angle_deg,power_linear,power_db\n";
  for (double angle : config.angle_grid()) {
    const double p = beampattern(covariance, angle, config);
    out << fmt(angle) << ',' << fmt(p) << ',' << fmt(lin2db(std::max(p, 1e-300))) << '\n';
  }
  write_file(path, out.str());
}

std::pair<std::vector<double>, std::vector<double>> read_beampattern_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != "angle_deg,power_linear,power_db") {
    throw std::runtime_error("bad beampattern CSV header in " + path);
  }
  std::vector<double> angles, powers;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 3) throw std::runtime_error("bad beampattern CSV row in " + path);
    angles.push_back(std::stod(cells[0]));
    powers.push_back(std::stod(cells[1]));
  }
  return {angles, powers};
}

namespace {
const char* kSweepHeader =
    "axis_value,feasible_trials,infeasible_trials,"
    "mean_mse,se_mse,mean_sum_rate,se_sum_rate,mean_secrecy_rate,se_secrecy_rate,"
    "mean_min_user_sinr_db,se_min_user_sinr_db,mean_max_eve_sinr_db,se_max_eve_sinr_db";
}

void write_sweep_csv(const std::string& path, const SweepResult& sweep) {
  std::ostringstream out;
  out << kSweepHeader << '\n';
  for (const SweepPoint& p : sweep.points) {
    out << fmt(p.axis_value) << ',' << p.feasible_trials << ',' << p.infeasible_trials << ','
        << fmt(p.mean_mse) << ',' << fmt(p.se_mse) << ',' << fmt(p.mean_sum_rate) << ','
        << fmt(p.se_sum_rate) << ',' << fmt(p.mean_secrecy_rate) << ','
        << fmt(p.se_secrecy_rate) << ',' << fmt(p.mean_min_user_sinr_db) << ','
        << fmt(p.se_min_user_sinr_db) << ',' << fmt(p.mean_max_eve_sinr_db) << ','
        << fmt(p.se_max_eve_sinr_db) << '\n';
  }
  write_file(path, out.str());
}

SweepResult read_sweep_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != kSweepHeader) {
    throw std::runtime_error("bad sweep CSV header in " + path);
  }
  SweepResult sweep;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 13) throw std::runtime_error("bad sweep CSV row in " + path);
    SweepPoint p;
    p.axis_value = std::stod(cells[0]);
    p.feasible_trials = std::stoi(cells[1]);
    p.infeasible_trials = std::stoi(cells[2]);
    p.mean_mse = std::stod(cells[3]);
    p.se_mse = std::stod(cells[4]);
    p.mean_sum_rate = std::stod(cells[5]);
    p.se_sum_rate = std::stod(cells[6]);
    p.mean_secrecy_rate = std::stod(cells[7]);
    p.se_secrecy_rate = std::stod(cells[8]);
    p.mean_min_user_sinr_db = std::stod(cells[9]);
    p.se_min_user_sinr_db = std::stod(cells[10]);
    p.mean_max_eve_sinr_db = std::stod(cells[11]);
    p.se_max_eve_sinr_db = std::stod(cells[12]);
    sweep.points.push_back(p);
    sweep.trials = std::max(sweep.trials, p.feasible_trials + p.infeasible_trials);
  }
  return sweep;
}

}  // namespace dfrc::io
