#pragma once

#include <string>

#include "dfrc/design.hpp"
#include "dfrc/evaluation.hpp"
#include "dfrc/types.hpp"

namespace dfrc::io {

/// JSON scenario files; complex numbers serialize as [re, im] pairs and all
/// doubles round-trip losslessly. Unknown keys are rejected.
std::string scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const std::string& text);

void write_scenario(const std::string& path, const Scenario& scenario);
Scenario read_scenario(const std::string& path);

std::string result_to_json(const DesignResult& result);
DesignResult result_from_json(const std::string& text);
void write_result(const std::string& path, const DesignResult& result);
DesignResult read_result(const std::string& path);

std::string metrics_to_json(const MetricsReport& report);

/// CSV with header "angle_deg,power_linear,power_db" over the config grid.
void write_beampattern_csv(const std::string& path, const CMat& covariance,
                           const SystemConfig& config);
/// Parses a beampattern CSV back into (angle, linear power) columns.
std::pair<std::vector<double>, std::vector<double>> read_beampattern_csv(const std::string& path);

/// One row per sweep point: means plus standard errors for each metric.
void write_sweep_csv(const std::string& path, const SweepResult& sweep);
SweepResult read_sweep_csv(const std::string& path);

}  // namespace dfrc::io
