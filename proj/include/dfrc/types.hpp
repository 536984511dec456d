#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace dfrc {

using cxd = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double db2lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin2db(double lin) { return 10.0 * std::log10(lin); }

/// Uniform linear array + power/noise budget and the evaluation angle grid.
struct SystemConfig {
  int num_antennas = 10;
  double total_power = 1.0;       // Pt, linear watts
  double noise_var_lu = 0.01;     // sigma_c^2
  double noise_var_eve = 0.01;    // sigma_e^2
  double spacing_ratio = 0.5;     // d / lambda
  double grid_resolution_deg = 0.1;
  double grid_min_deg = -90.0;
  double grid_max_deg = 90.0;

  std::vector<double> angle_grid() const;
  void validate() const;
};

struct Target {
  double angle_deg = 0.0;
  cxd path_loss = {1.0, 0.0};          // beta_q
  double angle_uncertainty_deg = 0.0;  // delta-theta_q
};

/// Physical scene: config + downlink channel + target/eavesdropper set.
/// Row k of `channel` is h_k^H (so channel * x gives the LU receive samples).
struct Scenario {
  SystemConfig config;
  CMat channel;  // K x M
  std::vector<Target> targets;

  int num_users() const { return static_cast<int>(channel.rows()); }
  int num_targets() const { return static_cast<int>(targets.size()); }
  CVec user_channel(int k) const { return channel.row(k).adjoint(); }  // h_k
  void validate() const;
};

struct PrecoderPair {
  CMat comm;   // M x K
  CMat radar;  // M x M
};

class InfeasibleDesign : public std::runtime_error {
 public:
  explicit InfeasibleDesign(const std::string& what) : std::runtime_error(what) {}
};

class ReconstructionError : public std::runtime_error {
 public:
  explicit ReconstructionError(const std::string& what) : std::runtime_error(what) {}
};

class NotPsdError : public std::runtime_error {
 public:
  explicit NotPsdError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dfrc
