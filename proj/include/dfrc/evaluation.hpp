#pragma once

#include <optional>
#include <vector>

#include "dfrc/design.hpp"
#include "dfrc/radar.hpp"
#include "dfrc/scenario.hpp"
#include "dfrc/types.hpp"

namespace dfrc {

/// Per-design performance metrics. SINRs are stored linear; dB views provided.
struct MetricsReport {
  Vec user_sinr;            // gamma_k, linear
  Vec eve_sinr;             // gamma~_q, linear (empty when Q = 0)
  double sum_rate = 0.0;    // sum_k log2(1 + gamma_k), bits/s/Hz
  double secrecy_rate = 0.0;  // max(0, min_k rate_k - max_q rate~_q)
  double beampattern_mse = 0.0;
  bool feasible = true;

  Vec user_sinr_db() const;
  Vec eve_sinr_db() const;
};

/// gamma_k = h_k^H R_k h_k / (sum_{i != k} h_k^H R_i h_k + h_k^H W_r W_r^H h_k + sigma_c^2).
Vec user_sinr(const DesignResult& result, const Scenario& scenario);

/// Worst case: every communication stream counts as desired signal at the Eve.
/// gamma~_q = |b_q|^2 a_q^H (sum_k R_k) a_q / (|b_q|^2 a_q^H W_r W_r^H a_q + sigma_e^2).
Vec eve_sinr(const DesignResult& result, const Scenario& scenario);

/// (1/L) sum_l |P(theta_l; cov) - P(theta_l; reference)|^2 over the config grid.
double beampattern_mse(const CMat& cov, const CMat& reference, const SystemConfig& config);

/// Full report against a radar-only reference covariance.
MetricsReport compute_metrics(const DesignResult& result, const Scenario& scenario,
                              const CMat& radar_reference);

/// Frame-level consistency check: synthesizes an N-sample frame and compares
/// empirical statistics against the analytic ones.
struct EmpiricalReport {
  Vec analytic_sinr;        // linear
  Vec empirical_sinr;       // linear, from per-stream power split
  double cov_error_fro = 0.0;      // ||R_emp - R||_F
  double cov_error_rel = 0.0;      // relative to ||R||_F
  double max_sinr_dev_db = 0.0;    // max_k |dB gap|
};

EmpiricalReport empirical_validate(const DesignResult& result, const Scenario& scenario,
                                   int num_samples, uint64_t seed,
                                   RadarSequenceMode mode = RadarSequenceMode::ExactOrthogonal);

// --- Monte-Carlo sweeps ---

enum class SweepAxis { GammaCdb, GammaEdb, CsiRadiusFraction };
enum class DesignerKind { Sdr, Zf, Robust };

struct SweepSpec {
  SweepAxis axis = SweepAxis::GammaCdb;
  std::vector<double> axis_values;       // dB for the gamma axes, fraction for CSI
  DesignerKind designer = DesignerKind::Sdr;
  double gamma_c_db = 10.0;              // fixed value when not the axis
  std::optional<double> gamma_e_db = 0.0;  // nullopt = no eavesdropper constraint
  double beam_width_deg = 10.0;
  double crosscorr_weight = 1.0;
  // robust-only knobs
  double csi_radius_fraction = 0.0;
  double angle_uncertainty_deg = 0.0;
  double angle_resolution_deg = 0.1;
};

/// Random-draw protocol shared by all sweeps: i.i.d. CN(0,1) channels and
/// target angles uniform in [-60, 60] degrees.
struct TrialTemplate {
  SystemConfig config;
  int num_users = 2;
  int num_targets = 1;
};

Scenario draw_trial_scenario(const TrialTemplate& tmpl, uint64_t seed);

struct SweepPoint {
  double axis_value = 0.0;
  int feasible_trials = 0;
  int infeasible_trials = 0;
  double mean_mse = 0.0, se_mse = 0.0;
  double mean_sum_rate = 0.0, se_sum_rate = 0.0;
  double mean_secrecy_rate = 0.0, se_secrecy_rate = 0.0;
  double mean_min_user_sinr_db = 0.0, se_min_user_sinr_db = 0.0;
  double mean_max_eve_sinr_db = 0.0, se_max_eve_sinr_db = 0.0;
};

struct SweepResult {
  SweepSpec spec;
  int trials = 0;
  uint64_t base_seed = 0;
  std::vector<SweepPoint> points;
};

/// Runs `trials` independent draws per axis value; trial t reuses seed
/// base_seed + t across axis values so curves differ only in the swept knob.
/// Infeasible trials are excluded from the means and counted. Throws if every
/// trial at some point is infeasible.
SweepResult run_sweep(const TrialTemplate& tmpl, const SweepSpec& spec, int trials,
                      uint64_t base_seed, const conic::SolverSettings& settings = {});

}  // namespace dfrc
