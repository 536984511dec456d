#pragma once

#include <optional>

#include "dfrc/conic/builder.hpp"
#include "dfrc/conic/problem.hpp"
#include "dfrc/radar.hpp"
#include "dfrc/types.hpp"

namespace dfrc {

/// SINR thresholds, stored linear. gamma_c == 0 drops the LU QoS constraints;
/// an unset gamma_e drops the eavesdropper constraints (the Gamma_e -> inf limit).
struct SecurityThresholds {
  double gamma_c = 10.0;                 // linear, >= 0
  std::optional<double> gamma_e = 1.0;   // linear, > 0; nullopt = unconstrained

  static SecurityThresholds from_db(double gamma_c_db, double gamma_e_db) {
    return {db2lin(gamma_c_db), db2lin(gamma_e_db)};
  }
  bool pls_enabled() const { return gamma_e.has_value(); }
  void validate() const;
};

struct DesignResult {
  CMat covariance;                 // R
  std::vector<CMat> per_user_covs; // rank-1 R~_k
  PrecoderPair precoders;
  double alpha = 0.0;
  double objective = 0.0;          // L_r at the optimum
  conic::SolveStatus status = conic::SolveStatus::NumericalLimit;
  int iterations = 0;
  double solve_seconds = 0.0;
};

/// Spherical CSI uncertainty around the scenario channel rows.
struct CsiUncertainty {
  std::vector<double> radii;  // u_k, one per user; all zero degrades to perfect CSI

  static CsiUncertainty none(int num_users) { return {std::vector<double>(num_users, 0.0)}; }
  static CsiUncertainty relative(const Scenario& scenario, double fraction);
};

/// Discrete angle sets covering each target's direction interval.
struct AngularUncertaintySet {
  std::vector<std::vector<double>> angles_per_target;

  static AngularUncertaintySet build(const Scenario& scenario, double resolution_deg);
};

// --- SDR design (relaxed P2 + tight rank-1 reconstruction) ---

conic::ConicProblem build_p2(const Scenario& scenario, const BeampatternSpec& spec,
                             const SecurityThresholds& thresholds);

DesignResult solve_sdr(const Scenario& scenario, const BeampatternSpec& spec,
                       const SecurityThresholds& thresholds,
                       const conic::SolverSettings& settings = {});

/// w_k = (h^H R h)^{-1/2} R h; throws ReconstructionError on a degenerate inner product.
CVec reconstruct_rank1(const CMat& user_cov, const CVec& channel);

/// Deterministic eigen square root W with W W^H = R (descending eigenvalues,
/// eigenvector phases fixed); throws NotPsdError below the eigenvalue tolerance.
CMat factorize_radar_cov(const CMat& radar_cov);

// --- ZF design (P3 + Cholesky/row-QR recovery) ---

conic::ConicProblem build_p3(const Scenario& scenario, const BeampatternSpec& spec,
                             const SecurityThresholds& thresholds);

PrecoderPair recover_precoders_zf(const CMat& cov, const CMat& comm_cov, const CMat& channel);

DesignResult solve_zf(const Scenario& scenario, const BeampatternSpec& spec,
                      const SecurityThresholds& thresholds,
                      const conic::SolverSettings& settings = {});

// --- Robust design (P4: S-procedure LMIs + angular uncertainty sets) ---

conic::ConicProblem build_p4(const Scenario& scenario, const BeampatternSpec& spec,
                             const SecurityThresholds& thresholds,
                             const CsiUncertainty& csi_unc,
                             const AngularUncertaintySet& ang_unc);

DesignResult solve_robust(const Scenario& scenario, const BeampatternSpec& spec,
                          const SecurityThresholds& thresholds,
                          const CsiUncertainty& csi_unc,
                          const AngularUncertaintySet& ang_unc,
                          const conic::SolverSettings& settings = {});

/// Widened template for robust runs: every window grows to cover the largest
/// angular uncertainty (delta_eff = delta + 2 max_q dtheta_q).
BeampatternSpec widen_for_uncertainty(const BeampatternSpec& spec, const Scenario& scenario);

}  // namespace dfrc
