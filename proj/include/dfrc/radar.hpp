#pragma once

#include "dfrc/conic/builder.hpp"
#include "dfrc/conic/problem.hpp"
#include "dfrc/types.hpp"

namespace dfrc {

/// Desired-beampattern template and least-squares loss weights.
struct BeampatternSpec {
  std::vector<double> center_angles_deg;   // one window per target
  double beam_width_deg = 10.0;            // Delta
  double crosscorr_weight = 1.0;           // eta
  std::vector<double> crosscorr_angles_deg;  // cross-correlation direction set

  static BeampatternSpec for_targets(const std::vector<Target>& targets,
                                     double beam_width_deg = 10.0,
                                     double crosscorr_weight = 1.0);
  void validate() const;
};

/// a(theta)^H R a(theta); rejects non-Hermitian R, clips tiny negative values.
double beampattern(const CMat& covariance, double angle_deg, const SystemConfig& config);

/// a(theta2)^H R a(theta1).
cxd cross_correlation(const CMat& covariance, double angle1_deg, double angle2_deg,
                      const SystemConfig& config);

/// Indicator template: 1 inside any half-width window around a center angle
/// (boundary inclusive), 0 elsewhere.
double desired_pattern(const BeampatternSpec& spec, double angle_deg);

/// L_r = L_b + eta * L_c over the config grid; the cross-correlation term is
/// dropped when fewer than two cross-correlation angles are given.
double radar_loss(const CMat& covariance, double alpha, const BeampatternSpec& spec,
                  const SystemConfig& config);

struct RadarOnlyDesign {
  CMat covariance;
  double alpha = 0.0;
  double objective = 0.0;  // L_r at the optimum
};

/// Radar-only reference: minimize L_r subject to R PSD, diag(R) = Pt/M.
RadarOnlyDesign radar_only_design(const BeampatternSpec& spec, const SystemConfig& config,
                                  const conic::SolverSettings& settings = {});

/// Shared with the designers: epigraph variable t with ||residual stack|| <= t,
/// where the stack holds the weighted beampattern mismatch over the grid plus
/// the weighted cross-correlation terms. Returns t; objective L_r equals t^2.
int append_radar_objective(conic::ProblemBuilder& builder, const conic::HermVar& cov,
                           int alpha_var, const BeampatternSpec& spec,
                           const SystemConfig& config);

}  // namespace dfrc
