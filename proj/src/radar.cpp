#include "dfrc/radar.hpp"

#include <cmath>

#include "dfrc/scenario.hpp"

namespace dfrc {

BeampatternSpec BeampatternSpec::for_targets(const std::vector<Target>& targets,
                                             double beam_width_deg, double crosscorr_weight) {
  BeampatternSpec spec;
  spec.beam_width_deg = beam_width_deg;
  spec.crosscorr_weight = crosscorr_weight;
  for (const Target& t : targets) {
    spec.center_angles_deg.push_back(t.angle_deg);
    spec.crosscorr_angles_deg.push_back(t.angle_deg);
  }
  return spec;
}

void BeampatternSpec::validate() const {
  if (beam_width_deg <= 0) throw std::invalid_argument("beam width must be > 0");
  if (crosscorr_weight < 0) throw std::invalid_argument("crosscorr weight must be >= 0");
  for (size_t p = 0; p < crosscorr_angles_deg.size(); ++p) {
    if (crosscorr_angles_deg[p] <= -90.0 || crosscorr_angles_deg[p] >= 90.0) {
      throw std::invalid_argument("crosscorr angle outside (-90, 90)");
    }
    for (size_t q = p + 1; q < crosscorr_angles_deg.size(); ++q) {
      if (crosscorr_angles_deg[p] == crosscorr_angles_deg[q]) {
        throw std::invalid_argument("crosscorr angles must be pairwise distinct");
      }
    }
  }
}

namespace {

void require_hermitian(const CMat& a) {
  const double scale = a.norm();
  if ((a - a.adjoint()).norm() > 1e-10 * std::max(scale, 1e-300)) {
    throw std::invalid_argument("matrix is not Hermitian");
  }
}

}  // namespace

double beampattern(const CMat& covariance, double angle_deg, const SystemConfig& config) {
  require_hermitian(covariance);
  const CVec a = steering_vector(config, angle_deg);
  const cxd v = a.dot(covariance * a);  // Eigen dot conjugates the left argument
  return std::max(0.0, v.real());
}

cxd cross_correlation(const CMat& covariance, double angle1_deg, double angle2_deg,
                      const SystemConfig& config) {
  const CVec a1 = steering_vector(config, angle1_deg);
  const CVec a2 = steering_vector(config, angle2_deg);
  return a2.dot(covariance * a1);
}

double desired_pattern(const BeampatternSpec& spec, double angle_deg) {
  const double half = spec.beam_width_deg / 2.0;
  for (double center : spec.center_angles_deg) {
    if (angle_deg >= center - half && angle_deg <= center + half) return 1.0;
  }
  return 0.0;
}

double radar_loss(const CMat& covariance, double alpha, const BeampatternSpec& spec,
                  const SystemConfig& config) {
  if (alpha <= 0) throw std::invalid_argument("alpha must be > 0");
  const std::vector<double> grid = config.angle_grid();
  double lb = 0.0;
  for (double theta : grid) {
    const double r = alpha * desired_pattern(spec, theta) - beampattern(covariance, theta, config);
    lb += r * r;
  }
  lb /= static_cast<double>(grid.size());

  const int p = static_cast<int>(spec.crosscorr_angles_deg.size());
  double lc = 0.0;
  if (p >= 2) {
    for (int i = 0; i < p; ++i) {
      for (int j = i + 1; j < p; ++j) {
        lc += std::norm(cross_correlation(covariance, spec.crosscorr_angles_deg[i],
                                          spec.crosscorr_angles_deg[j], config));
      }
    }
    lc *= 2.0 / (static_cast<double>(p) * p - p);
  }
  return lb + spec.crosscorr_weight * lc;
}

int append_radar_objective(conic::ProblemBuilder& builder, const conic::HermVar& cov,
                           int alpha_var, const BeampatternSpec& spec,
                           const SystemConfig& config) {
  const std::vector<double> grid = config.angle_grid();
  const double wb = 1.0 / std::sqrt(static_cast<double>(grid.size()));

  std::vector<conic::LinExpr> residuals;
  residuals.reserve(grid.size() + spec.crosscorr_angles_deg.size() * spec.crosscorr_angles_deg.size());
  for (double theta : grid) {
    const CVec a = steering_vector(config, theta);
    conic::LinExpr r = desired_pattern(spec, theta) * builder.scalar(alpha_var);
    r -= builder.quad_form(cov, a);
    r *= wb;
    residuals.push_back(std::move(r));
  }

  const int p = static_cast<int>(spec.crosscorr_angles_deg.size());
  if (p >= 2 && spec.crosscorr_weight > 0.0) {
    const double wc =
        std::sqrt(spec.crosscorr_weight * 2.0 / (static_cast<double>(p) * p - p));
    for (int i = 0; i < p; ++i) {
      const CVec ai = steering_vector(config, spec.crosscorr_angles_deg[i]);
      for (int j = i + 1; j < p; ++j) {
        const CVec aj = steering_vector(config, spec.crosscorr_angles_deg[j]);
        conic::CxExpr cc = builder.sesq_form(cov, aj, ai);
        conic::LinExpr re = cc.real();
        conic::LinExpr im = cc.imag();
        re *= wc;
        im *= wc;
        residuals.push_back(std::move(re));
        residuals.push_back(std::move(im));
      }
    }
  }

  const int t = builder.add_scalar();
  builder.add_soc(builder.scalar(t), std::move(residuals));
  builder.minimize(t);
  return t;
}

RadarOnlyDesign radar_only_design(const BeampatternSpec& spec, const SystemConfig& config,
                                  const conic::SolverSettings& settings) {
  spec.validate();
  const int m = config.num_antennas;
  conic::ProblemBuilder builder;
  const conic::HermVar cov = builder.add_hermitian(m);
  const int alpha = builder.add_scalar();

  builder.add_psd(builder.matrix_expr(cov));
  for (int i = 0; i < m; ++i) {
    builder.add_eq(builder.diag_entry(cov, i) - conic::ProblemBuilder::constant(config.total_power / m));
  }
  builder.add_nonneg(builder.scalar(alpha) - conic::ProblemBuilder::constant(1e-9));
  append_radar_objective(builder, cov, alpha, spec, config);

  const conic::ConicSolution sol = conic::solve(builder.build(), settings);
  if (sol.status != conic::SolveStatus::Optimal) {
    throw std::runtime_error("radar_only_design solver failure: " + conic::to_string(sol.status));
  }
  RadarOnlyDesign design;
  design.covariance = builder.value(sol, cov);
  design.alpha = builder.value(sol, alpha);
  design.objective = sol.objective * sol.objective;
  return design;
}

}  // namespace dfrc
