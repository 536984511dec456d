#include "dfrc/design.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <chrono>
#include <cmath>

#include "dfrc/scenario.hpp"

namespace dfrc {

void SecurityThresholds::validate() const {
  if (gamma_c < 0) throw std::invalid_argument("gamma_c must be >= 0");
  if (gamma_e && *gamma_e <= 0) throw std::invalid_argument("gamma_e must be > 0");
}

CsiUncertainty CsiUncertainty::relative(const Scenario& scenario, double fraction) {
  CsiUncertainty unc;
  for (int k = 0; k < scenario.num_users(); ++k) {
    unc.radii.push_back(fraction * scenario.user_channel(k).norm());
  }
  return unc;
}

AngularUncertaintySet AngularUncertaintySet::build(const Scenario& scenario,
                                                   double resolution_deg) {
  AngularUncertaintySet set;
  for (const Target& t : scenario.targets) {
    std::vector<double> angles;
    if (t.angle_uncertainty_deg <= 0.0) {
      angles.push_back(t.angle_deg);
    } else {
      const double lo = t.angle_deg - t.angle_uncertainty_deg;
      const double hi = t.angle_deg + t.angle_uncertainty_deg;
      const int steps = static_cast<int>(std::llround((hi - lo) / resolution_deg));
      for (int i = 0; i <= steps; ++i) angles.push_back(lo + i * resolution_deg);
      if (angles.back() != hi) angles.push_back(hi);
    }
    set.angles_per_target.push_back(std::move(angles));
  }
  return set;
}

BeampatternSpec widen_for_uncertainty(const BeampatternSpec& spec, const Scenario& scenario) {
  double max_unc = 0.0;
  for (const Target& t : scenario.targets) max_unc = std::max(max_unc, t.angle_uncertainty_deg);
  BeampatternSpec widened = spec;
  widened.beam_width_deg = spec.beam_width_deg + 2.0 * max_unc;
  return widened;
}

namespace {

using conic::CxExpr;
using conic::HermExpr;
using conic::HermVar;
using conic::LinExpr;
using conic::ProblemBuilder;

constexpr double kAlphaFloor = 1e-9;

void add_power_and_alpha(ProblemBuilder& builder, const HermVar& cov, int alpha,
                         const SystemConfig& config) {
  for (int i = 0; i < config.num_antennas; ++i) {
    builder.add_eq(builder.diag_entry(cov, i) -
                   ProblemBuilder::constant(config.total_power / config.num_antennas));
  }
  builder.add_nonneg(builder.scalar(alpha) - ProblemBuilder::constant(kAlphaFloor));
}

// (1 + 1/Gamma_e) a^H Rcom a <= a^H R a + sigma_e^2/|beta|^2, with Rcom either an
// explicit variable or the sum of the per-user covariances.
LinExpr eve_row(ProblemBuilder& builder, const HermVar& cov,
                const std::vector<HermVar>& comm_covs, const CVec& steer,
                double gamma_e, double noise_over_beta2) {
  LinExpr row = builder.quad_form(cov, steer);
  row += ProblemBuilder::constant(noise_over_beta2);
  const double factor = 1.0 + 1.0 / gamma_e;
  for (const HermVar& rk : comm_covs) {
    row -= factor * builder.quad_form(rk, steer);
  }
  return row;
}

struct SdrBuild {
  ProblemBuilder builder;
  HermVar cov;
  std::vector<HermVar> user_covs;
  int alpha = -1;
};

SdrBuild make_p2(const Scenario& scenario, const BeampatternSpec& spec,
                 const SecurityThresholds& thresholds) {
  scenario.validate();
  spec.validate();
  thresholds.validate();
  const SystemConfig& cfg = scenario.config;
  const int m = cfg.num_antennas;
  const int k = scenario.num_users();
  const bool com_active = thresholds.gamma_c > 0.0;

  SdrBuild built;
  ProblemBuilder& b = built.builder;
  built.cov = b.add_hermitian(m);
  if (com_active) {
    for (int i = 0; i < k; ++i) built.user_covs.push_back(b.add_hermitian(m));
  }
  built.alpha = b.add_scalar();

  add_power_and_alpha(b, built.cov, built.alpha, cfg);

  if (com_active) {
    const double factor = 1.0 + 1.0 / thresholds.gamma_c;
    for (int i = 0; i < k; ++i) {
      const CVec h = scenario.user_channel(i);
      LinExpr row = factor * b.quad_form(built.user_covs[i], h);
      row -= b.quad_form(built.cov, h);
      row -= ProblemBuilder::constant(cfg.noise_var_lu);
      b.add_nonneg(row);
    }
  }
  if (thresholds.pls_enabled()) {
    for (const Target& t : scenario.targets) {
      const CVec a = steering_vector(cfg, t.angle_deg);
      b.add_nonneg(eve_row(b, built.cov, built.user_covs, a, *thresholds.gamma_e,
                           cfg.noise_var_eve / std::norm(t.path_loss)));
    }
  }

  b.add_psd(b.matrix_expr(built.cov));
  for (const HermVar& rk : built.user_covs) b.add_psd(b.matrix_expr(rk));
  if (!built.user_covs.empty()) {
    HermExpr residual = b.matrix_expr(built.cov);
    for (const HermVar& rk : built.user_covs) residual.add_scaled_var(rk, -1.0);
    b.add_psd(residual);
  }

  append_radar_objective(b, built.cov, built.alpha, spec, cfg);
  return built;
}

conic::ConicSolution run_or_throw(const conic::ConicProblem& prob,
                                  const conic::SolverSettings& settings,
                                  const char* what) {
  conic::ConicSolution sol = conic::solve(prob, settings);
  if (sol.status == conic::SolveStatus::Infeasible) {
    throw InfeasibleDesign(std::string(what) + ": problem infeasible");
  }
  if (sol.status != conic::SolveStatus::Optimal) {
    throw std::runtime_error(std::string(what) + ": solver failure (" +
                             conic::to_string(sol.status) + ")");
  }
  return sol;
}

DesignResult finalize_rank1_design(const Scenario& scenario, const SdrBuild& built,
                                   const conic::ConicSolution& sol, double gamma_c) {
  const int m = scenario.config.num_antennas;
  const int k = scenario.num_users();

  DesignResult result;
  result.status = sol.status;
  result.iterations = sol.iterations;
  result.covariance = built.builder.value(sol, built.cov);
  result.alpha = built.builder.value(sol, built.alpha);
  result.objective = sol.objective * sol.objective;

  result.precoders.comm = CMat::Zero(m, k);
  CMat comm_sum = CMat::Zero(m, m);
  for (int i = 0; i < k; ++i) {
    CVec w = CVec::Zero(m);
    if (!built.user_covs.empty()) {
      const CMat rk = built.builder.value(sol, built.user_covs[i]);
      const CVec h = scenario.user_channel(i);
      const double inner = (h.dot(rk * h)).real();
      if (inner <= 1e-12) {
        if (gamma_c > 0.0) {
          throw ReconstructionError("degenerate user inner product in rank-1 reconstruction");
        }
      } else {
        w = reconstruct_rank1(rk, h);
      }
    }
    result.precoders.comm.col(i) = w;
    result.per_user_covs.push_back(w * w.adjoint());
    comm_sum += result.per_user_covs.back();
  }
  result.precoders.radar = factorize_radar_cov(result.covariance - comm_sum);
  return result;
}

}  // namespace

conic::ConicProblem build_p2(const Scenario& scenario, const BeampatternSpec& spec,
                             const SecurityThresholds& thresholds) {
  return make_p2(scenario, spec, thresholds).builder.build();
}

CVec reconstruct_rank1(const CMat& user_cov, const CVec& channel) {
  const double inner = (channel.dot(user_cov * channel)).real();
  if (inner <= 1e-12) {
    throw ReconstructionError("h^H R h is numerically zero");
  }
  return (user_cov * channel) / std::sqrt(inner);
}

CMat factorize_radar_cov(const CMat& radar_cov) {
  const int m = static_cast<int>(radar_cov.rows());
  Eigen::SelfAdjointEigenSolver<CMat> eig(0.5 * (radar_cov + radar_cov.adjoint()));
  const Vec& vals = eig.eigenvalues();  // ascending
  const double trace = std::max(vals.sum(), 0.0);
  if (vals[0] < -1e-6 * std::max(trace, 1e-12)) {
    throw NotPsdError("radar covariance has a significantly negative eigenvalue");
  }
  CMat w = CMat::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    const int src = m - 1 - i;  // descending order
    const double lambda = std::max(vals[src], 0.0);
    CVec v = eig.eigenvectors().col(src);
    // fix the phase so the largest-magnitude component is real positive
    int pivot = 0;
    v.cwiseAbs().maxCoeff(&pivot);
    if (std::abs(v[pivot]) > 0) v *= std::conj(v[pivot]) / std::abs(v[pivot]);
    w.col(i) = std::sqrt(lambda) * v;
  }
  return w;
}

DesignResult solve_sdr(const Scenario& scenario, const BeampatternSpec& spec,
                       const SecurityThresholds& thresholds,
                       const conic::SolverSettings& settings) {
  const auto t0 = std::chrono::steady_clock::now();
  SdrBuild built = make_p2(scenario, spec, thresholds);
  conic::ConicSolution sol = run_or_throw(built.builder.build(), settings, "solve_sdr");
  DesignResult result = finalize_rank1_design(scenario, built, sol, thresholds.gamma_c);
  result.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

namespace {

struct ZfBuild {
  ProblemBuilder builder;
  HermVar cov, comm_cov;
  std::vector<int> rho;
  int alpha = -1;
};

ZfBuild make_p3(const Scenario& scenario, const BeampatternSpec& spec,
                const SecurityThresholds& thresholds) {
  scenario.validate();
  spec.validate();
  thresholds.validate();
  const SystemConfig& cfg = scenario.config;
  const int m = cfg.num_antennas;
  const int k = scenario.num_users();

  ZfBuild built;
  ProblemBuilder& b = built.builder;
  built.cov = b.add_hermitian(m);
  built.comm_cov = b.add_hermitian(m);
  for (int i = 0; i < k; ++i) built.rho.push_back(b.add_scalar());
  built.alpha = b.add_scalar();

  add_power_and_alpha(b, built.cov, built.alpha, cfg);

  // H X H^H = diag(rho) for both the full and the communication covariance
  for (const HermVar& var : {built.cov, built.comm_cov}) {
    for (int i = 0; i < k; ++i) {
      const CVec hi = scenario.user_channel(i);
      b.add_eq(b.quad_form(var, hi) - b.scalar(built.rho[i]));
      for (int j = i + 1; j < k; ++j) {
        const CVec hj = scenario.user_channel(j);
        const CxExpr off = b.sesq_form(var, hi, hj);
        b.add_eq(off.real());
        b.add_eq(off.imag());
      }
    }
  }

  const double rho_floor = thresholds.gamma_c * cfg.noise_var_lu;
  for (int i = 0; i < k; ++i) {
    b.add_nonneg(b.scalar(built.rho[i]) - ProblemBuilder::constant(rho_floor));
  }
  if (thresholds.pls_enabled()) {
    for (const Target& t : scenario.targets) {
      const CVec a = steering_vector(cfg, t.angle_deg);
      b.add_nonneg(eve_row(b, built.cov, {built.comm_cov}, a, *thresholds.gamma_e,
                           cfg.noise_var_eve / std::norm(t.path_loss)));
    }
  }

  b.add_psd(b.matrix_expr(built.cov));
  b.add_psd(b.matrix_expr(built.comm_cov));
  HermExpr residual = b.matrix_expr(built.cov);
  residual.add_scaled_var(built.comm_cov, -1.0);
  b.add_psd(residual);

  append_radar_objective(b, built.cov, built.alpha, spec, cfg);
  return built;
}

CMat psd_factor(const CMat& a) {
  Eigen::LLT<CMat> llt(a);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  // boundary-rank solutions: fall back to the eigen square root
  Eigen::SelfAdjointEigenSolver<CMat> eig(0.5 * (a + a.adjoint()));
  return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

}  // namespace

conic::ConicProblem build_p3(const Scenario& scenario, const BeampatternSpec& spec,
                             const SecurityThresholds& thresholds) {
  return make_p3(scenario, spec, thresholds).builder.build();
}

PrecoderPair recover_precoders_zf(const CMat& cov, const CMat& comm_cov, const CMat& channel) {
  const int m = static_cast<int>(channel.cols());
  const int k = static_cast<int>(channel.rows());

  const CMat lc = psd_factor(comm_cov);
  const CMat hlc_h = (channel * lc).adjoint();  // M x K
  Eigen::HouseholderQR<CMat> qr(hlc_h);
  CMat q = qr.householderQ();
  CMat r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();

  // phase convention: real nonnegative diagonal of L_h = R^H
  for (int i = 0; i < k; ++i) {
    const cxd d = r(i, i);
    if (std::abs(d) > 0) {
      const cxd phase = d / std::abs(d);
      r.row(i) *= std::conj(phase);
      q.col(i) *= phase;
    }
  }

  PrecoderPair precoders;
  precoders.comm = lc * q.leftCols(k);

  // The interior-point solution satisfies the nulling equalities only to
  // solver tolerance, which the factorizations amplify to ~sqrt(tol). Polish
  // with the channel pseudo-inverse: make H W_c exactly diagonal and push the
  // radar covariance into the channel null space, restoring the exact-
  // arithmetic properties of this construction.
  const CMat gram = channel * channel.adjoint();  // K x K, full rank for generic H
  Eigen::LLT<CMat> gram_llt(gram);
  const CMat pinv_h = gram_llt.solve(channel).adjoint();  // H^+ = H^H (H H^H)^{-1}
  CMat hwc = channel * precoders.comm;
  hwc.diagonal().setZero();  // off-diagonal leakage to cancel
  precoders.comm -= pinv_h * hwc;

  CMat rad_cov = cov - precoders.comm * precoders.comm.adjoint();
  const CMat hr = channel * rad_cov;
  rad_cov -= pinv_h * hr;                      // left null-space projection
  rad_cov -= (rad_cov * pinv_h) * channel;     // right null-space projection
  precoders.radar = factorize_radar_cov(0.5 * (rad_cov + rad_cov.adjoint()));
  (void)m;
  return precoders;
}

DesignResult solve_zf(const Scenario& scenario, const BeampatternSpec& spec,
                      const SecurityThresholds& thresholds,
                      const conic::SolverSettings& settings) {
  const auto t0 = std::chrono::steady_clock::now();
  ZfBuild built = make_p3(scenario, spec, thresholds);
  conic::ConicSolution sol = run_or_throw(built.builder.build(), settings, "solve_zf");

  const int k = scenario.num_users();
  for (int i = 0; i < k; ++i) {
    if (thresholds.gamma_c > 0.0 && built.builder.value(sol, built.rho[i]) <= 1e-12) {
      throw ReconstructionError("degenerate rho in ZF recovery");
    }
  }

  DesignResult result;
  result.status = sol.status;
  result.iterations = sol.iterations;
  result.covariance = built.builder.value(sol, built.cov);
  result.alpha = built.builder.value(sol, built.alpha);
  result.objective = sol.objective * sol.objective;
  result.precoders = recover_precoders_zf(result.covariance,
                                          built.builder.value(sol, built.comm_cov),
                                          scenario.channel);
  for (int i = 0; i < k; ++i) {
    const CVec w = result.precoders.comm.col(i);
    result.per_user_covs.push_back(w * w.adjoint());
  }
  result.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

namespace {

SdrBuild make_p4(const Scenario& scenario, const BeampatternSpec& spec,
                 const SecurityThresholds& thresholds, const CsiUncertainty& csi_unc,
                 const AngularUncertaintySet& ang_unc) {
  scenario.validate();
  thresholds.validate();
  const SystemConfig& cfg = scenario.config;
  const int m = cfg.num_antennas;
  const int k = scenario.num_users();
  const bool com_active = thresholds.gamma_c > 0.0;
  if (com_active && static_cast<int>(csi_unc.radii.size()) != k) {
    throw std::invalid_argument("csi uncertainty radii count != K");
  }
  if (ang_unc.angles_per_target.size() != scenario.targets.size()) {
    throw std::invalid_argument("angular uncertainty set count != Q");
  }

  const BeampatternSpec widened = widen_for_uncertainty(spec, scenario);
  widened.validate();

  SdrBuild built;
  ProblemBuilder& b = built.builder;
  built.cov = b.add_hermitian(m);
  if (com_active) {
    for (int i = 0; i < k; ++i) built.user_covs.push_back(b.add_hermitian(m));
  }
  built.alpha = b.add_scalar();

  add_power_and_alpha(b, built.cov, built.alpha, cfg);

  if (com_active) {
    const double factor = 1.0 + 1.0 / thresholds.gamma_c;
    for (int i = 0; i < k; ++i) {
      const CVec h = scenario.user_channel(i);
      const double radius = csi_unc.radii[i];
      if (radius <= 0.0) {
        LinExpr row = factor * b.quad_form(built.user_covs[i], h);
        row -= b.quad_form(built.cov, h);
        row -= ProblemBuilder::constant(cfg.noise_var_lu);
        b.add_nonneg(row);
        continue;
      }
      // S-procedure LMI over the CSI sphere, S = (1 + 1/Gamma_c) R_k - R
      const int t_var = b.add_scalar();
      b.add_nonneg(b.scalar(t_var));
      HermExpr lmi(m + 1);
      lmi.add_scaled_var(built.user_covs[i], factor);
      lmi.add_scaled_var(built.cov, -1.0);
      for (int d = 0; d < m; ++d) lmi.at(d, d).terms.emplace_back(t_var, cxd(1.0, 0.0));
      for (int col = 0; col < m; ++col) {
        CVec e = CVec::Zero(m);
        e[col] = 1.0;
        CxExpr border = b.sesq_form(built.user_covs[i], h, e);
        border *= factor;
        CxExpr r_part = b.sesq_form(built.cov, h, e);
        r_part *= -1.0;
        border += r_part;
        lmi.at(m, col) += border;
      }
      LinExpr corner = factor * b.quad_form(built.user_covs[i], h);
      corner -= b.quad_form(built.cov, h);
      corner -= ProblemBuilder::constant(cfg.noise_var_lu);
      corner -= (radius * radius) * b.scalar(t_var);
      CxExpr corner_cx;
      for (const auto& [var, coeff] : corner.terms) corner_cx.terms.emplace_back(var, cxd(coeff, 0.0));
      corner_cx.constant = corner.constant;
      lmi.at(m, m) += corner_cx;
      b.add_psd(lmi);
    }
  }

  if (thresholds.pls_enabled()) {
    for (size_t q = 0; q < scenario.targets.size(); ++q) {
      const double noise_over_beta2 =
          cfg.noise_var_eve / std::norm(scenario.targets[q].path_loss);
      for (double angle : ang_unc.angles_per_target[q]) {
        const CVec a = steering_vector(cfg, angle);
        b.add_nonneg(eve_row(b, built.cov, built.user_covs, a, *thresholds.gamma_e,
                             noise_over_beta2));
      }
    }
  }

  b.add_psd(b.matrix_expr(built.cov));
  for (const HermVar& rk : built.user_covs) b.add_psd(b.matrix_expr(rk));
  if (!built.user_covs.empty()) {
    HermExpr residual = b.matrix_expr(built.cov);
    for (const HermVar& rk : built.user_covs) residual.add_scaled_var(rk, -1.0);
    b.add_psd(residual);
  }

  append_radar_objective(b, built.cov, built.alpha, widened, cfg);
  return built;
}

}  // namespace

conic::ConicProblem build_p4(const Scenario& scenario, const BeampatternSpec& spec,
                             const SecurityThresholds& thresholds,
                             const CsiUncertainty& csi_unc,
                             const AngularUncertaintySet& ang_unc) {
  return make_p4(scenario, spec, thresholds, csi_unc, ang_unc).builder.build();
}

DesignResult solve_robust(const Scenario& scenario, const BeampatternSpec& spec,
                          const SecurityThresholds& thresholds,
                          const CsiUncertainty& csi_unc,
                          const AngularUncertaintySet& ang_unc,
                          const conic::SolverSettings& settings) {
  const auto t0 = std::chrono::steady_clock::now();
  SdrBuild built = make_p4(scenario, spec, thresholds, csi_unc, ang_unc);
  conic::ConicSolution sol = run_or_throw(built.builder.build(), settings, "solve_robust");
  DesignResult result = finalize_rank1_design(scenario, built, sol, thresholds.gamma_c);
  result.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace dfrc
