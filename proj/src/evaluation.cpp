#include "dfrc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "dfrc/scenario.hpp"

namespace dfrc {

namespace {

Vec to_db(const Vec& linear) {
  Vec out(linear.size());
  for (int i = 0; i < linear.size(); ++i) out[i] = lin2db(std::max(linear[i], 1e-300));
  return out;
}

double quad(const CMat& m, const CVec& v) { return std::max(v.dot(m * v).real(), 0.0); }

}  // namespace

Vec MetricsReport::user_sinr_db() const { return to_db(user_sinr); }
Vec MetricsReport::eve_sinr_db() const { return to_db(eve_sinr); }

Vec user_sinr(const DesignResult& result, const Scenario& scenario) {
  const int k = scenario.num_users();
  const CMat radar_cov = result.precoders.radar * result.precoders.radar.adjoint();
  Vec sinr(k);
  for (int i = 0; i < k; ++i) {
    const CVec h = scenario.user_channel(i);
    double signal = 0.0;
    double interference = quad(radar_cov, h);
    for (int j = 0; j < static_cast<int>(result.per_user_covs.size()); ++j) {
      const double p = quad(result.per_user_covs[j], h);
      if (j == i) signal = p; else interference += p;
    }
    sinr[i] = signal / (interference + scenario.config.noise_var_lu);
  }
  return sinr;
}

Vec eve_sinr(const DesignResult& result, const Scenario& scenario) {
  const int q = scenario.num_targets();
  CMat comm_sum = CMat::Zero(scenario.config.num_antennas, scenario.config.num_antennas);
  for (const CMat& rk : result.per_user_covs) comm_sum += rk;
  const CMat radar_cov = result.precoders.radar * result.precoders.radar.adjoint();
  Vec sinr(q);
  for (int i = 0; i < q; ++i) {
    const Target& t = scenario.targets[i];
    const CVec a = steering_vector(scenario.config, t.angle_deg);
    const double gain = std::norm(t.path_loss);
    sinr[i] = gain * quad(comm_sum, a) /
              (gain * quad(radar_cov, a) + scenario.config.noise_var_eve);
  }
  return sinr;
}

double beampattern_mse(const CMat& cov, const CMat& reference, const SystemConfig& config) {
  const std::vector<double> grid = config.angle_grid();
  double acc = 0.0;
  for (double angle : grid) {
    const double d = beampattern(cov, angle, config) - beampattern(reference, angle, config);
    acc += d * d;
  }
  return acc / static_cast<double>(grid.size());
}

MetricsReport compute_metrics(const DesignResult& result, const Scenario& scenario,
                              const CMat& radar_reference) {
  MetricsReport report;
  report.user_sinr = user_sinr(result, scenario);
  report.eve_sinr = eve_sinr(result, scenario);
  report.beampattern_mse = beampattern_mse(result.covariance, radar_reference, scenario.config);
  report.sum_rate = 0.0;
  double min_user_rate = std::numeric_limits<double>::infinity();
  for (int i = 0; i < report.user_sinr.size(); ++i) {
    const double rate = std::log2(1.0 + report.user_sinr[i]);
    report.sum_rate += rate;
    min_user_rate = std::min(min_user_rate, rate);
  }
  double max_eve_rate = 0.0;
  for (int i = 0; i < report.eve_sinr.size(); ++i) {
    max_eve_rate = std::max(max_eve_rate, std::log2(1.0 + report.eve_sinr[i]));
  }
  report.secrecy_rate =
      report.user_sinr.size() > 0 ? std::max(0.0, min_user_rate - max_eve_rate) : 0.0;
  report.feasible = true;
  return report;
}

EmpiricalReport empirical_validate(const DesignResult& result, const Scenario& scenario,
                                   int num_samples, uint64_t seed, RadarSequenceMode mode) {
  const TransmitFrame frame = synthesize_frame(result.precoders, num_samples, seed, mode);
  const int k = scenario.num_users();
  const int n = frame.num_symbols;

  EmpiricalReport report;
  report.analytic_sinr = user_sinr(result, scenario);
  report.empirical_sinr = Vec::Zero(k);

  const CMat analytic_cov = result.precoders.radar * result.precoders.radar.adjoint() +
                            result.precoders.comm * result.precoders.comm.adjoint();
  const CMat emp_cov =
      frame.transmit_signal * frame.transmit_signal.adjoint() / static_cast<double>(n);
  report.cov_error_fro = (emp_cov - analytic_cov).norm();
  report.cov_error_rel = report.cov_error_fro / std::max(analytic_cov.norm(), 1e-300);

  // Per-user power split by known symbol streams: the receive samples are
  // y_k = h_k^H W_c C + h_k^H W_r S; stream k of the first term is the signal.
  report.max_sinr_dev_db = 0.0;
  for (int i = 0; i < k; ++i) {
    const Eigen::RowVectorXcd hrow = scenario.channel.row(i);
    const Eigen::RowVectorXcd comm_rx = hrow * result.precoders.comm * frame.comm_symbols;
    const Eigen::RowVectorXcd own =
        (hrow * result.precoders.comm.col(i)).value() * frame.comm_symbols.row(i);
    const Eigen::RowVectorXcd radar_rx = hrow * result.precoders.radar * frame.radar_symbols;
    const double sig = own.squaredNorm() / n;
    const double interf = (comm_rx - own).squaredNorm() / n + radar_rx.squaredNorm() / n;
    report.empirical_sinr[i] = sig / (interf + scenario.config.noise_var_lu);
    if (report.analytic_sinr[i] > 0 && report.empirical_sinr[i] > 0) {
      report.max_sinr_dev_db =
          std::max(report.max_sinr_dev_db,
                   std::abs(lin2db(report.empirical_sinr[i]) - lin2db(report.analytic_sinr[i])));
    }
  }
  return report;
}

Scenario draw_trial_scenario(const TrialTemplate& tmpl, uint64_t seed) {
  Scenario scenario;
  scenario.config = tmpl.config;
  scenario.channel = generate_channel(tmpl.num_users, tmpl.config.num_antennas, seed);
  std::mt19937_64 rng(seed ^ 0xa5a5a5a5a5a5a5a5ULL);
  std::uniform_real_distribution<double> angle_dist(-60.0, 60.0);
  for (int q = 0; q < tmpl.num_targets; ++q) {
    Target t;
    t.angle_deg = angle_dist(rng);
    scenario.targets.push_back(t);
  }
  return scenario;
}

namespace {

struct Accumulator {
  std::vector<double> samples;
  void add(double v) { samples.push_back(v); }
  double mean() const {
    if (samples.empty()) return 0.0;
    double s = 0.0;
    for (double v : samples) s += v;
    return s / static_cast<double>(samples.size());
  }
  double stderr_of_mean() const {
    const size_t n = samples.size();
    if (n < 2) return 0.0;
    const double m = mean();
    double var = 0.0;
    for (double v : samples) var += (v - m) * (v - m);
    var /= static_cast<double>(n - 1);
    return std::sqrt(var / static_cast<double>(n));
  }
};

}  // namespace

SweepResult run_sweep(const TrialTemplate& tmpl, const SweepSpec& spec, int trials,
                      uint64_t base_seed, const conic::SolverSettings& settings) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (spec.axis_values.empty()) throw std::invalid_argument("empty sweep axis");

  SweepResult result;
  result.spec = spec;
  result.trials = trials;
  result.base_seed = base_seed;

  // Draw the trial scenes once: the same scene is reused across axis values so
  // curves differ only in the swept knob. The radar-only reference depends
  // only on the drawn target angles, so it is also computed once per trial.
  std::vector<Scenario> scenes;
  std::vector<CMat> references;
  for (int t = 0; t < trials; ++t) {
    Scenario scene = draw_trial_scenario(tmpl, base_seed + static_cast<uint64_t>(t));
    for (Target& tg : scene.targets) tg.angle_uncertainty_deg = spec.angle_uncertainty_deg;
    BeampatternSpec pattern = BeampatternSpec::for_targets(scene.targets, spec.beam_width_deg,
                                                           spec.crosscorr_weight);
    references.push_back(radar_only_design(pattern, scene.config, settings).covariance);
    scenes.push_back(std::move(scene));
  }

  for (double axis_value : spec.axis_values) {
    double gamma_c_db = spec.gamma_c_db;
    std::optional<double> gamma_e_db = spec.gamma_e_db;
    double csi_fraction = spec.csi_radius_fraction;
    switch (spec.axis) {
      case SweepAxis::GammaCdb: gamma_c_db = axis_value; break;
      case SweepAxis::GammaEdb: gamma_e_db = axis_value; break;
      case SweepAxis::CsiRadiusFraction: csi_fraction = axis_value; break;
    }
    SecurityThresholds thresholds;
    thresholds.gamma_c = db2lin(gamma_c_db);
    thresholds.gamma_e = gamma_e_db ? std::optional<double>(db2lin(*gamma_e_db)) : std::nullopt;

    SweepPoint point;
    point.axis_value = axis_value;
    Accumulator mse, sum_rate, secrecy, min_sinr_db, max_eve_db;
    for (int t = 0; t < trials; ++t) {
      const Scenario& scene = scenes[t];
      const BeampatternSpec pattern = BeampatternSpec::for_targets(
          scene.targets, spec.beam_width_deg, spec.crosscorr_weight);
      try {
        DesignResult design;
        switch (spec.designer) {
          case DesignerKind::Sdr:
            design = solve_sdr(scene, pattern, thresholds, settings);
            break;
          case DesignerKind::Zf:
            design = solve_zf(scene, pattern, thresholds, settings);
            break;
          case DesignerKind::Robust:
            design = solve_robust(scene, pattern, thresholds,
                                  CsiUncertainty::relative(scene, csi_fraction),
                                  AngularUncertaintySet::build(scene, spec.angle_resolution_deg),
                                  settings);
            break;
        }
        const MetricsReport report = compute_metrics(design, scene, references[t]);
        mse.add(report.beampattern_mse);
        sum_rate.add(report.sum_rate);
        secrecy.add(report.secrecy_rate);
        min_sinr_db.add(report.user_sinr_db().minCoeff());
        if (report.eve_sinr.size() > 0) max_eve_db.add(report.eve_sinr_db().maxCoeff());
        ++point.feasible_trials;
      } catch (const InfeasibleDesign&) {
        ++point.infeasible_trials;
      }
    }
    if (point.feasible_trials == 0) {
      throw std::runtime_error("run_sweep: every trial infeasible at axis value " +
                               std::to_string(axis_value));
    }
    point.mean_mse = mse.mean();
    point.se_mse = mse.stderr_of_mean();
    point.mean_sum_rate = sum_rate.mean();
    point.se_sum_rate = sum_rate.stderr_of_mean();
    point.mean_secrecy_rate = secrecy.mean();
    point.se_secrecy_rate = secrecy.stderr_of_mean();
    point.mean_min_user_sinr_db = min_sinr_db.mean();
    point.se_min_user_sinr_db = min_sinr_db.stderr_of_mean();
    point.mean_max_eve_sinr_db = max_eve_db.mean();
    point.se_max_eve_sinr_db = max_eve_db.stderr_of_mean();
    result.points.push_back(point);
  }
  return result;
}

}  // namespace dfrc
