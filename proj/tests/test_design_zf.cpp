#include <cmath>
#include <complex>

#include "doctest.h"
#include "dfrc/design.hpp"
#include "dfrc/evaluation.hpp"
#include "dfrc/radar.hpp"
#include "dfrc/scenario.hpp"
#include "test_util.hpp"

using namespace dfrc;

namespace {

BeampatternSpec spec_for(const Scenario& sc) {
  return BeampatternSpec::for_targets(sc.targets);
}

int cone_dim(const conic::ConicProblem& prob, conic::ConeKind kind) {
  int n = 0;
  for (const auto& c : prob.cones)
    if (c.kind == kind) n += c.dim;
  return n;
}

int count_cones(const conic::ConicProblem& prob, conic::ConeKind kind) {
  int n = 0;
  for (const auto& c : prob.cones)
    if (c.kind == kind) ++n;
  return n;
}

}  // namespace

TEST_CASE("interference-nulling problem has the expected structure") {
  const int m = 4, k = 2;
  const Scenario sc = testutil::make_scenario(m, k, {0.0}, 3, 5.0);
  const SecurityThresholds thr{db2lin(10.0), db2lin(0.0)};
  const conic::ConicProblem prob = build_p3(sc, spec_for(sc), thr);

  // R, R_com, one rho per user, alpha and the epigraph variable.
  CHECK(prob.num_vars == 2 * m * m + k + 2);
  // Power rows plus the diagonalization of H X H^H for both matrix variables:
  // K real diagonal rows and K(K-1) real off-diagonal rows each.
  CHECK(cone_dim(prob, conic::ConeKind::Zero) == m + 2 * (k + k * (k - 1)));
  // alpha floor, rho floors, one leakage row per target.
  CHECK(cone_dim(prob, conic::ConeKind::NonNeg) == 1 + k + 1);
  // R, R_com, and the radar remainder.
  CHECK(count_cones(prob, conic::ConeKind::Psd) == 3);
}

TEST_CASE("precoder recovery from a diagonal solution is exact") {
  const CMat h = CMat::Identity(2, 2);
  CMat comm = CMat::Zero(2, 2);
  comm(0, 0) = 0.4;
  comm(1, 1) = 0.9;
  const PrecoderPair p = recover_precoders_zf(comm, comm, h);
  CHECK(std::abs(p.comm(0, 0) - cxd(std::sqrt(0.4), 0.0)) < 1e-12);
  CHECK(std::abs(p.comm(1, 1) - cxd(std::sqrt(0.9), 0.0)) < 1e-12);
  CHECK(std::abs(p.comm(0, 1)) < 1e-12);
  CHECK(std::abs(p.comm(1, 0)) < 1e-12);
  CHECK(p.radar.norm() < 1e-9);
}

TEST_CASE("recovered precoders satisfy the nulling structure exactly") {
  // Synthetic covariances engineered to satisfy the diagonalization equalities.
  const int m = 5, k = 2;
  const CMat h = generate_channel(k, m, 8);
  // Build R_com = H^+ D H^+H with positive diagonal D: H R_com H^H = D.
  const CMat gram = h * h.adjoint();
  const CMat pinv = gram.llt().solve(h).adjoint();
  Vec d(k);
  d << 0.3, 0.7;
  const CMat comm_cov = pinv * d.asDiagonal() * pinv.adjoint();
  // Radar part lives in the null space of H.
  const CMat proj = CMat::Identity(m, m) - pinv * h;
  const CMat rad = proj * testutil::random_psd(m, 9) * proj.adjoint();
  const CMat cov = comm_cov + rad;

  const PrecoderPair p = recover_precoders_zf(cov, comm_cov, h);
  const CMat hwc = h * p.comm;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (i == j) {
        // Diagonal fixed to +sqrt(rho_k).
        CHECK(hwc(i, i).real() == doctest::Approx(std::sqrt(d[i])).epsilon(1e-9));
        CHECK(std::abs(hwc(i, i).imag()) < 1e-9);
      } else {
        CHECK(std::abs(hwc(i, j)) < 1e-9);
      }
    }
  }
  // The eigen square root turns the ~1e-15 projected residual into ~1e-8
  // amplitudes, so the nulling check cannot be tighter than that.
  CHECK((h * p.radar).norm() < 1e-7 * h.norm());
  const CMat rebuilt = p.comm * p.comm.adjoint() + p.radar * p.radar.adjoint();
  CHECK((rebuilt - cov).norm() < 1e-8 * (1.0 + cov.norm()));
}

TEST_CASE("solved design nulls radar interference and meets the thresholds exactly") {
  const Scenario sc = testutil::make_scenario(6, 2, {-5.0}, 13, 2.0);
  const SecurityThresholds thr{db2lin(10.0), db2lin(0.0)};
  const DesignResult r = solve_zf(sc, spec_for(sc), thr, testutil::fast_settings());
  REQUIRE(r.status == conic::SolveStatus::Optimal);

  const double pt = sc.config.total_power;
  CHECK((sc.channel * r.precoders.radar).norm() <= 1e-6 * sc.channel.norm() * std::sqrt(pt));

  const CMat hwc = sc.channel * r.precoders.comm;
  const double scale = hwc.cwiseAbs().maxCoeff();
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      if (i == j) {
        CHECK(hwc(i, i).real() > 0.0);
        CHECK(std::abs(hwc(i, i).imag()) <= 1e-6 * scale);
      } else {
        CHECK(std::abs(hwc(i, j)) <= 1e-6 * scale);
      }
    }
  }

  // With interference nulled, the SINR is exactly rho_k / sigma_c^2.
  const Vec gammas = user_sinr(r, sc);
  for (int k = 0; k < 2; ++k) {
    const double rho = std::norm(hwc(k, k));
    CHECK(gammas[k] == doctest::Approx(rho / sc.config.noise_var_lu).epsilon(1e-9));
    CHECK(gammas[k] >= thr.gamma_c * (1.0 - 1e-6));
  }

  // Leakage ceiling holds post-recovery. The solver enforces it on the
  // covariances to 1e-6; the matrix square root in the recovery propagates
  // that as ~sqrt(tol) into the precoders, hence the looser slack here.
  const Vec eves = eve_sinr(r, sc);
  CHECK(eves[0] <= *thr.gamma_e * (1.0 + 5e-3));

  // The radar remainder is PSD down to the tolerance floor.
  const CMat remainder = r.covariance - r.precoders.comm * r.precoders.comm.adjoint();
  Eigen::SelfAdjointEigenSolver<CMat> eig(0.5 * (remainder + remainder.adjoint()));
  CHECK(eig.eigenvalues().minCoeff() >= -1e-6 * remainder.trace().real());
}

TEST_CASE("interference nulling can never beat the relaxed design") {
  const BeampatternSpec ref_spec = BeampatternSpec::for_targets({{0.0, {1.0, 0.0}, 0.0}});
  for (unsigned seed : {2u, 7u, 21u}) {
    const Scenario sc = testutil::make_scenario(6, 2, {0.0}, seed, 5.0);
    const SecurityThresholds thr{db2lin(10.0), db2lin(0.0)};
    const DesignResult sdr = solve_sdr(sc, ref_spec, thr, testutil::fast_settings());
    const DesignResult zf = solve_zf(sc, ref_spec, thr, testutil::fast_settings());
    CHECK(zf.objective >= sdr.objective - 1e-8);
  }
}

TEST_CASE("two-user nulling objective is insensitive to the QoS threshold") {
  // The nulling equalities already fix the communication subspace; for K = 2
  // the threshold only moves the rho floor, which stays inactive.
  const Scenario sc = testutil::make_scenario(6, 2, {10.0}, 17, 5.0);
  const BeampatternSpec spec = spec_for(sc);
  std::vector<double> objectives;
  for (double gc_db : {6.0, 10.0, 14.0}) {
    const SecurityThresholds thr{db2lin(gc_db), db2lin(0.0)};
    objectives.push_back(solve_zf(sc, spec, thr, testutil::fast_settings()).objective);
  }
  const double lo = *std::min_element(objectives.begin(), objectives.end());
  const double hi = *std::max_element(objectives.begin(), objectives.end());
  CHECK((hi - lo) <= 0.01 * hi);
}

TEST_CASE("aligned channels are infeasible for the nulling design too") {
  const Scenario sc = testutil::make_aligned_scenario(6, 2, 0.0, 43, 2.0);
  const SecurityThresholds thr{db2lin(10.0), db2lin(0.0)};
  CHECK_THROWS_AS((void)solve_zf(sc, spec_for(sc), thr, testutil::fast_settings()),
                  InfeasibleDesign);
}
