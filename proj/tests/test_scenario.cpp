#include <cmath>
#include <complex>

#include "doctest.h"
#include "dfrc/scenario.hpp"
#include "dfrc/types.hpp"
#include "test_util.hpp"

using namespace dfrc;

namespace {

SystemConfig config_with(int m, double grid_res = 0.1) {
  SystemConfig cfg;
  cfg.num_antennas = m;
  cfg.grid_resolution_deg = grid_res;
  return cfg;
}

}  // namespace

TEST_CASE("steering vector at broadside is the uniform vector") {
  const CVec a = steering_vector(config_with(4), 0.0);
  REQUIRE(a.size() == 4);
  for (int m = 0; m < 4; ++m) {
    CHECK(a(m).real() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(a(m).imag() == doctest::Approx(0.0).epsilon(1e-15));
  }
}

TEST_CASE("steering vector at endfire alternates sign for half-wavelength spacing") {
  const CVec a = steering_vector(config_with(2), 90.0);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(a(0) - cxd(r, 0.0)) < 1e-12);
  CHECK(std::abs(a(1) - cxd(-r, 0.0)) < 1e-12);
}

TEST_CASE("steering vector phase progression at 30 degrees") {
  // sin(30deg) = 1/2 puts element m at phase 2*pi*(1/2)*m*(1/2) = pi*m/2.
  const CVec a = steering_vector(config_with(10), 30.0);
  const double r = 1.0 / std::sqrt(10.0);
  for (int m = 0; m < 10; ++m) {
    const cxd expected = r * std::exp(cxd(0.0, kPi * m / 2.0));
    CHECK(std::abs(a(m) - expected) < 1e-12);
  }
}

TEST_CASE("steering vector has unit norm at arbitrary angles and sizes") {
  for (int m : {1, 3, 8, 16}) {
    for (double ang : {-89.5, -45.0, -7.3, 0.0, 12.9, 61.2, 90.0}) {
      CHECK(steering_vector(config_with(m), ang).norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("adjacent grid points give nearby steering vectors") {
  const SystemConfig cfg = config_with(10, 0.1);
  const std::vector<double> grid = cfg.angle_grid();
  double worst = 0.0;
  for (std::size_t l = 0; l + 1 < grid.size(); ++l) {
    const double gap =
        (steering_vector(cfg, grid[l]) - steering_vector(cfg, grid[l + 1])).norm();
    worst = std::max(worst, gap);
  }
  CHECK(worst < 0.2);
}

TEST_CASE("angle grid covers the configured range inclusively") {
  const SystemConfig cfg = config_with(4, 0.1);
  const std::vector<double> grid = cfg.angle_grid();
  CHECK(grid.size() == 1801);
  CHECK(grid.front() == doctest::Approx(-90.0));
  CHECK(grid.back() == doctest::Approx(90.0));
}

TEST_CASE("channel generation is deterministic under the seed") {
  const CMat a = generate_channel(3, 6, 42);
  const CMat b = generate_channel(3, 6, 42);
  const CMat c = generate_channel(3, 6, 43);
  CHECK((a - b).norm() == 0.0);
  CHECK((a - c).norm() > 0.0);
  CHECK(a.rows() == 3);
  CHECK(a.cols() == 6);
}

TEST_CASE("channel entries have unit second moment") {
  // 1e5 entries: the sample mean of |h|^2 (variance 1 per entry) should land
  // within ~2% of 1.
  double acc = 0.0;
  long count = 0;
  for (unsigned seed = 0; seed < 1250; ++seed) {
    const CMat h = generate_channel(8, 10, seed);
    acc += h.squaredNorm();
    count += h.size();
  }
  CHECK(acc / static_cast<double>(count) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("more users than antennas is rejected") {
  CHECK_THROWS_AS((void)generate_channel(5, 4, 1), std::invalid_argument);
}

TEST_CASE("scenario validation rejects inconsistent shapes") {
  Scenario sc = testutil::make_scenario(4, 2, {0.0}, 7);
  CHECK_NOTHROW(sc.validate());
  sc.channel = generate_channel(2, 5, 7);  // M mismatch with config
  CHECK_THROWS(sc.validate());
}

TEST_CASE("transmit frame equals the precoded symbol streams") {
  PrecoderPair p;
  p.comm = testutil::random_complex(5, 2, 3);
  p.radar = testutil::random_complex(5, 5, 4);
  const TransmitFrame f = synthesize_frame(p, 64, 11);
  REQUIRE(f.transmit_signal.rows() == 5);
  REQUIRE(f.transmit_signal.cols() == 64);
  const CMat expected = p.radar * f.radar_symbols + p.comm * f.comm_symbols;
  CHECK((f.transmit_signal - expected).norm() < 1e-12);
  // QPSK chips are unit modulus.
  for (int c = 0; c < f.radar_symbols.cols(); ++c)
    for (int r = 0; r < f.radar_symbols.rows(); ++r)
      CHECK(std::abs(f.radar_symbols(r, c)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("exact-orthogonal radar chips satisfy S S^H / N = identity") {
  PrecoderPair p;
  p.comm = CMat::Zero(8, 1);
  p.radar = CMat::Identity(8, 8);
  const TransmitFrame f = synthesize_frame(p, 8, 5, RadarSequenceMode::ExactOrthogonal);
  const CMat gram = f.radar_symbols * f.radar_symbols.adjoint() / 8.0;
  CHECK((gram - CMat::Identity(8, 8)).norm() < 1e-10);
}

TEST_CASE("empirical covariance of a long frame approaches the design covariance") {
  PrecoderPair p;
  p.comm = testutil::random_complex(4, 2, 21) * 0.3;
  p.radar = testutil::random_complex(4, 4, 22) * 0.3;
  const CMat design_cov = p.comm * p.comm.adjoint() + p.radar * p.radar.adjoint();
  const int n = 1 << 16;
  const TransmitFrame f = synthesize_frame(p, n, 9, RadarSequenceMode::ExactOrthogonal);
  const CMat emp = f.transmit_signal * f.transmit_signal.adjoint() / static_cast<double>(n);
  CHECK((emp - design_cov).norm() / design_cov.norm() < 5.0 / std::sqrt(double(n)));
}

TEST_CASE("frame synthesis is deterministic under the seed") {
  PrecoderPair p;
  p.comm = testutil::random_complex(4, 2, 31);
  p.radar = testutil::random_complex(4, 4, 32);
  const TransmitFrame a = synthesize_frame(p, 128, 77);
  const TransmitFrame b = synthesize_frame(p, 128, 77);
  CHECK((a.transmit_signal - b.transmit_signal).norm() == 0.0);
}
