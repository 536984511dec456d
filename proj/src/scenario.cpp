#include "dfrc/scenario.hpp"

#include <cmath>
#include <random>

namespace dfrc {

std::vector<double> SystemConfig::angle_grid() const {
  std::vector<double> grid;
  const int steps = static_cast<int>(std::llround((grid_max_deg - grid_min_deg) / grid_resolution_deg));
  grid.reserve(steps + 1);
  // Interpolate between the endpoints rather than accumulating multiples of
  // the resolution: rounding (e.g. under FMA contraction) can otherwise push
  // the last point fractionally past grid_max_deg.
  for (int i = 0; i < steps; ++i) {
    grid.push_back(grid_min_deg + (i * (grid_max_deg - grid_min_deg)) / steps);
  }
  grid.push_back(grid_max_deg);
  return grid;
}

void SystemConfig::validate() const {
  if (num_antennas < 2) throw std::invalid_argument("num_antennas must be >= 2");
  if (total_power <= 0) throw std::invalid_argument("total_power must be > 0");
  if (noise_var_lu <= 0 || noise_var_eve <= 0) throw std::invalid_argument("noise variances must be > 0");
  if (grid_resolution_deg <= 0) throw std::invalid_argument("grid_resolution_deg must be > 0");
  if (grid_min_deg >= grid_max_deg) throw std::invalid_argument("angle grid range is empty");
}

void Scenario::validate() const {
  config.validate();
  const int k = num_users();
  if (k < 1 || k > config.num_antennas) throw std::invalid_argument("need 1 <= K <= M");
  if (channel.cols() != config.num_antennas) throw std::invalid_argument("channel column count != M");
  for (const Target& t : targets) {
    if (t.angle_deg <= -90.0 || t.angle_deg >= 90.0) throw std::invalid_argument("target angle outside (-90, 90)");
    if (std::abs(t.path_loss) <= 0.0) throw std::invalid_argument("target path loss must be nonzero");
    if (t.angle_uncertainty_deg < 0.0) throw std::invalid_argument("angle uncertainty must be >= 0");
  }
}

CVec steering_vector(const SystemConfig& config, double angle_deg) {
  if (angle_deg < -90.0 || angle_deg > 90.0) {
    throw std::domain_error("steering angle outside [-90, 90] degrees");
  }
  const int m = config.num_antennas;
  const double phase_step = 2.0 * kPi * config.spacing_ratio * std::sin(deg2rad(angle_deg));
  CVec a(m);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (int i = 0; i < m; ++i) {
    a[i] = std::polar(scale, phase_step * i);
  }
  return a;
}

namespace {

CMat draw_gaussian_channel(int num_users, int num_antennas, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  CMat h(num_users, num_antennas);
  for (int r = 0; r < num_users; ++r) {
    for (int c = 0; c < num_antennas; ++c) {
      h(r, c) = cxd(normal(rng), normal(rng));
    }
  }
  return h;
}

bool full_row_rank(const CMat& h) {
  Eigen::JacobiSVD<CMat> svd(h);
  const auto& sv = svd.singularValues();
  return sv.size() > 0 && sv[sv.size() - 1] > 1e-10 * sv[0];
}

}  // namespace

CMat generate_channel(int num_users, int num_antennas, std::uint64_t seed) {
  if (num_users < 1) throw std::invalid_argument("num_users must be >= 1");
  if (num_users > num_antennas) throw std::invalid_argument("generate_channel requires K <= M");
  constexpr int kRetryBudget = 8;
  for (int attempt = 0; attempt <= kRetryBudget; ++attempt) {
    // sub-seed derivation keeps retries deterministic
    const std::uint64_t sub = seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(attempt);
    CMat h = draw_gaussian_channel(num_users, num_antennas, sub);
    if (full_row_rank(h)) return h;
  }
  throw std::runtime_error("generate_channel: rank-deficient channel after retry budget");
}

TransmitFrame synthesize_frame(const PrecoderPair& precoders, int num_symbols,
                               std::uint64_t seed, RadarSequenceMode mode) {
  if (num_symbols < 1) throw std::invalid_argument("num_symbols must be >= 1");
  const int m = static_cast<int>(precoders.radar.rows());
  const int k = static_cast<int>(precoders.comm.cols());
  if (precoders.comm.rows() != m) throw std::invalid_argument("precoder row mismatch");

  TransmitFrame frame;
  frame.num_symbols = num_symbols;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> quadrant(0, 3);
  auto qpsk = [&]() {
    static const cxd table[4] = {
        {M_SQRT1_2, M_SQRT1_2}, {-M_SQRT1_2, M_SQRT1_2},
        {-M_SQRT1_2, -M_SQRT1_2}, {M_SQRT1_2, -M_SQRT1_2}};
    return table[quadrant(rng)];
  };

  frame.comm_symbols = CMat(k, num_symbols);
  for (int n = 0; n < num_symbols; ++n) {
    for (int r = 0; r < k; ++r) frame.comm_symbols(r, n) = qpsk();
  }

  frame.radar_symbols = CMat(m, num_symbols);
  if (mode == RadarSequenceMode::ExactOrthogonal) {
    if (num_symbols < m) throw std::invalid_argument("exact-orthogonal mode needs N >= M");
    // DFT chips: rows are orthogonal over the frame, S S^H / N = I exactly.
    for (int r = 0; r < m; ++r) {
      for (int n = 0; n < num_symbols; ++n) {
        frame.radar_symbols(r, n) = std::polar(1.0, 2.0 * kPi * r * n / num_symbols);
      }
    }
  } else {
    for (int n = 0; n < num_symbols; ++n) {
      for (int r = 0; r < m; ++r) frame.radar_symbols(r, n) = qpsk();
    }
  }

  frame.transmit_signal = precoders.radar * frame.radar_symbols + precoders.comm * frame.comm_symbols;
  return frame;
}

}  // namespace dfrc
