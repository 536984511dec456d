#pragma once

#include <cstdint>

#include "dfrc/types.hpp"

namespace dfrc {

/// Unit-norm ULA steering vector a(theta), element m = (1/sqrt(M)) exp(j 2pi (d/lambda) m sin theta).
CVec steering_vector(const SystemConfig& config, double angle_deg);

/// K x M Rayleigh channel with i.i.d. CN(0,1) entries, deterministic under seed.
/// Regenerates with derived sub-seeds (up to 8 retries) if the row rank drops below K.
CMat generate_channel(int num_users, int num_antennas, std::uint64_t seed);

enum class RadarSequenceMode {
  QpskRandom,       // random unit-power QPSK chips, E{ss^H} = I only in expectation
  ExactOrthogonal,  // DFT chips, S S^H / N = I exactly (requires N >= M)
};

struct TransmitFrame {
  CMat radar_symbols;   // M x N
  CMat comm_symbols;    // K x N
  CMat transmit_signal; // M x N, X = Wr S + Wc C
  int num_symbols = 0;
};

TransmitFrame synthesize_frame(const PrecoderPair& precoders, int num_symbols,
                               std::uint64_t seed,
                               RadarSequenceMode mode = RadarSequenceMode::QpskRandom);

}  // namespace dfrc
