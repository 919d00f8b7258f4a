#pragma once

#include <vector>

#include "streamgym/manifest.hpp"
#include "streamgym/qoe.hpp"
#include "streamgym/sim.hpp"

namespace sgym {

enum class OracleMode { kExhaustive, kDp };

struct OracleResult {
  std::vector<int> qualities;
  double session_qoe = 0;
};

// Best quality sequence for the first `horizon` chunks under the noise-free
// SIM-T dynamics (the sim config's variant/loss are overridden).
//
// Exhaustive mode enumerates every sequence (horizon <= 9). DP mode quantizes
// the buffer to `buffer_quant_s` cells over (chunk, last quality, buffer),
// prices chunk n at the playback clock, and re-simulates the chosen sequence,
// so the reported QoE is always achievable.
OracleResult offline_optimal(const TimedTrace& trace, const VideoManifest& manifest,
                             const SimConfig& sim_cfg, const QoEConfig& qoe_cfg,
                             int horizon, OracleMode mode,
                             double buffer_quant_s = 0.1, int workers = 1);

}  // namespace sgym
