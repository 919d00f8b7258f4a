#pragma once

#include <span>
#include <utility>
#include <vector>

#include "streamgym/manifest.hpp"
#include "streamgym/trace.hpp"
#include "streamgym/util.hpp"

namespace sgym {

enum class SimVariant {
  kSimO,  // fixed propagation delay, multiplicative noise on the total delay
  kSimT,  // per-packet timed-trace replay
};

struct SimConfig {
  SimVariant variant = SimVariant::kSimT;
  double fixed_rtprop_s = 0.080;    // SIM-O propagation delay
  double noise_fraction = 0.10;     // SIM-O: total delay scaled by U[1-f, 1+f]
  double packet_size_bytes = 1500;  // SIM-T
  double buffer_capacity_s = 60.0;
  double loss_rate = 0.0;           // SIM-T per-packet loss, retransmitted

  void validate() const;
};

struct SimState {
  double wall_time_s = 0;
  double buffer_level_s = 0;
  int next_chunk = 0;
  int last_quality = -1;  // -1 = none (startup)
};

struct StepResult {
  double download_time_s = 0;  // dtrans + propagation (SIM-O: noise applied)
  double dtrans_s = 0;
  double rtprop_effective_s = 0;
  double rebuffer_s = 0;
  double sleep_s = 0;
  double buffer_after_s = 0;
  double chunk_size_bytes = 0;
  bool done = false;
};

// Propagation delay of a whole chunk exchange: half the request's rtprop plus
// the largest response-packet half-rtprop.
double chunk_rtprop(double request_rtprop_s, std::span<const double> response_rtprops_s);

struct DtransResult {
  double dtrans_s = 0;
  std::vector<double> packet_rtprops_s;  // rtprop seen by each delivered packet
};

// Splits the chunk into packet_size packets (last one short) and sends them
// back to back; each packet transmits at the trace bandwidth sampled at its
// own send time.
DtransResult chunk_dtrans(double chunk_size_bytes, double packet_size_bytes,
                          const TimedTrace& trace, double start_time_s);

// Same, with per-packet Bernoulli loss; a lost packet's send time is consumed
// and the packet is retransmitted at the then-current trace time.
DtransResult chunk_dtrans_lossy(double chunk_size_bytes, double packet_size_bytes,
                                const TimedTrace& trace, double start_time_s,
                                double loss_rate, Rng& rng);

// Time to drain chunk_size through the piecewise-constant trace starting at
// start_time (the SIM-O transmission model).
double fluid_drain_time(double chunk_size_bytes, const TimedTrace& trace,
                        double start_time_s);

// Downloads chunk state.next_chunk at the given quality and applies the
// playout-buffer update. The first chunk's download is startup delay, not
// rebuffering. Throws if the session is already finished.
std::pair<SimState, StepResult> step(const SimState& state, int quality,
                                     const TimedTrace& trace,
                                     const VideoManifest& manifest,
                                     const SimConfig& cfg, Rng& rng);

}  // namespace sgym
