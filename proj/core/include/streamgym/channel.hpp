#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "streamgym/trace.hpp"

namespace sgym {

enum class CcaKind {
  kLossBased,   // cubic window growth, multiplicative decrease on loss
  kModelBased,  // paces at the bottleneck estimate, insensitive to random loss
};

struct ChannelConfig {
  double btlbw_mbps = 3.0;
  double rtprop_s = 0.08;
  double buffer_bdp = 1.0;  // bottleneck queue capacity, multiples of the BDP
  double loss_rate = 0.0;   // per-packet drop probability
  double mss_bytes = 1500;

  double cubic_c = 0.4;
  double cubic_beta = 0.7;

  void validate() const;
};

// W(t) = C*(t - K)^3 + W_max with K = cbrt(W_max*beta/C), so W(K) = W_max.
double cubic_window(double elapsed_s, double w_max, double c = 0.4,
                    double beta = 0.7);

// One sample per granularity tick: bw = modeled goodput over the tick,
// rtprop = cfg.rtprop + modeled queuing delay at the tick.
TimedTrace generate_trace(const ChannelConfig& cfg, CcaKind cca, double duration_s,
                          double granularity_s, std::uint64_t seed,
                          std::string name = "");

// `repetitions` traces per level at 1 s granularity, all marked TRAIN; run
// split_corpus afterwards for a train/test assignment.
Corpus generate_dash_corpus(const std::vector<double>& levels_mbps, double rtprop_s,
                            CcaKind cca, int repetitions, double duration_s,
                            std::uint64_t seed, double loss_rate = 0.0,
                            double buffer_bdp = 1.0);

}  // namespace sgym
