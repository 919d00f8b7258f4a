#pragma once

#include <optional>
#include <vector>

namespace sgym {

enum class UtilityKind { kLinear, kHd };

// One (bitrate, quality-value) rung of the HD utility table.
struct UtilityEntry {
  double bitrate_mbps;
  double value;
};

struct QoEConfig {
  UtilityKind utility = UtilityKind::kLinear;
  double mu = 4.3;  // rebuffer penalty, utility units per stalled second
  std::vector<UtilityEntry> hd_table;  // required for kHd; strictly increasing

  static QoEConfig linear(double mu = 4.3);
  // The six-rung table for the reference ladder, mu = 8.
  static QoEConfig hd_default();
};

struct QoeSample {
  double bitrate_mbps = 0;
  double rebuffer_s = 0;
};
using SessionLog = std::vector<QoeSample>;

// Linear: the bitrate itself. HD: table lookup; throws on a ladder miss.
double utility(double bitrate_mbps, const QoEConfig& cfg);

// q(R) - mu*T - |q(R) - q(prev_R)|; the smoothness term is attributed to the
// later chunk of a switch pair and omitted for the first chunk, so per-chunk
// rewards sum exactly to the session metric.
double chunk_reward(std::optional<double> prev_bitrate_mbps, double bitrate_mbps,
                    double rebuffer_s, const QoEConfig& cfg);

// Session aggregate, computed from the three sums directly (not by summing
// chunk_reward; the decomposition identity is checked in tests).
double session_qoe(const SessionLog& log, const QoEConfig& cfg);

}  // namespace sgym
