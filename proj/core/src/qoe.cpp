#include "streamgym/qoe.hpp"

#include <cmath>
#include <stdexcept>

#include "streamgym/util.hpp"

namespace sgym {

QoEConfig QoEConfig::linear(double mu) {
  QoEConfig cfg;
  cfg.utility = UtilityKind::kLinear;
  cfg.mu = mu;
  return cfg;
}

QoEConfig QoEConfig::hd_default() {
  QoEConfig cfg;
  cfg.utility = UtilityKind::kHd;
  cfg.mu = 8.0;
  cfg.hd_table = {{0.3, 1}, {0.75, 2}, {1.2, 3}, {1.85, 12}, {2.85, 15}, {4.3, 20}};
  return cfg;
}

double utility(double bitrate_mbps, const QoEConfig& cfg) {
  if (cfg.utility == UtilityKind::kLinear) {
    if (!(bitrate_mbps > 0)) {
      throw std::invalid_argument("utility: bitrate must be > 0");
    }
    return bitrate_mbps;
  }
  for (const auto& e : cfg.hd_table) {
    if (std::abs(e.bitrate_mbps - bitrate_mbps) <=
        1e-9 * std::max(1.0, std::abs(e.bitrate_mbps))) {
      return e.value;
    }
  }
  throw std::invalid_argument("utility: bitrate " + format_double(bitrate_mbps) +
                              " Mbps is not in the HD table");
}

double chunk_reward(std::optional<double> prev_bitrate_mbps, double bitrate_mbps,
                    double rebuffer_s, const QoEConfig& cfg) {
  if (!(rebuffer_s >= 0)) {
    throw std::invalid_argument("chunk_reward: rebuffer time must be >= 0");
  }
  double r = utility(bitrate_mbps, cfg) - cfg.mu * rebuffer_s;
  if (prev_bitrate_mbps) {
    r -= std::abs(utility(bitrate_mbps, cfg) - utility(*prev_bitrate_mbps, cfg));
  }
  return r;
}

double session_qoe(const SessionLog& log, const QoEConfig& cfg) {
  if (log.empty()) {
    throw std::invalid_argument("session_qoe: empty log");
  }
  double utility_sum = 0;
  double rebuffer_sum = 0;
  double switch_sum = 0;
  for (std::size_t n = 0; n < log.size(); ++n) {
    utility_sum += utility(log[n].bitrate_mbps, cfg);
    rebuffer_sum += log[n].rebuffer_s;
    if (n + 1 < log.size()) {
      switch_sum += std::abs(utility(log[n + 1].bitrate_mbps, cfg) -
                             utility(log[n].bitrate_mbps, cfg));
    }
  }
  return utility_sum - cfg.mu * rebuffer_sum - switch_sum;
}

}  // namespace sgym
