#include "streamgym/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sgym {

void ChannelConfig::validate() const {
  if (!(btlbw_mbps > 0)) throw std::invalid_argument("channel: btlbw must be > 0");
  if (!(rtprop_s > 0)) throw std::invalid_argument("channel: rtprop must be > 0");
  if (!(buffer_bdp >= 0)) throw std::invalid_argument("channel: buffer_bdp must be >= 0");
  if (!(loss_rate >= 0 && loss_rate < 1)) {
    throw std::invalid_argument("channel: loss_rate must be in [0, 1)");
  }
  if (!(mss_bytes > 0)) throw std::invalid_argument("channel: mss must be > 0");
  if (!(cubic_c > 0) || !(cubic_beta > 0 && cubic_beta < 1)) {
    throw std::invalid_argument("channel: bad cubic constants");
  }
}

double cubic_window(double elapsed_s, double w_max, double c, double beta) {
  const double k = std::cbrt(w_max * beta / c);
  const double d = elapsed_s - k;
  return c * d * d * d + w_max;
}

namespace {

std::vector<TraceSample> model_based_samples(const ChannelConfig& cfg, int ticks,
                                             double granularity_s) {
  // Paces at the bottleneck estimate with the queue held empty; random losses
  // cost retransmissions but never the rate.
  std::vector<TraceSample> samples(ticks);
  const double goodput = cfg.btlbw_mbps * (1 - cfg.loss_rate);
  for (int i = 0; i < ticks; ++i) {
    samples[i] = {i * granularity_s, goodput, cfg.rtprop_s};
  }
  return samples;
}

std::vector<TraceSample> loss_based_samples(const ChannelConfig& cfg, int ticks,
                                            double granularity_s, Rng& rng) {
  const double btlbw_bps = cfg.btlbw_mbps * 1e6;
  const double packet_bits = cfg.mss_bytes * 8;
  const double bdp_bits = btlbw_bps * cfg.rtprop_s;
  const double queue_cap_bits = cfg.buffer_bdp * bdp_bits;

  // Start one epoch below the overflow point so the first ramp probes the queue.
  double w_max = std::max((bdp_bits + queue_cap_bits) / packet_bits, 2.0);
  double epoch_s = 0;
  double queue_bits = 0;
  double since_reaction = std::numeric_limits<double>::infinity();

  const int substeps = std::max(1, static_cast<int>(std::lround(granularity_s / 0.01)));
  const double dt = granularity_s / substeps;

  std::vector<TraceSample> samples(ticks);
  for (int i = 0; i < ticks; ++i) {
    double delivered_bits = 0;
    for (int s = 0; s < substeps; ++s) {
      const double w = std::max(cubic_window(epoch_s, w_max, cfg.cubic_c, cfg.cubic_beta), 1.0);
      const double rtt = cfg.rtprop_s + queue_bits / btlbw_bps;
      const double inflow = w * packet_bits / rtt * dt;

      const double available = queue_bits + inflow;
      const double drained = std::min(available, btlbw_bps * dt);
      delivered_bits += drained;
      queue_bits = available - drained;

      bool loss = false;
      if (queue_bits > queue_cap_bits) {
        queue_bits = queue_cap_bits;  // tail drop
        loss = true;
      }
      if (cfg.loss_rate > 0) {
        const double packets = inflow / packet_bits;
        const double p_event = 1 - std::pow(1 - cfg.loss_rate, packets);
        if (uniform01(rng) < p_event) loss = true;
      }

      epoch_s += dt;
      since_reaction += dt;
      if (loss && since_reaction >= rtt) {
        // React at most once per RTT, as the window-based sender would.
        w_max = std::max(w, 2.0);
        epoch_s = 0;
        since_reaction = 0;
      }
    }
    const double goodput_mbps =
        delivered_bits / granularity_s / 1e6 * (1 - cfg.loss_rate);
    samples[i] = {i * granularity_s,
                  std::min(goodput_mbps, cfg.btlbw_mbps),
                  cfg.rtprop_s + queue_bits / btlbw_bps};
  }
  return samples;
}

}  // namespace

TimedTrace generate_trace(const ChannelConfig& cfg, CcaKind cca, double duration_s,
                          double granularity_s, std::uint64_t seed,
                          std::string name) {
  cfg.validate();
  if (!(granularity_s > 0) || duration_s < granularity_s) {
    throw std::invalid_argument("generate_trace: need duration >= granularity > 0");
  }
  const int ticks = std::max(1, static_cast<int>(std::lround(duration_s / granularity_s)));
  Rng rng(derive_seed(seed, "channel"));
  auto samples = cca == CcaKind::kModelBased
                     ? model_based_samples(cfg, ticks, granularity_s)
                     : loss_based_samples(cfg, ticks, granularity_s, rng);
  if (name.empty()) {
    name = (cca == CcaKind::kModelBased ? "model_" : "loss_") +
           format_double(cfg.btlbw_mbps) + "mbps";
  }
  return TimedTrace(std::move(name), std::move(samples));
}

Corpus generate_dash_corpus(const std::vector<double>& levels_mbps, double rtprop_s,
                            CcaKind cca, int repetitions, double duration_s,
                            std::uint64_t seed, double loss_rate,
                            double buffer_bdp) {
  if (levels_mbps.empty()) {
    throw std::invalid_argument("generate_dash_corpus: no levels");
  }
  if (repetitions < 1) {
    throw std::invalid_argument("generate_dash_corpus: repetitions must be >= 1");
  }
  Corpus corpus;
  for (std::size_t li = 0; li < levels_mbps.size(); ++li) {
    ChannelConfig cfg;
    cfg.btlbw_mbps = levels_mbps[li];
    cfg.rtprop_s = rtprop_s;
    cfg.loss_rate = loss_rate;
    cfg.buffer_bdp = buffer_bdp;
    for (int r = 0; r < repetitions; ++r) {
      const auto trace_seed = derive_seed(seed, "dash-trace", li * 100003 + r);
      std::string name = (cca == CcaKind::kModelBased ? "model_" : "loss_") +
                         format_double(levels_mbps[li]) + "mbps_r" + std::to_string(r);
      corpus.entries.push_back(
          {generate_trace(cfg, cca, duration_s, 1.0, trace_seed, std::move(name)),
           Split::kTrain});
    }
  }
  return corpus;
}

}  // namespace sgym
