#include "streamgym/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace sgym {

void SimConfig::validate() const {
  if (!(packet_size_bytes > 0)) {
    throw std::invalid_argument("sim: packet_size must be > 0");
  }
  if (!(noise_fraction >= 0 && noise_fraction < 1)) {
    throw std::invalid_argument("sim: noise_fraction must be in [0, 1)");
  }
  if (!(buffer_capacity_s > 0)) {
    throw std::invalid_argument("sim: buffer_capacity must be > 0");
  }
  if (!(loss_rate >= 0 && loss_rate < 1)) {
    throw std::invalid_argument("sim: loss_rate must be in [0, 1)");
  }
  if (!(fixed_rtprop_s >= 0)) {
    throw std::invalid_argument("sim: fixed_rtprop must be >= 0");
  }
}

double chunk_rtprop(double request_rtprop_s,
                    std::span<const double> response_rtprops_s) {
  if (response_rtprops_s.empty()) {
    throw std::invalid_argument("chunk_rtprop: no response packets");
  }
  if (request_rtprop_s < 0) {
    throw std::invalid_argument("chunk_rtprop: negative request rtprop");
  }
  double max_half = 0;
  for (double r : response_rtprops_s) {
    if (r < 0) {
      throw std::invalid_argument("chunk_rtprop: negative response rtprop");
    }
    max_half = std::max(max_half, r / 2.0);
  }
  return request_rtprop_s / 2.0 + max_half;
}

DtransResult chunk_dtrans(double chunk_size_bytes, double packet_size_bytes,
                          const TimedTrace& trace, double start_time_s) {
  if (!(chunk_size_bytes > 0)) {
    throw std::invalid_argument("chunk_dtrans: chunk size must be > 0");
  }
  DtransResult out;
  double t = start_time_s;
  double remaining = chunk_size_bytes;
  while (remaining > 0) {
    const double bytes = std::min(packet_size_bytes, remaining);
    const TraceSample& s = trace.sample_at(t);
    const double d = bytes * 8.0 / (s.bw * 1e6);
    out.packet_rtprops_s.push_back(s.rtprop);
    out.dtrans_s += d;
    t += d;
    remaining -= bytes;
  }
  return out;
}

DtransResult chunk_dtrans_lossy(double chunk_size_bytes, double packet_size_bytes,
                                const TimedTrace& trace, double start_time_s,
                                double loss_rate, Rng& rng) {
  if (loss_rate <= 0) {
    return chunk_dtrans(chunk_size_bytes, packet_size_bytes, trace, start_time_s);
  }
  if (!(chunk_size_bytes > 0)) {
    throw std::invalid_argument("chunk_dtrans: chunk size must be > 0");
  }
  std::deque<double> pending;
  for (double remaining = chunk_size_bytes; remaining > 0;
       remaining -= packet_size_bytes) {
    pending.push_back(std::min(packet_size_bytes, remaining));
  }
  DtransResult out;
  double t = start_time_s;
  while (!pending.empty()) {
    const double bytes = pending.front();
    pending.pop_front();
    const TraceSample& s = trace.sample_at(t);
    const double d = bytes * 8.0 / (s.bw * 1e6);
    out.dtrans_s += d;
    t += d;
    if (uniform01(rng) < loss_rate) {
      pending.push_back(bytes);  // retransmit at the then-current trace time
    } else {
      out.packet_rtprops_s.push_back(s.rtprop);
    }
  }
  return out;
}

double fluid_drain_time(double chunk_size_bytes, const TimedTrace& trace,
                        double start_time_s) {
  if (!(chunk_size_bytes > 0)) {
    throw std::invalid_argument("fluid_drain_time: chunk size must be > 0");
  }
  const auto& samples = trace.samples();
  const double period = trace.duration();
  double bits = chunk_size_bytes * 8.0;
  double phase = std::fmod(start_time_s, period);
  if (phase < 0) phase = 0;
  auto it = std::upper_bound(samples.begin(), samples.end(), phase,
                             [](double v, const TraceSample& s) { return v < s.t; });
  std::size_t idx = static_cast<std::size_t>(it - samples.begin()) - 1;
  double elapsed = 0;
  while (true) {
    const double seg_end = idx + 1 < samples.size() ? samples[idx + 1].t : period;
    const double rate = samples[idx].bw * 1e6;
    const double span = seg_end - phase;
    const double capacity = rate * span;
    if (capacity >= bits) {
      return elapsed + bits / rate;
    }
    bits -= capacity;
    elapsed += span;
    idx = (idx + 1) % samples.size();
    phase = samples[idx].t;  // wraps to 0 at the period boundary
  }
}

std::pair<SimState, StepResult> step(const SimState& state, int quality,
                                     const TimedTrace& trace,
                                     const VideoManifest& manifest,
                                     const SimConfig& cfg, Rng& rng) {
  cfg.validate();
  const int chunks = manifest.chunk_count();
  if (state.next_chunk >= chunks) {
    throw std::logic_error("step: session already finished");
  }
  if (quality < 0 || quality >= manifest.quality_count()) {
    throw std::invalid_argument("step: quality index out of range");
  }
  const int n = state.next_chunk;
  const double size = manifest.chunk_sizes_bytes[quality][n];

  StepResult res;
  res.chunk_size_bytes = size;
  if (cfg.variant == SimVariant::kSimT) {
    DtransResult dr = chunk_dtrans_lossy(size, cfg.packet_size_bytes, trace,
                                         state.wall_time_s, cfg.loss_rate, rng);
    const double request_rtprop = trace.sample_at(state.wall_time_s).rtprop;
    res.dtrans_s = dr.dtrans_s;
    res.rtprop_effective_s = chunk_rtprop(request_rtprop, dr.packet_rtprops_s);
    res.download_time_s = res.dtrans_s + res.rtprop_effective_s;
  } else {
    res.dtrans_s = fluid_drain_time(size, trace, state.wall_time_s);
    res.rtprop_effective_s = cfg.fixed_rtprop_s;
    const double u = uniform(rng, 1 - cfg.noise_fraction, 1 + cfg.noise_fraction);
    res.download_time_s = (res.dtrans_s + res.rtprop_effective_s) * u;
  }

  const bool startup = state.last_quality < 0;
  res.rebuffer_s =
      startup ? 0.0 : std::max(0.0, res.download_time_s - state.buffer_level_s);
  double buffer = std::max(state.buffer_level_s - res.download_time_s, 0.0) +
                  manifest.chunk_duration(n);
  if (buffer > cfg.buffer_capacity_s) {
    res.sleep_s = buffer - cfg.buffer_capacity_s;
    buffer = cfg.buffer_capacity_s;
  }
  res.buffer_after_s = buffer;

  SimState next = state;
  next.wall_time_s += res.download_time_s + res.sleep_s;
  next.buffer_level_s = buffer;
  next.next_chunk = n + 1;
  next.last_quality = quality;
  res.done = next.next_chunk == chunks;
  return {next, res};
}

}  // namespace sgym
