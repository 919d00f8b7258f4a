#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "streamgym/manifest.hpp"

namespace sgym {

// What an ABR algorithm sees before requesting a chunk. Histories are fixed
// length, zero-padded, oldest first.
struct Observation {
  static constexpr int kDefaultHistory = 8;

  std::vector<double> throughput_history_mbps;
  std::vector<double> download_time_history_s;
  double buffer_level_s = 0;
  std::vector<double> next_chunk_sizes_bytes;  // per quality
  int remaining_chunks = 0;
  int last_quality = -1;  // -1 = none
  double rtprop_last_s = 0;
};

// Accumulates per-chunk measurements into Observations. The decision service
// and the in-process session runner share this type, which is what makes
// wire-level parity exact.
class ObservationTracker {
 public:
  explicit ObservationTracker(int history = Observation::kDefaultHistory);

  void record(double chunk_bytes, double download_s, double rtprop_s, int quality);
  Observation observe(double buffer_level_s, int next_chunk,
                      const VideoManifest& manifest) const;
  // Transport form: the caller supplies what the manifest would have provided.
  Observation observe(double buffer_level_s, std::vector<double> next_chunk_sizes,
                      int remaining_chunks) const;

  int last_quality() const { return last_quality_; }
  int chunks_recorded() const { return chunks_recorded_; }

 private:
  int history_;
  std::deque<double> throughput_mbps_;
  std::deque<double> download_s_;
  int last_quality_ = -1;
  double rtprop_last_s_ = 0;
  int chunks_recorded_ = 0;
};

using AbrDecider = std::function<int(const Observation&)>;

int decide_fixed(const Observation& obs, int quality);

// Harmonic mean of the nonzero throughput history, discounted by `safety`;
// highest bitrate that fits, lowest quality as the fallback.
int decide_rate_based(const Observation& obs, const VideoManifest& manifest,
                      double safety = 0.9);

// Linear map of buffer level from [reservoir, reservoir + cushion] onto ladder
// indices, clamped at the ends.
int decide_buffer_based(const Observation& obs, const VideoManifest& manifest,
                        double reservoir_s = 5.0, double cushion_s = 10.0);

}  // namespace sgym
