#include "streamgym/abr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sgym {

ObservationTracker::ObservationTracker(int history) : history_(history) {
  if (history < 1) {
    throw std::invalid_argument("ObservationTracker: history must be >= 1");
  }
}

void ObservationTracker::record(double chunk_bytes, double download_s,
                                double rtprop_s, int quality) {
  const double mbps = download_s > 0 ? chunk_bytes * 8.0 / download_s / 1e6 : 0.0;
  throughput_mbps_.push_back(mbps);
  download_s_.push_back(download_s);
  while (static_cast<int>(throughput_mbps_.size()) > history_) {
    throughput_mbps_.pop_front();
    download_s_.pop_front();
  }
  last_quality_ = quality;
  rtprop_last_s_ = rtprop_s;
  ++chunks_recorded_;
}

Observation ObservationTracker::observe(double buffer_level_s,
                                        std::vector<double> next_chunk_sizes,
                                        int remaining_chunks) const {
  Observation obs;
  obs.throughput_history_mbps.assign(history_, 0.0);
  obs.download_time_history_s.assign(history_, 0.0);
  const int have = static_cast<int>(throughput_mbps_.size());
  for (int i = 0; i < have; ++i) {
    obs.throughput_history_mbps[history_ - have + i] = throughput_mbps_[i];
    obs.download_time_history_s[history_ - have + i] = download_s_[i];
  }
  obs.buffer_level_s = buffer_level_s;
  obs.next_chunk_sizes_bytes = std::move(next_chunk_sizes);
  obs.remaining_chunks = std::max(remaining_chunks, 0);
  obs.last_quality = last_quality_;
  obs.rtprop_last_s = rtprop_last_s_;
  return obs;
}

Observation ObservationTracker::observe(double buffer_level_s, int next_chunk,
                                        const VideoManifest& manifest) const {
  const int chunks = manifest.chunk_count();
  std::vector<double> sizes(manifest.quality_count(), 0.0);
  if (next_chunk < chunks) {
    for (int q = 0; q < manifest.quality_count(); ++q) {
      sizes[q] = manifest.chunk_sizes_bytes[q][next_chunk];
    }
  }
  return observe(buffer_level_s, std::move(sizes), chunks - next_chunk);
}

int decide_fixed(const Observation&, int quality) { return quality; }

int decide_rate_based(const Observation& obs, const VideoManifest& manifest,
                      double safety) {
  if (!(safety > 0 && safety <= 1)) {
    throw std::invalid_argument("decide_rate_based: safety must be in (0, 1]");
  }
  double inv_sum = 0;
  int count = 0;
  for (double thr : obs.throughput_history_mbps) {
    if (thr > 0) {
      inv_sum += 1.0 / thr;
      ++count;
    }
  }
  if (count == 0) return 0;
  const double target = count / inv_sum * safety;
  int choice = 0;
  for (int q = 0; q < manifest.quality_count(); ++q) {
    if (manifest.bitrates_mbps[q] <= target) choice = q;
  }
  return choice;
}

int decide_buffer_based(const Observation& obs, const VideoManifest& manifest,
                        double reservoir_s, double cushion_s) {
  if (!(cushion_s > 0)) {
    throw std::invalid_argument("decide_buffer_based: cushion must be > 0");
  }
  const int top = manifest.quality_count() - 1;
  const double x = (obs.buffer_level_s - reservoir_s) / cushion_s;
  const int idx = static_cast<int>(std::floor(x * top));
  return std::clamp(idx, 0, top);
}

}  // namespace sgym
