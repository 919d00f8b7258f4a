#include "streamgym/session.hpp"

namespace sgym {

SessionLog SessionResult::qoe_log() const {
  SessionLog log;
  log.reserve(chunks.size());
  for (const auto& c : chunks) {
    log.push_back({c.bitrate_mbps, c.rebuffer_s});
  }
  return log;
}

std::vector<int> SessionResult::qualities() const {
  std::vector<int> q;
  q.reserve(chunks.size());
  for (const auto& c : chunks) q.push_back(c.quality);
  return q;
}

double SessionResult::total_rebuffer_s() const {
  double t = 0;
  for (const auto& c : chunks) t += c.rebuffer_s;
  return t;
}

double SessionResult::mean_bitrate_mbps() const {
  if (chunks.empty()) return 0;
  double sum = 0;
  for (const auto& c : chunks) sum += c.bitrate_mbps;
  return sum / static_cast<double>(chunks.size());
}

int SessionResult::switch_count() const {
  int n = 0;
  for (std::size_t i = 1; i < chunks.size(); ++i) {
    if (chunks[i].quality != chunks[i - 1].quality) ++n;
  }
  return n;
}

SessionResult run_session(const AbrDecider& decider, const TimedTrace& trace,
                          const VideoManifest& manifest, const SimConfig& cfg,
                          std::uint64_t seed, int history) {
  manifest.validate();
  cfg.validate();
  Rng rng(derive_seed(seed, "session"));
  ObservationTracker tracker(history);
  SimState state;
  SessionResult result;
  result.chunks.reserve(manifest.chunk_count());
  while (state.next_chunk < manifest.chunk_count()) {
    const Observation obs = tracker.observe(state.buffer_level_s, state.next_chunk, manifest);
    const int quality = decider(obs);
    const int chunk = state.next_chunk;
    auto [next, res] = step(state, quality, trace, manifest, cfg, rng);
    if (chunk == 0) result.startup_s = res.download_time_s;
    tracker.record(res.chunk_size_bytes, res.download_time_s, res.rtprop_effective_s,
                   quality);
    result.chunks.push_back({chunk, quality, manifest.bitrates_mbps[quality],
                             res.download_time_s, res.dtrans_s, res.rtprop_effective_s,
                             res.rebuffer_s, res.sleep_s, res.buffer_after_s});
    state = next;
  }
  result.wall_time_s = state.wall_time_s;
  return result;
}

std::string session_to_csv(const SessionResult& result) {
  std::string out =
      "chunk,quality,bitrate_mbps,download_s,dtrans_s,rtprop_s,rebuffer_s,sleep_s,buffer_s\n";
  for (const auto& c : result.chunks) {
    out += std::to_string(c.chunk);
    out += ',';
    out += std::to_string(c.quality);
    for (double v : {c.bitrate_mbps, c.download_s, c.dtrans_s, c.rtprop_s,
                     c.rebuffer_s, c.sleep_s, c.buffer_s}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

}  // namespace sgym
