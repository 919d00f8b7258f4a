#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "streamgym/abr.hpp"
#include "streamgym/qoe.hpp"
#include "streamgym/sim.hpp"

namespace sgym {

struct ChunkRecord {
  int chunk = 0;
  int quality = 0;
  double bitrate_mbps = 0;
  double download_s = 0;
  double dtrans_s = 0;
  double rtprop_s = 0;
  double rebuffer_s = 0;
  double sleep_s = 0;
  double buffer_s = 0;
};

struct SessionResult {
  std::vector<ChunkRecord> chunks;
  double startup_s = 0;    // first chunk's download, kept out of rebuffering
  double wall_time_s = 0;

  SessionLog qoe_log() const;
  std::vector<int> qualities() const;
  double total_rebuffer_s() const;
  double mean_bitrate_mbps() const;
  int switch_count() const;
};

// Plays one full session: observe -> decide -> download, one chunk at a time.
SessionResult run_session(const AbrDecider& decider, const TimedTrace& trace,
                          const VideoManifest& manifest, const SimConfig& cfg,
                          std::uint64_t seed,
                          int history = Observation::kDefaultHistory);

// CSV header: chunk,quality,bitrate_mbps,download_s,dtrans_s,rtprop_s,rebuffer_s,sleep_s,buffer_s
std::string session_to_csv(const SessionResult& result);

}  // namespace sgym
