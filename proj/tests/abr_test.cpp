#include <doctest.h>

#include "streamgym/abr.hpp"
#include "streamgym/util.hpp"

using namespace sgym;

namespace {

Observation obs_with_history(std::vector<double> thr, const VideoManifest& m) {
  Observation obs;
  obs.throughput_history_mbps.assign(Observation::kDefaultHistory, 0.0);
  obs.download_time_history_s.assign(Observation::kDefaultHistory, 0.0);
  for (std::size_t i = 0; i < thr.size(); ++i) {
    obs.throughput_history_mbps[obs.throughput_history_mbps.size() - thr.size() + i] =
        thr[i];
  }
  obs.next_chunk_sizes_bytes.assign(m.quality_count(), 1.0);
  obs.remaining_chunks = 10;
  return obs;
}

}  // namespace

TEST_CASE("fixed decider ignores the observation") {
  const auto m = default_manifest();
  auto obs = obs_with_history({1, 2, 3}, m);
  CHECK(decide_fixed(obs, 0) == 0);
  CHECK(decide_fixed(obs, 5) == 5);
  obs.buffer_level_s = 55;
  CHECK(decide_fixed(obs, 5) == 5);
}

TEST_CASE("rate-based decider uses the harmonic mean with a safety margin") {
  const auto m = default_manifest();
  // H({1,2}) = 4/3; 4/3 * 0.9 = 1.2 -> index 2 on the default ladder
  CHECK(decide_rate_based(obs_with_history({1, 2}, m), m, 0.9) == 2);
  CHECK(decide_rate_based(obs_with_history({}, m), m) == 0);  // fallback
  CHECK(decide_rate_based(obs_with_history({10, 10, 10}, m), m, 1.0) == 5);
  CHECK_THROWS_AS(decide_rate_based(obs_with_history({1}, m), m, 0.0),
                  std::invalid_argument);
}

TEST_CASE("rate-based decider is scale-consistent") {
  const auto m = default_manifest();
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> thr;
    const int n = 1 + static_cast<int>(uniform01(rng) * 8);
    for (int i = 0; i < n; ++i) thr.push_back(uniform(rng, 0.05, 8));
    const int before = decide_rate_based(obs_with_history(thr, m), m);
    for (auto& t : thr) t *= 2;
    const int after = decide_rate_based(obs_with_history(thr, m), m);
    CHECK(after >= before);
  }
}

TEST_CASE("buffer-based decider maps the buffer onto the ladder") {
  const auto m = default_manifest();
  auto obs = obs_with_history({}, m);
  obs.buffer_level_s = 3;  // below the reservoir
  CHECK(decide_buffer_based(obs, m, 5, 10) == 0);
  obs.buffer_level_s = 15;  // at reservoir + cushion
  CHECK(decide_buffer_based(obs, m, 5, 10) == 5);
  obs.buffer_level_s = 40;
  CHECK(decide_buffer_based(obs, m, 5, 10) == 5);
  // midpoint of the cushion: floor(0.5 * 5) = 2
  obs.buffer_level_s = 10;
  CHECK(decide_buffer_based(obs, m, 5, 10) == 2);
  obs.buffer_level_s = 0;
  CHECK(decide_buffer_based(obs, m, 5, 10) == 0);
  CHECK_THROWS_AS(decide_buffer_based(obs, m, 5, 0), std::invalid_argument);
}

TEST_CASE("every decider returns a valid ladder index") {
  const auto m = default_manifest();
  Rng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> thr;
    const int n = static_cast<int>(uniform01(rng) * 9);
    for (int i = 0; i < n; ++i) thr.push_back(uniform(rng, 0.01, 50));
    auto obs = obs_with_history(thr, m);
    obs.buffer_level_s = uniform(rng, 0, 60);
    for (int q : {decide_fixed(obs, 3), decide_rate_based(obs, m),
                  decide_buffer_based(obs, m)}) {
      CHECK(q >= 0);
      CHECK(q < m.quality_count());
    }
  }
}

TEST_CASE("tracker zero-pads, trims, and tracks the last quality") {
  const auto m = default_manifest({0, 0});
  ObservationTracker tracker(4);
  auto obs = tracker.observe(0.0, 0, m);
  CHECK(obs.last_quality == -1);
  CHECK(obs.throughput_history_mbps == std::vector<double>{0, 0, 0, 0});
  CHECK(obs.remaining_chunks == 49);
  CHECK(obs.next_chunk_sizes_bytes[5] == 2150000);

  for (int i = 0; i < 6; ++i) {
    tracker.record(1e6, 2.0, 0.08, i % 3);  // 4 Mbps each
  }
  obs = tracker.observe(7.5, 6, m);
  CHECK(obs.last_quality == 5 % 3);
  CHECK(obs.throughput_history_mbps.size() == 4);
  CHECK(obs.throughput_history_mbps[3] == doctest::Approx(4.0));
  CHECK(obs.buffer_level_s == 7.5);
  CHECK(obs.remaining_chunks == 43);
  CHECK(obs.rtprop_last_s == 0.08);
}
