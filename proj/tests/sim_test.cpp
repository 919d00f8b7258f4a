#include <doctest.h>

#include <cmath>

#include "streamgym/session.hpp"
#include "streamgym/sim.hpp"

using namespace sgym;

namespace {

TimedTrace constant_trace(double bw_mbps, double rtprop_s) {
  return TimedTrace("const", {{0, bw_mbps, rtprop_s}});
}

// One-quality manifest with a single chunk of the given size.
VideoManifest single_chunk(double size_bytes, double duration_s = 4.0) {
  VideoManifest m;
  m.chunk_duration_s = duration_s;
  m.total_length_s = duration_s;
  m.bitrates_mbps = {size_bytes * 8 / duration_s / 1e6};
  m.quality_values = {1};
  m.chunk_sizes_bytes = {{size_bytes}};
  m.validate();
  return m;
}

}  // namespace

TEST_CASE("chunk rtprop follows the max-filter") {
  const double resp[] = {0.005, 0.008, 0.005};
  CHECK(chunk_rtprop(0.005, resp) == doctest::Approx(0.0065).epsilon(1e-12));
  const double same[] = {0.042};
  CHECK(chunk_rtprop(0.042, same) == doctest::Approx(0.042).epsilon(1e-12));
  const double zeros[] = {0.0, 0.0, 0.0};
  CHECK(chunk_rtprop(0.0, zeros) == 0.0);
  CHECK_THROWS_AS(chunk_rtprop(0.01, {}), std::invalid_argument);
}

TEST_CASE("chunk rtprop never decreases when a response rtprop grows") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> resp;
    for (int i = 0; i < 6; ++i) resp.push_back(uniform(rng, 0, 0.2));
    const double req = uniform(rng, 0, 0.2);
    const double base = chunk_rtprop(req, resp);
    auto bumped = resp;
    const int k = static_cast<int>(uniform01(rng) * 6);
    bumped[k] += uniform(rng, 0, 0.1);
    CHECK(chunk_rtprop(req, bumped) >= base);
  }
}

TEST_CASE("transmission delay of back-to-back packets at a constant rate") {
  const auto tr = constant_trace(15.0, 0.005);
  // 5 full packets of 1500 bytes at 15 Mbps: 4.0 ms
  const auto five = chunk_dtrans(5 * 1500, 1500, tr, 0);
  CHECK(five.dtrans_s == doctest::Approx(0.004).epsilon(1e-9));
  CHECK(five.packet_rtprops_s.size() == 5);
  // 2 packets: 1.6 ms
  const auto two = chunk_dtrans(2 * 1500, 1500, tr, 0);
  CHECK(two.dtrans_s == doctest::Approx(0.0016).epsilon(1e-9));
  // one short packet of 750 bytes at 6 Mbps: 1.0 ms
  const auto one = chunk_dtrans(750, 1500, constant_trace(6.0, 0), 0);
  CHECK(one.dtrans_s == doctest::Approx(0.001).epsilon(1e-9));
  CHECK(one.packet_rtprops_s.size() == 1);
  CHECK_THROWS_AS(chunk_dtrans(0, 1500, tr, 0), std::invalid_argument);
}

TEST_CASE("packetization conserves the chunk size") {
  Rng rng(3);
  const auto tr = constant_trace(10.0, 0.01);
  for (int trial = 0; trial < 100; ++trial) {
    const double size = uniform(rng, 1, 40000);
    const auto r = chunk_dtrans(size, 1500, tr, uniform(rng, 0, 5));
    CHECK(r.packet_rtprops_s.size() ==
          static_cast<std::size_t>(std::ceil(size / 1500)));
    // constant rate: dtrans telescopes to size*8/bw
    CHECK(r.dtrans_s == doctest::Approx(size * 8 / 10e6).epsilon(1e-9));
  }
}

TEST_CASE("lossy transmission retransmits and still delivers every packet") {
  const auto tr = constant_trace(15.0, 0.005);
  Rng rng(17);
  const auto lossless = chunk_dtrans(10 * 1500, 1500, tr, 0);
  const auto lossy = chunk_dtrans_lossy(10 * 1500, 1500, tr, 0, 0.4, rng);
  CHECK(lossy.packet_rtprops_s.size() == 10);  // delivered exactly once each
  CHECK(lossy.dtrans_s > lossless.dtrans_s);
  Rng r1(17), r2(17);
  const auto a = chunk_dtrans_lossy(10 * 1500, 1500, tr, 0, 0.4, r1);
  const auto b = chunk_dtrans_lossy(10 * 1500, 1500, tr, 0, 0.4, r2);
  CHECK(a.dtrans_s == b.dtrans_s);
}

TEST_CASE("fluid drain integrates the piecewise-constant trace") {
  const auto tr = parse_trace("0 1.0\n1 2.0", 0.0);  // period 2 s
  // 2e6 bits: 1 s at 1 Mbps + 0.5 s at 2 Mbps
  CHECK(fluid_drain_time(250000, tr, 0) == doctest::Approx(1.5).epsilon(1e-12));
  // starting inside the fast segment, wrapping into the slow one
  CHECK(fluid_drain_time(250000, tr, 1.5) == doctest::Approx(1.5).epsilon(1e-12));
  // constant trace: exact closed form
  CHECK(fluid_drain_time(1e6, constant_trace(8, 0), 3.7) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("SIM-T buffer update on the stated arithmetic") {
  // constant 1 Mbps, rtprop 0, chunk of 0.5 Mbit, buffer at 4 s
  const auto tr = constant_trace(1.0, 0.0);
  auto m = single_chunk(62500);  // 0.5 Mbit
  SimConfig cfg;
  cfg.variant = SimVariant::kSimT;
  Rng rng(0);
  SimState st;
  st.buffer_level_s = 4;
  st.last_quality = 0;  // mid-session
  auto [next, res] = step(st, 0, tr, m, cfg, rng);
  CHECK(res.download_time_s == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(res.rebuffer_s == 0);
  CHECK(res.buffer_after_s == doctest::Approx(7.5).epsilon(1e-9));
  CHECK(res.done);
  CHECK_THROWS_AS(step(next, 0, tr, m, cfg, rng), std::logic_error);
}

TEST_CASE("SIM-T rebuffers when the download outlasts the buffer") {
  const auto tr = constant_trace(1.0, 0.0);
  auto m = single_chunk(312500);  // 2.5 Mbit -> 2.5 s at 1 Mbps
  SimConfig cfg;
  cfg.variant = SimVariant::kSimT;
  Rng rng(0);
  SimState st;
  st.buffer_level_s = 1;
  st.last_quality = 0;
  auto [next, res] = step(st, 0, tr, m, cfg, rng);
  CHECK(res.rebuffer_s == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(res.buffer_after_s == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("startup download is not counted as rebuffering") {
  const auto tr = constant_trace(1.0, 0.0);
  auto m = single_chunk(312500);
  SimConfig cfg;
  Rng rng(0);
  SimState st;  // buffer 0, last_quality none
  auto [next, res] = step(st, 0, tr, m, cfg, rng);
  CHECK(res.rebuffer_s == 0);
  CHECK(res.buffer_after_s == doctest::Approx(4.0));
}

TEST_CASE("SIM-O noise stays inside the envelope") {
  // (0.5 + 0.08) * [0.9, 1.1] = [0.522, 0.638]
  const auto tr = constant_trace(2.0, 0.0);
  auto m = single_chunk(125000);  // 1 Mbit
  SimConfig cfg;
  cfg.variant = SimVariant::kSimO;
  cfg.fixed_rtprop_s = 0.08;
  cfg.noise_fraction = 0.10;
  Rng rng(21);
  for (int i = 0; i < 2000; ++i) {
    SimState st;
    st.last_quality = 0;
    st.buffer_level_s = 10;
    auto [next, res] = step(st, 0, tr, m, cfg, rng);
    CHECK(res.download_time_s >= 0.522 - 1e-12);
    CHECK(res.download_time_s <= 0.638 + 1e-12);
    CHECK(res.dtrans_s == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(res.rtprop_effective_s == 0.08);
  }
}

TEST_CASE("SIM-O noise factor is centered over many steps") {
  const auto tr = constant_trace(2.0, 0.0);
  auto m = single_chunk(125000);
  SimConfig cfg;
  cfg.variant = SimVariant::kSimO;
  Rng rng(4);
  double sum = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    SimState st;
    st.last_quality = 0;
    st.buffer_level_s = 10;
    auto [next, res] = step(st, 0, tr, m, cfg, rng);
    sum += res.download_time_s / (res.dtrans_s + cfg.fixed_rtprop_s);
  }
  CHECK(std::abs(sum / n - 1.0) < 0.01);
}

TEST_CASE("SIM-T closed form on constant traces") {
  Rng rng(33);
  SimConfig cfg;
  cfg.variant = SimVariant::kSimT;
  for (int trial = 0; trial < 100; ++trial) {
    const double size = uniform(rng, 1000, 3e6);
    const double bw = uniform(rng, 0.2, 100);
    const double rt = uniform(rng, 0, 0.3);
    const auto tr = constant_trace(bw, rt);
    auto m = single_chunk(size);
    Rng step_rng(0);
    SimState st;
    st.last_quality = 0;
    st.buffer_level_s = 30;
    auto [next, res] = step(st, 0, tr, m, cfg, step_rng);
    const double expect = size * 8 / (bw * 1e6) + rt;
    CHECK(res.download_time_s == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("manifest defaults follow the reference geometry") {
  const auto m = default_manifest();
  CHECK(m.chunk_count() == 49);
  CHECK(m.chunk_duration(0) == 4.0);
  CHECK(m.chunk_duration(48) == doctest::Approx(1.0).epsilon(1e-12));
  // strictly increasing with quality on every chunk
  for (int n = 0; n < m.chunk_count(); ++n) {
    for (int q = 1; q < m.quality_count(); ++q) {
      CHECK(m.chunk_sizes_bytes[q][n] > m.chunk_sizes_bytes[q - 1][n]);
    }
    // sizes inside the VBR band
    for (int q = 0; q < m.quality_count(); ++q) {
      const double nominal = m.bitrates_mbps[q] * 1e6 * m.chunk_duration(n) / 8;
      CHECK(m.chunk_sizes_bytes[q][n] >= 0.85 * nominal - 1);
      CHECK(m.chunk_sizes_bytes[q][n] <= 1.15 * nominal + 1);
    }
  }
}

TEST_CASE("flat VBR factor gives the nominal chunk size") {
  const auto m = default_manifest({0.0, 0});
  // 4 s at 4.3 Mbps = 2,150,000 bytes
  CHECK(m.chunk_sizes_bytes[5][0] == 2150000);
  CHECK(m.chunk_sizes_bytes[5][48] == doctest::Approx(537500).epsilon(1e-12));
}

TEST_CASE("manifest JSON round trip") {
  const auto m = default_manifest();
  const auto back = manifest_from_json(manifest_to_json(m));
  CHECK(back.chunk_count() == m.chunk_count());
  CHECK(back.bitrates_mbps == m.bitrates_mbps);
  CHECK(back.chunk_sizes_bytes == m.chunk_sizes_bytes);
  auto broken = m;
  broken.quality_values.pop_back();
  CHECK_THROWS_AS(manifest_from_json(manifest_to_json(broken)),
                  std::invalid_argument);
}

TEST_CASE("sessions respect buffer bounds and account wall time") {
  const auto tr = parse_trace("0 2.3\n3 0.9\n7 4.0\n11 1.4", 0.05);
  const auto m = default_manifest({0.15, 9});
  SimConfig cfg;
  cfg.variant = SimVariant::kSimT;
  cfg.buffer_capacity_s = 12;
  AbrDecider rate = [&](const Observation& obs) {
    return decide_rate_based(obs, m);
  };
  const auto result = run_session(rate, tr, m, cfg, 5);
  REQUIRE(result.chunks.size() == 49);
  double acc = 0;
  for (const auto& c : result.chunks) {
    CHECK(c.buffer_s >= 0);
    CHECK(c.buffer_s <= cfg.buffer_capacity_s);
    CHECK(c.rebuffer_s >= 0);
    CHECK(c.sleep_s >= 0);
    acc += c.download_s + c.sleep_s;
  }
  CHECK(result.wall_time_s == doctest::Approx(acc).epsilon(1e-9));
  CHECK(result.startup_s == result.chunks.front().download_s);
  // deterministic without loss
  const auto again = run_session(rate, tr, m, cfg, 5);
  CHECK(session_to_csv(again) == session_to_csv(result));
}

TEST_CASE("SIM-T with loss is deterministic per seed and always delivers") {
  const auto tr = constant_trace(3.0, 0.04);
  const auto m = default_manifest({0.1, 2});
  SimConfig cfg;
  cfg.variant = SimVariant::kSimT;
  cfg.loss_rate = 0.02;
  AbrDecider fixed2 = [](const Observation&) { return 2; };
  const auto a = run_session(fixed2, tr, m, cfg, 11);
  const auto b = run_session(fixed2, tr, m, cfg, 11);
  CHECK(session_to_csv(a) == session_to_csv(b));
  const auto c = run_session(fixed2, tr, m, cfg, 12);
  CHECK(session_to_csv(a) != session_to_csv(c));
}
