#include <doctest.h>

#include <chrono>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "streamgym/server.hpp"

using namespace sgym;
using nlohmann::json;

namespace {

json decision_request(const std::string& id, const VideoManifest& m, int chunk,
                      double buffer, double last_bytes, double last_download,
                      double last_rtprop) {
  json req{{"session", id},
           {"buffer_level_s", buffer},
           {"last_chunk_bytes", last_bytes},
           {"last_download_s", last_download},
           {"last_rtprop_s", last_rtprop},
           {"remaining_chunks", m.chunk_count() - chunk}};
  auto& sizes = req["next_chunk_sizes_bytes"] = json::array();
  for (int q = 0; q < m.quality_count(); ++q) {
    sizes.push_back(m.chunk_sizes_bytes[q][chunk]);
  }
  return req;
}

}  // namespace

TEST_CASE("fixed algorithm always answers its quality") {
  const auto m = default_manifest();
  DecisionService svc(parse_abr_spec("fixed:3"), m, 1);
  for (int chunk = 0; chunk < 5; ++chunk) {
    const auto reply = svc.handle_decision(
        decision_request("s1", m, chunk, chunk * 4.0, 1e6, 2.0, 0.08).dump());
    REQUIRE(reply.status == 200);
    const auto body = json::parse(reply.body);
    CHECK(body.at("quality") == 3);
    CHECK(body.at("session") == "s1");
  }
  CHECK(svc.session_count() == 1);
}

TEST_CASE("malformed requests get a client error with a reason") {
  const auto m = default_manifest();
  DecisionService svc(parse_abr_spec("rate"), m, 1);
  CHECK(svc.handle_decision("{not json").status == 400);
  CHECK(svc.handle_decision("{}").status == 400);
  auto req = decision_request("s", m, 0, 0, 0, 0, 0);
  req.erase("buffer_level_s");
  CHECK(svc.handle_decision(req.dump()).status == 400);
  req = decision_request("s", m, 0, 0, 0, 0, 0);
  req["next_chunk_sizes_bytes"] = {1.0, 2.0};  // wrong arity
  CHECK(svc.handle_decision(req.dump()).status == 400);
  req = decision_request("s", m, 0, 0, 0, 0, 0);
  req["buffer_level_s"] = -1;
  const auto reply = svc.handle_decision(req.dump());
  CHECK(reply.status == 400);
  CHECK(json::parse(reply.body).contains("error"));
}

TEST_CASE("unknown sessions are created on demand and evicted when idle") {
  const auto m = default_manifest();
  DecisionService svc(parse_abr_spec("rate"), m, 1, /*session_ttl_s=*/0.02);
  svc.handle_decision(decision_request("a", m, 0, 0, 0, 0, 0).dump());
  CHECK(svc.session_count() == 1);
  svc.handle_decision(decision_request("b", m, 0, 0, 0, 0, 0).dump());
  CHECK(svc.session_count() == 2);
  std::this_thread::sleep_for(std::chrono::milliseconds(40));
  svc.handle_decision(decision_request("c", m, 0, 0, 0, 0, 0).dump());
  CHECK(svc.session_count() == 1);  // a and b idled out
}

TEST_CASE("sessions never read each other's history") {
  const auto m = default_manifest({0.1, 4});
  // Interleaved A/B requests must match a service handling A alone.
  DecisionService both(parse_abr_spec("rate"), m, 1);
  DecisionService solo(parse_abr_spec("rate"), m, 1);
  std::vector<int> interleaved, alone;
  for (int chunk = 0; chunk < 6; ++chunk) {
    const auto req_a =
        decision_request("A", m, chunk, 4.0 * chunk, 5e5 * (chunk > 0), 1.0, 0.08);
    // B reports very different measurements
    const auto req_b =
        decision_request("B", m, chunk, 2.0, 4e6 * (chunk > 0), 0.5, 0.02);
    interleaved.push_back(
        json::parse(both.handle_decision(req_a.dump()).body).at("quality").get<int>());
    both.handle_decision(req_b.dump());
    alone.push_back(
        json::parse(solo.handle_decision(req_a.dump()).body).at("quality").get<int>());
  }
  CHECK(interleaved == alone);
}

TEST_CASE("oracle cannot serve online decisions") {
  CHECK_THROWS_AS(DecisionService(parse_abr_spec("oracle"), default_manifest(), 1),
                  std::invalid_argument);
}

TEST_CASE("http wire path mirrors the in-process session exactly") {
  const auto m = default_manifest({0.12, 3});
  SimConfig cfg;
  cfg.variant = SimVariant::kSimT;
  cfg.loss_rate = 0.01;
  HttpDecisionServer server(DecisionService(parse_abr_spec("rate"), m, 1));
  const int port = server.start("127.0.0.1", 0);
  REQUIRE(port > 0);

  httplib::Client probe("127.0.0.1", port);
  const auto health = probe.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  const auto hj = json::parse(health->body);
  CHECK(hj.at("status") == "ok");
  CHECK(hj.contains("model"));

  const TimedTrace traces[] = {
      TimedTrace("w0", {{0, 1.2, 0.05}, {4, 2.4, 0.06}}),
      TimedTrace("w1", {{0, 3.0, 0.08}}),
  };
  const auto decider_manifest = m;
  for (int i = 0; i < 2; ++i) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto driven =
          drive_session("127.0.0.1", port, traces[i], m, cfg, seed,
                        "sess-" + std::to_string(i) + "-" + std::to_string(seed));
      AbrDecider rate = [&](const Observation& o) {
        return decide_rate_based(o, decider_manifest);
      };
      const auto local = run_session(rate, traces[i], m, cfg, seed);
      CHECK(driven.qualities() == local.qualities());
      const auto qoe_cfg = QoEConfig::hd_default();
      CHECK(session_qoe(driven.qoe_log(), qoe_cfg) ==
            session_qoe(local.qoe_log(), qoe_cfg));
    }
  }
  server.stop();
}

TEST_CASE("transport failures abort with the chunk index") {
  const auto m = default_manifest();
  const TimedTrace tr("t", {{0, 1.0, 0.05}});
  CHECK_THROWS_WITH_AS(drive_session("127.0.0.1", 1, tr, m, SimConfig{}, 0, "x"),
                       doctest::Contains("chunk 0"), std::runtime_error);
}
