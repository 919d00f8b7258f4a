#pragma once

#include <memory>
#include <string>

#include "streamgym/abr_factory.hpp"
#include "streamgym/eval.hpp"
#include "streamgym/session.hpp"

namespace sgym {

// Transport-free decision logic. The client posts the previous chunk's
// measurements before each request; the service keeps the per-session history
// (the same ObservationTracker the in-process runner uses) and answers with
// the next quality index.
class DecisionService {
 public:
  struct Reply {
    int status = 200;
    std::string body;
  };

  DecisionService(AbrSpec spec, VideoManifest manifest, std::uint64_t seed,
                  double session_ttl_s = 600,
                  int history = Observation::kDefaultHistory);
  ~DecisionService();
  DecisionService(DecisionService&&) noexcept;

  // POST /v1/decision body -> {"session": <id>, "quality": <int>} or a
  // client-error reply {"error": <reason>}. Unknown session ids start fresh
  // sessions.
  Reply handle_decision(const std::string& body);

  // GET /healthz body.
  std::string health_json() const;

  std::size_t session_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class HttpDecisionServer {
 public:
  explicit HttpDecisionServer(DecisionService service);
  ~HttpDecisionServer();

  // port 0 picks an ephemeral port; returns the bound port and serves on a
  // background thread.
  int start(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Replays a simulated session against a running decision service, querying it
// before every chunk. The resulting log is schema-identical to run_session's;
// a transport failure aborts with the chunk index.
SessionResult drive_session(const std::string& host, int port,
                            const TimedTrace& trace, const VideoManifest& manifest,
                            const SimConfig& sim_cfg, std::uint64_t seed,
                            const std::string& session_id);

}  // namespace sgym
