#include "streamgym/server.hpp"

#include <chrono>
#include <mutex>
#include <shared_mutex>
#include <thread>
#include <unordered_map>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace sgym {

using Clock = std::chrono::steady_clock;

struct DecisionService::Impl {
  AbrSpec spec;
  VideoManifest manifest;
  AbrDecider decider;
  bool decider_shared_state = false;  // sampled-policy rng needs the lock
  std::mutex decide_mu;
  std::uint64_t model_fingerprint = 0;
  double session_ttl_s = 600;
  int history = Observation::kDefaultHistory;

  struct Session {
    std::mutex mu;
    ObservationTracker tracker;
    int last_returned = -1;
    int chunks_served = 0;
    Clock::time_point last_seen;
    explicit Session(int history) : tracker(history) {}
  };
  mutable std::shared_mutex sessions_mu;
  std::unordered_map<std::string, std::unique_ptr<Session>> sessions;

  void evict_idle() {
    const auto now = Clock::now();
    std::unique_lock lock(sessions_mu);
    for (auto it = sessions.begin(); it != sessions.end();) {
      const double idle =
          std::chrono::duration<double>(now - it->second->last_seen).count();
      if (idle > session_ttl_s) {
        it = sessions.erase(it);
      } else {
        ++it;
      }
    }
  }

  Session& session_for(const std::string& id) {
    {
      std::shared_lock lock(sessions_mu);
      auto it = sessions.find(id);
      if (it != sessions.end()) return *it->second;
    }
    std::unique_lock lock(sessions_mu);
    auto [it, inserted] = sessions.try_emplace(id, nullptr);
    if (inserted) it->second = std::make_unique<Session>(history);
    return *it->second;
  }
};

DecisionService::DecisionService(AbrSpec spec, VideoManifest manifest,
                                 std::uint64_t seed, double session_ttl_s,
                                 int history)
    : impl_(std::make_unique<Impl>()) {
  manifest.validate();
  if (spec.kind == AbrSpec::Kind::kOracle) {
    throw std::invalid_argument(
        "decision service: the oracle algorithm needs the full trace and "
        "cannot serve online decisions");
  }
  impl_->spec = std::move(spec);
  impl_->manifest = std::move(manifest);
  impl_->session_ttl_s = session_ttl_s;
  impl_->history = history;
  impl_->decider = make_decider(impl_->spec, impl_->manifest, SimConfig{},
                                QoEConfig::linear(), nullptr, seed);
  impl_->decider_shared_state =
      impl_->spec.kind == AbrSpec::Kind::kPolicy && !impl_->spec.policy_greedy;
  impl_->model_fingerprint = impl_->spec.kind == AbrSpec::Kind::kPolicy
                                 ? policy_fingerprint(*impl_->spec.model)
                                 : fnv1a(impl_->spec.text);
}

DecisionService::~DecisionService() = default;
DecisionService::DecisionService(DecisionService&&) noexcept = default;

namespace {

DecisionService::Reply bad_request(const std::string& reason) {
  nlohmann::json j{{"error", reason}};
  return {400, j.dump()};
}

}  // namespace

DecisionService::Reply DecisionService::handle_decision(const std::string& body) {
  nlohmann::json req;
  try {
    req = nlohmann::json::parse(body);
  } catch (const std::exception& e) {
    return bad_request(std::string("invalid JSON: ") + e.what());
  }
  std::string id;
  double buffer = 0, last_bytes = 0, last_download = 0, last_rtprop = 0;
  int remaining = 0;
  std::vector<double> sizes;
  try {
    id = req.at("session").get<std::string>();
    buffer = req.at("buffer_level_s").get<double>();
    last_bytes = req.at("last_chunk_bytes").get<double>();
    last_download = req.at("last_download_s").get<double>();
    last_rtprop = req.at("last_rtprop_s").get<double>();
    sizes = req.at("next_chunk_sizes_bytes").get<std::vector<double>>();
    remaining = req.at("remaining_chunks").get<int>();
  } catch (const std::exception& e) {
    return bad_request(std::string("missing or mistyped field: ") + e.what());
  }
  if (id.empty()) return bad_request("empty session id");
  if (buffer < 0 || last_bytes < 0 || last_download < 0 || last_rtprop < 0 ||
      remaining < 0) {
    return bad_request("negative field");
  }
  if (static_cast<int>(sizes.size()) != impl_->manifest.quality_count()) {
    return bad_request("next_chunk_sizes_bytes must list one size per quality");
  }

  impl_->evict_idle();
  auto& session = impl_->session_for(id);
  int quality = 0;
  {
    std::lock_guard lock(session.mu);
    session.last_seen = Clock::now();
    if (last_bytes > 0 && last_download > 0 && session.last_returned >= 0) {
      session.tracker.record(last_bytes, last_download, last_rtprop,
                             session.last_returned);
    }
    const Observation obs =
        session.tracker.observe(buffer, std::move(sizes), remaining);
    if (impl_->decider_shared_state) {
      std::lock_guard decide_lock(impl_->decide_mu);
      quality = impl_->decider(obs);
    } else {
      quality = impl_->decider(obs);
    }
    session.last_returned = quality;
    ++session.chunks_served;
  }
  nlohmann::json resp{{"session", id}, {"quality", quality}};
  return {200, resp.dump()};
}

std::string DecisionService::health_json() const {
  nlohmann::json j{{"status", "ok"},
                   {"model", impl_->model_fingerprint},
                   {"abr", impl_->spec.text},
                   {"version", std::string(kVersion)}};
  return j.dump();
}

std::size_t DecisionService::session_count() const {
  std::shared_lock lock(impl_->sessions_mu);
  return impl_->sessions.size();
}

struct HttpDecisionServer::Impl {
  DecisionService service;
  httplib::Server http;
  std::thread thread;

  explicit Impl(DecisionService svc) : service(std::move(svc)) {
    http.Post("/v1/decision", [this](const httplib::Request& req,
                                     httplib::Response& res) {
      const auto reply = service.handle_decision(req.body);
      res.status = reply.status;
      res.set_content(reply.body, "application/json");
    });
    http.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(service.health_json(), "application/json");
    });
  }
};

HttpDecisionServer::HttpDecisionServer(DecisionService service)
    : impl_(std::make_unique<Impl>(std::move(service))) {}

HttpDecisionServer::~HttpDecisionServer() { stop(); }

int HttpDecisionServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->http.bind_to_any_port(host);
    if (bound <= 0) throw std::runtime_error("cannot bind " + host);
  } else {
    if (!impl_->http.bind_to_port(host, port)) {
      throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    }
  }
  impl_->thread = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
  return bound;
}

void HttpDecisionServer::stop() {
  if (impl_ && impl_->thread.joinable()) {
    impl_->http.stop();
    impl_->thread.join();
  }
}

SessionResult drive_session(const std::string& host, int port,
                            const TimedTrace& trace, const VideoManifest& manifest,
                            const SimConfig& sim_cfg, std::uint64_t seed,
                            const std::string& session_id) {
  manifest.validate();
  sim_cfg.validate();
  httplib::Client client(host, port);
  Rng rng(derive_seed(seed, "session"));  // same stream as run_session
  SimState state;
  SessionResult result;
  double last_bytes = 0, last_download = 0, last_rtprop = 0;
  while (state.next_chunk < manifest.chunk_count()) {
    const int chunk = state.next_chunk;
    nlohmann::json req{{"session", session_id},
                       {"buffer_level_s", state.buffer_level_s},
                       {"last_chunk_bytes", last_bytes},
                       {"last_download_s", last_download},
                       {"last_rtprop_s", last_rtprop},
                       {"remaining_chunks", manifest.chunk_count() - chunk}};
    auto& sizes = req["next_chunk_sizes_bytes"] = nlohmann::json::array();
    for (int q = 0; q < manifest.quality_count(); ++q) {
      sizes.push_back(manifest.chunk_sizes_bytes[q][chunk]);
    }
    const auto res = client.Post("/v1/decision", req.dump(), "application/json");
    if (!res) {
      throw std::runtime_error("drive_session: transport failure at chunk " +
                               std::to_string(chunk));
    }
    if (res->status != 200) {
      throw std::runtime_error("drive_session: service error " +
                               std::to_string(res->status) + " at chunk " +
                               std::to_string(chunk) + ": " + res->body);
    }
    int quality = 0;
    try {
      quality = nlohmann::json::parse(res->body).at("quality").get<int>();
    } catch (const std::exception& e) {
      throw std::runtime_error("drive_session: bad response at chunk " +
                               std::to_string(chunk) + ": " + e.what());
    }
    auto [next, step_res] = step(state, quality, trace, manifest, sim_cfg, rng);
    if (chunk == 0) result.startup_s = step_res.download_time_s;
    result.chunks.push_back({chunk, quality, manifest.bitrates_mbps[quality],
                             step_res.download_time_s, step_res.dtrans_s,
                             step_res.rtprop_effective_s, step_res.rebuffer_s,
                             step_res.sleep_s, step_res.buffer_after_s});
    last_bytes = step_res.chunk_size_bytes;
    last_download = step_res.download_time_s;
    last_rtprop = step_res.rtprop_effective_s;
    state = next;
  }
  result.wall_time_s = state.wall_time_s;
  return result;
}

}  // namespace sgym
