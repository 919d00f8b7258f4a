#include "streamgym/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>

#include "streamgym/session.hpp"

namespace sgym {

namespace {

SimConfig oracle_sim_config(SimConfig cfg) {
  // Optimality needs determinism: noise-free SIM-T, no loss.
  cfg.variant = SimVariant::kSimT;
  cfg.loss_rate = 0;
  return cfg;
}

double simulate_sequence(std::span<const int> seq, const TimedTrace& trace,
                         const VideoManifest& manifest, const SimConfig& cfg,
                         const QoEConfig& qoe_cfg) {
  SimState state;
  Rng rng(0);  // unused under the deterministic config
  SessionLog log;
  log.reserve(seq.size());
  for (int q : seq) {
    auto [next, res] = step(state, q, trace, manifest, cfg, rng);
    log.push_back({manifest.bitrates_mbps[q], res.rebuffer_s});
    state = next;
  }
  return session_qoe(log, qoe_cfg);
}

struct Best {
  double qoe = -std::numeric_limits<double>::infinity();
  std::vector<int> seq;
};

// Depth-first over quality sequences; shared prefixes share their SimState.
void search(const SimState& state, int depth, int horizon,
            const TimedTrace& trace, const VideoManifest& manifest,
            const SimConfig& cfg, const QoEConfig& qoe_cfg, double qoe_so_far,
            std::vector<int>& prefix, Best& best) {
  if (depth == horizon) {
    if (qoe_so_far > best.qoe) {
      best.qoe = qoe_so_far;
      best.seq = prefix;
    }
    return;
  }
  Rng rng(0);
  const std::optional<double> prev =
      state.last_quality >= 0
          ? std::optional<double>(manifest.bitrates_mbps[state.last_quality])
          : std::nullopt;
  for (int q = 0; q < manifest.quality_count(); ++q) {
    auto [next, res] = step(state, q, trace, manifest, cfg, rng);
    const double r =
        chunk_reward(prev, manifest.bitrates_mbps[q], res.rebuffer_s, qoe_cfg);
    prefix.push_back(q);
    search(next, depth + 1, horizon, trace, manifest, cfg, qoe_cfg,
           qoe_so_far + r, prefix, best);
    prefix.pop_back();
  }
}

OracleResult exhaustive(const TimedTrace& trace, const VideoManifest& manifest,
                        const SimConfig& cfg, const QoEConfig& qoe_cfg,
                        int horizon, int workers) {
  const int qualities = manifest.quality_count();
  std::vector<Best> branch(qualities);
  auto run_branch = [&](int first) {
    SimState state;
    Rng rng(0);
    auto [next, res] = step(state, first, trace, manifest, cfg, rng);
    const double r = chunk_reward(std::nullopt, manifest.bitrates_mbps[first],
                                  res.rebuffer_s, qoe_cfg);
    std::vector<int> prefix{first};
    branch[first].qoe = -std::numeric_limits<double>::infinity();
    search(next, 1, horizon, trace, manifest, cfg, qoe_cfg, r, prefix,
           branch[first]);
  };
  if (workers > 1) {
    std::vector<std::future<void>> jobs;
    for (int q = 0; q < qualities; ++q) {
      jobs.push_back(std::async(std::launch::async, run_branch, q));
    }
    for (auto& j : jobs) j.get();
  } else {
    for (int q = 0; q < qualities; ++q) run_branch(q);
  }
  // Merge in ladder order so ties resolve to the lexicographically smallest
  // sequence regardless of worker count.
  Best best;
  for (const auto& b : branch) {
    if (b.qoe > best.qoe) best = b;
  }
  return {best.seq, best.qoe};
}

OracleResult dynamic_program(const TimedTrace& trace, const VideoManifest& manifest,
                             const SimConfig& cfg, const QoEConfig& qoe_cfg,
                             int horizon, double quant) {
  const int qualities = manifest.quality_count();
  const int cells = static_cast<int>(std::floor(cfg.buffer_capacity_s / quant)) + 1;
  auto cell_of = [&](double buffer) {
    return std::min(static_cast<int>(std::floor(buffer / quant)), cells - 1);
  };

  // Chunk n is priced at the playback clock; exact for constant traces, which
  // is what optimality claims are made for.
  std::vector<std::vector<double>> download(horizon,
                                            std::vector<double>(qualities));
  double clock = 0;
  for (int n = 0; n < horizon; ++n) {
    const double request_rtprop = trace.sample_at(clock).rtprop;
    for (int q = 0; q < qualities; ++q) {
      auto dr = chunk_dtrans(manifest.chunk_sizes_bytes[q][n],
                             cfg.packet_size_bytes, trace, clock);
      download[n][q] = dr.dtrans_s + chunk_rtprop(request_rtprop, dr.packet_rtprops_s);
    }
    clock += manifest.chunk_duration(n);
  }

  // value[lq][cell], lq = 0 for none else quality + 1, rolled backwards over n.
  const int lq_count = qualities + 1;
  std::vector<std::vector<double>> value(lq_count, std::vector<double>(cells, 0));
  std::vector<std::vector<std::vector<std::int8_t>>> choice(
      horizon, std::vector<std::vector<std::int8_t>>(
                   lq_count, std::vector<std::int8_t>(cells, 0)));
  for (int n = horizon - 1; n >= 0; --n) {
    std::vector<std::vector<double>> next_value(lq_count,
                                                std::vector<double>(cells, 0));
    std::swap(next_value, value);  // value becomes this chunk's table
    for (int lq = 0; lq < lq_count; ++lq) {
      for (int cell = 0; cell < cells; ++cell) {
        const double buffer = cell * quant;
        double best = -std::numeric_limits<double>::infinity();
        std::int8_t best_q = 0;
        for (int q = 0; q < qualities; ++q) {
          const double dl = download[n][q];
          const double rebuffer = lq == 0 ? 0.0 : std::max(0.0, dl - buffer);
          double after = std::max(buffer - dl, 0.0) + manifest.chunk_duration(n);
          after = std::min(after, cfg.buffer_capacity_s);
          double reward = utility(manifest.bitrates_mbps[q], qoe_cfg) -
                          qoe_cfg.mu * rebuffer;
          if (lq > 0) {
            reward -= std::abs(utility(manifest.bitrates_mbps[q], qoe_cfg) -
                               utility(manifest.bitrates_mbps[lq - 1], qoe_cfg));
          }
          const double v = reward + next_value[q + 1][cell_of(after)];
          if (v > best) {
            best = v;
            best_q = static_cast<std::int8_t>(q);
          }
        }
        value[lq][cell] = best;
        choice[n][lq][cell] = best_q;
      }
    }
  }

  // Walk the quantized chain, then score the sequence on the real dynamics.
  std::vector<int> seq;
  seq.reserve(horizon);
  int lq = 0;
  double buffer = 0;
  for (int n = 0; n < horizon; ++n) {
    const int q = choice[n][lq][cell_of(buffer)];
    seq.push_back(q);
    const double dl = download[n][q];
    buffer = std::min(std::max(buffer - dl, 0.0) + manifest.chunk_duration(n),
                      cfg.buffer_capacity_s);
    lq = q + 1;
  }
  const double qoe = simulate_sequence(seq, trace, manifest, cfg, qoe_cfg);
  return {std::move(seq), qoe};
}

}  // namespace

OracleResult offline_optimal(const TimedTrace& trace, const VideoManifest& manifest,
                             const SimConfig& sim_cfg, const QoEConfig& qoe_cfg,
                             int horizon, OracleMode mode, double buffer_quant_s,
                             int workers) {
  manifest.validate();
  if (horizon < 1 || horizon > manifest.chunk_count()) {
    throw std::invalid_argument("offline_optimal: bad horizon");
  }
  const SimConfig cfg = oracle_sim_config(sim_cfg);
  if (mode == OracleMode::kExhaustive) {
    if (horizon > 9) {
      throw std::invalid_argument(
          "offline_optimal: exhaustive mode is limited to horizon <= 9");
    }
    return exhaustive(trace, manifest, cfg, qoe_cfg, horizon, workers);
  }
  if (!(buffer_quant_s > 0)) {
    throw std::invalid_argument("offline_optimal: buffer_quant must be > 0");
  }
  return dynamic_program(trace, manifest, cfg, qoe_cfg, horizon, buffer_quant_s);
}

}  // namespace sgym
