#include "streamgym/learn.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace sgym {

double entropy_weight(std::int64_t iteration, const EntropySchedule& sched) {
  if (iteration < 0) {
    throw std::invalid_argument("entropy_weight: iteration must be >= 0");
  }
  if (!(sched.start >= sched.end) || !(sched.end > 0) || !(sched.step > 0) ||
      sched.total_iterations <= 0) {
    throw std::invalid_argument("entropy_weight: bad schedule");
  }
  const auto steps =
      static_cast<std::int64_t>(std::llround((sched.start - sched.end) / sched.step));
  if (steps == 0 || iteration >= sched.total_iterations) return sched.end;
  const std::int64_t taken = iteration * steps / sched.total_iterations;
  return std::max(sched.start - sched.step * static_cast<double>(taken), sched.end);
}

double Trajectory::reward_sum() const {
  double s = 0;
  for (const auto& st : steps) s += st.reward;
  return s;
}

Trajectory rollout(const TimedTrace& trace, const VideoManifest& manifest,
                   const PolicyModel& model, const QoEConfig& qoe_cfg,
                   const SimConfig& sim_cfg, std::uint64_t seed) {
  Rng sim_rng(derive_seed(seed, "rollout-sim"));
  Rng act_rng(derive_seed(seed, "rollout-act"));
  ObservationTracker tracker(model.history);
  SimState state;
  Trajectory traj;
  traj.steps.reserve(manifest.chunk_count());
  std::optional<double> prev_bitrate;
  while (state.next_chunk < manifest.chunk_count()) {
    const Observation obs =
        tracker.observe(state.buffer_level_s, state.next_chunk, manifest);
    auto features = featurize(obs, model.norm, model.action_count);
    const auto fwd = policy_forward(model, features);
    const int action = sample_action(fwd.probs, act_rng);
    auto [next, res] = step(state, action, trace, manifest, sim_cfg, sim_rng);
    const double bitrate = manifest.bitrates_mbps[action];
    const double reward = chunk_reward(prev_bitrate, bitrate, res.rebuffer_s, qoe_cfg);
    tracker.record(res.chunk_size_bytes, res.download_time_s, res.rtprop_effective_s,
                   action);
    traj.steps.push_back({std::move(features), action, reward});
    traj.log.push_back({bitrate, res.rebuffer_s});
    prev_bitrate = bitrate;
    state = next;
  }
  return traj;
}

Gradients compute_gradients(const Trajectory& trajectory, const PolicyModel& model,
                            double discount, double entropy_weight) {
  if (trajectory.steps.empty()) {
    throw std::invalid_argument("compute_gradients: empty trajectory");
  }
  const int T = static_cast<int>(trajectory.steps.size());
  const int in = model.input_dim;
  const int hid = model.hidden_dim;
  const int act = model.action_count;

  Gradients g;
  g.actor.assign(model.param_count(), 0.0);
  g.critic.assign(model.param_count(), 0.0);

  // Discounted reward-to-go.
  std::vector<double> returns(T);
  double acc = 0;
  for (int t = T - 1; t >= 0; --t) {
    acc = trajectory.steps[t].reward + discount * acc;
    returns[t] = acc;
  }

  PolicyModel scratch = model;  // span accessors need a mutable owner
  const auto w1 = scratch.w1();
  const auto w_pi = scratch.w_pi();
  const auto w_v = scratch.w_v();
  const auto base = scratch.params.data();
  auto idx = [&](const double* p) {
    return static_cast<std::size_t>(p - base);
  };

  std::vector<double> dlogits(act), dhidden(hid);
  for (int t = 0; t < T; ++t) {
    const auto& st = trajectory.steps[t];
    const auto fwd = policy_forward(model, st.features);

    // Stable log-softmax from the logits.
    const double zmax = *std::max_element(fwd.logits.begin(), fwd.logits.end());
    double expsum = 0;
    for (double z : fwd.logits) expsum += std::exp(z - zmax);
    const double logz = std::log(expsum) + zmax;

    double entropy = 0;
    for (int a = 0; a < act; ++a) {
      const double logp = fwd.logits[a] - logz;
      entropy -= fwd.probs[a] * logp;
    }
    const double advantage = returns[t] - fwd.value;
    g.loss_actor +=
        -(st.action >= 0 ? (fwd.logits[st.action] - logz) : 0.0) * advantage -
        entropy_weight * entropy;
    const double verr = fwd.value - returns[t];
    g.loss_critic += verr * verr;
    g.mean_entropy += entropy / T;

    // Policy head: d(-logpi*A)/dz = -A*(onehot - pi);
    // d(-w*H)/dz_j = w * pi_j * (logpi_j + H).
    for (int a = 0; a < act; ++a) {
      const double logp = fwd.logits[a] - logz;
      dlogits[a] = -advantage * ((a == st.action ? 1.0 : 0.0) - fwd.probs[a]) +
                   entropy_weight * fwd.probs[a] * (logp + entropy);
    }
    std::fill(dhidden.begin(), dhidden.end(), 0.0);
    for (int a = 0; a < act; ++a) {
      const double* row = w_pi.data() + static_cast<std::size_t>(a) * hid;
      const std::size_t row0 = idx(row);
      for (int h = 0; h < hid; ++h) {
        g.actor[row0 + h] += dlogits[a] * fwd.hidden[h];
        dhidden[h] += dlogits[a] * row[h];
      }
      g.actor[idx(scratch.b_pi().data()) + a] += dlogits[a];
    }
    const std::size_t w1_0 = idx(w1.data());
    const std::size_t b1_0 = idx(scratch.b1().data());
    for (int h = 0; h < hid; ++h) {
      if (fwd.hidden[h] <= 0) continue;  // rectifier gate
      const double dh = dhidden[h];
      const std::size_t row0 = w1_0 + static_cast<std::size_t>(h) * in;
      for (int i = 0; i < in; ++i) g.actor[row0 + i] += dh * st.features[i];
      g.actor[b1_0 + h] += dh;
    }

    // Value head: d((V-G)^2)/dV = 2*(V-G).
    const double dv = 2.0 * verr;
    const std::size_t wv_0 = idx(w_v.data());
    for (int h = 0; h < hid; ++h) g.critic[wv_0 + h] += dv * fwd.hidden[h];
    g.critic[idx(scratch.b_v().data())] += dv;
    for (int h = 0; h < hid; ++h) {
      if (fwd.hidden[h] <= 0) continue;
      const double dh = dv * w_v[h];
      const std::size_t row0 = w1_0 + static_cast<std::size_t>(h) * in;
      for (int i = 0; i < in; ++i) g.critic[row0 + i] += dh * st.features[i];
      g.critic[b1_0 + h] += dh;
    }
  }

  if (!std::isfinite(g.loss_actor) || !std::isfinite(g.loss_critic)) {
    throw std::runtime_error("compute_gradients: non-finite loss");
  }
  return g;
}

namespace {

void clip_global_norm(std::vector<double>& g, double clip) {
  if (clip <= 0) return;
  double sq = 0;
  for (double v : g) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm > clip) {
    const double s = clip / norm;
    for (auto& v : g) v *= s;
  }
}

struct RmsProp {
  std::vector<double> cache;
  double decay = 0.99;
  double eps = 1e-6;

  void apply(std::vector<double>& params, const std::vector<double>& grad,
             double lr) {
    if (cache.empty()) cache.assign(params.size(), 0.0);
    for (std::size_t i = 0; i < params.size(); ++i) {
      cache[i] = decay * cache[i] + (1 - decay) * grad[i] * grad[i];
      params[i] -= lr * grad[i] / (std::sqrt(cache[i]) + eps);
    }
  }
};

}  // namespace

TrainResult train(const Corpus& corpus, const VideoManifest& manifest,
                  const TrainConfig& cfg, const EntropySchedule& sched) {
  manifest.validate();
  cfg.sim.validate();
  const auto train_traces = corpus.traces(Split::kTrain);
  if (train_traces.empty()) {
    throw std::invalid_argument("train: empty training split");
  }
  if (cfg.iterations <= 0 || !(cfg.discount > 0 && cfg.discount <= 1)) {
    throw std::invalid_argument("train: bad iterations or discount");
  }

  const double scale =
      cfg.reward_scale > 0
          ? cfg.reward_scale
          : 1.0 / utility(manifest.bitrates_mbps.back(), cfg.qoe);

  PolicyModel model = PolicyModel::init(
      cfg.history, manifest.quality_count(), cfg.hidden_dim, cfg.seed,
      FeatureNorm::for_manifest(manifest, cfg.sim.buffer_capacity_s));

  std::vector<TrainCurvePoint> curve(cfg.iterations);
  std::mutex model_mu;
  RmsProp opt_actor, opt_critic;
  std::atomic<std::int64_t> next_iteration{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker_loop = [&]() {
    try {
      while (true) {
        const std::int64_t iter = next_iteration.fetch_add(1);
        if (iter >= cfg.iterations) return;
        {
          std::lock_guard lock(failure_mu);
          if (failure) return;
        }
        Rng draw(derive_seed(cfg.seed, "draw", static_cast<std::uint64_t>(iter)));
        const auto pick = std::min<std::size_t>(
            static_cast<std::size_t>(uniform01(draw) * train_traces.size()),
            train_traces.size() - 1);
        PolicyModel snapshot = [&] {
          std::lock_guard lock(model_mu);
          return model;
        }();
        const auto traj =
            rollout(*train_traces[pick], manifest, snapshot, cfg.qoe, cfg.sim,
                    derive_seed(cfg.seed, "rollout", static_cast<std::uint64_t>(iter)));
        Trajectory scaled = traj;
        for (auto& st : scaled.steps) st.reward *= scale;
        const double w = entropy_weight(iter, sched);
        Gradients g;
        try {
          g = compute_gradients(scaled, snapshot, cfg.discount, w);
        } catch (const std::runtime_error&) {
          throw std::runtime_error("training diverged at iteration " +
                                   std::to_string(iter));
        }
        clip_global_norm(g.actor, cfg.grad_clip);
        clip_global_norm(g.critic, cfg.grad_clip);
        {
          std::lock_guard lock(model_mu);
          opt_actor.apply(model.params, g.actor, cfg.lr_actor);
          opt_critic.apply(model.params, g.critic, cfg.lr_critic);
        }
        curve[iter] = {iter, traj.reward_sum(), w, g.loss_actor, g.loss_critic};
        if (!cfg.out_dir.empty() && cfg.checkpoint_every > 0 &&
            (iter + 1) % cfg.checkpoint_every == 0) {
          PolicyModel snap = [&] {
            std::lock_guard lock(model_mu);
            return model;
          }();
          save_policy(snap, cfg.out_dir / ("checkpoint-" + std::to_string(iter + 1) +
                                           ".json"));
        }
      }
    } catch (...) {
      std::lock_guard lock(failure_mu);
      if (!failure) failure = std::current_exception();
    }
  };

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
  }
  const int workers = std::max(cfg.workers, 1);
  if (workers == 1) {
    worker_loop();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker_loop);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  if (!cfg.out_dir.empty()) {
    std::ofstream out(cfg.out_dir / "training_curve.csv", std::ios::binary);
    out << curve_to_csv(curve);
  }
  return {std::move(model), std::move(curve)};
}

std::string curve_to_csv(const std::vector<TrainCurvePoint>& curve) {
  std::string out = "iteration,mean_reward,entropy_weight,loss_actor,loss_critic\n";
  for (const auto& p : curve) {
    out += std::to_string(p.iteration);
    for (double v : {p.mean_reward, p.entropy_weight, p.loss_actor, p.loss_critic}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

AbrDecider make_policy_decider(PolicyModel model, bool greedy, std::uint64_t seed) {
  auto rng = std::make_shared<Rng>(derive_seed(seed, "policy-decider"));
  return [model = std::move(model), greedy, rng](const Observation& obs) {
    const auto fwd = policy_forward_obs(model, obs);
    return greedy ? argmax_action(fwd.probs) : sample_action(fwd.probs, *rng);
  };
}

}  // namespace sgym
