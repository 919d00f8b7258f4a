#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "streamgym/policy.hpp"
#include "streamgym/qoe.hpp"
#include "streamgym/session.hpp"

namespace sgym {

struct EntropySchedule {
  double start = 1.0;
  double end = 0.1;
  double step = 0.01;
  std::int64_t total_iterations = 100000;
};

// Staircase from start down to end: (start-end)/step equal-height steps spread
// over total_iterations, clamped to end afterwards.
double entropy_weight(std::int64_t iteration, const EntropySchedule& sched);

struct TrainConfig {
  int workers = 1;
  double discount = 0.99;
  double lr_actor = 1e-4;
  double lr_critic = 1e-3;
  std::int64_t iterations = 100000;
  std::uint64_t seed = 0;
  int hidden_dim = 64;
  int history = Observation::kDefaultHistory;
  double reward_scale = 0;  // 0 = auto: 1 / utility(top bitrate)
  double grad_clip = 40.0;  // global L2 norm; 0 disables
  std::int64_t checkpoint_every = 0;  // 0 = no intermediate checkpoints
  std::filesystem::path out_dir;      // curve + checkpoints; empty = in-memory only
  QoEConfig qoe;
  SimConfig sim;
};

struct TrajectoryStep {
  std::vector<double> features;
  int action = 0;
  double reward = 0;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  SessionLog log;

  double reward_sum() const;
};

// One full session with actions sampled from the policy; per-chunk rewards are
// the QoE chunk rewards, so they sum to the session metric.
Trajectory rollout(const TimedTrace& trace, const VideoManifest& manifest,
                   const PolicyModel& model, const QoEConfig& qoe_cfg,
                   const SimConfig& sim_cfg, std::uint64_t seed);

struct Gradients {
  std::vector<double> actor;   // d(actor loss)/d(params), entropy term included
  std::vector<double> critic;  // d(critic loss)/d(params)
  double loss_actor = 0;
  double loss_critic = 0;
  double mean_entropy = 0;
};

// actor loss = -sum_t log pi(a_t|s_t) * A_t - entropy_w * sum_t H(pi(.|s_t))
// critic loss = sum_t (G_t - V(s_t))^2, A_t = G_t - V(s_t) held constant,
// G_t the discounted reward-to-go.
Gradients compute_gradients(const Trajectory& trajectory, const PolicyModel& model,
                            double discount, double entropy_weight);

struct TrainCurvePoint {
  std::int64_t iteration = 0;
  double mean_reward = 0;
  double entropy_weight = 0;
  double loss_actor = 0;
  double loss_critic = 0;
};

struct TrainResult {
  PolicyModel model;
  std::vector<TrainCurvePoint> curve;
};

// Policy-gradient training over the corpus's TRAIN split. Deterministic for
// workers = 1 and a fixed seed. Throws on divergence (non-finite loss),
// naming the iteration.
TrainResult train(const Corpus& corpus, const VideoManifest& manifest,
                  const TrainConfig& cfg, const EntropySchedule& sched);

std::string curve_to_csv(const std::vector<TrainCurvePoint>& curve);

// policy:<file> decider helpers.
AbrDecider make_policy_decider(PolicyModel model, bool greedy = true,
                               std::uint64_t seed = 0);

}  // namespace sgym
