#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "streamgym/abr.hpp"
#include "streamgym/manifest.hpp"
#include "streamgym/util.hpp"

namespace sgym {

inline constexpr std::string_view kPolicyVersion = "sgym-policy-v1";

// Divisors that keep the feature vector in [0, ~1].
struct FeatureNorm {
  double throughput_mbps = 4.3;
  double download_s = 4.0;
  double buffer_s = 60.0;
  double chunk_bytes = 2'150'000;
  double chunks = 49;
  double rtprop_s = 1.0;

  static FeatureNorm for_manifest(const VideoManifest& m, double buffer_capacity_s);
};

// Softmax policy plus scalar value estimate over one shared hidden layer.
// Parameters live in one flat vector: [w1 | b1 | w_pi | b_pi | w_v | b_v],
// all matrices row-major.
struct PolicyModel {
  int input_dim = 0;
  int hidden_dim = 0;
  int action_count = 0;
  int history = Observation::kDefaultHistory;
  FeatureNorm norm;
  std::vector<double> params;
  std::string version = std::string(kPolicyVersion);

  static PolicyModel init(int history, int action_count, int hidden_dim,
                          std::uint64_t seed, const FeatureNorm& norm);
  static int feature_dim(int history, int action_count);

  std::size_t param_count() const { return params.size(); }
  std::span<double> w1();
  std::span<double> b1();
  std::span<double> w_pi();
  std::span<double> b_pi();
  std::span<double> w_v();
  std::span<double> b_v();
  std::span<const double> w1() const;
  std::span<const double> b1() const;
  std::span<const double> w_pi() const;
  std::span<const double> b_pi() const;
  std::span<const double> w_v() const;
  std::span<const double> b_v() const;
};

// Fixed layout: throughput history, download history, buffer, next chunk
// sizes, remaining chunks, one-hot last quality (all zero when none), rtprop.
std::vector<double> featurize(const Observation& obs, const FeatureNorm& norm,
                              int action_count);

struct ForwardResult {
  std::vector<double> probs;
  double value = 0;
  std::vector<double> hidden;  // post-activation, kept for backprop
  std::vector<double> logits;
};

ForwardResult policy_forward(const PolicyModel& model,
                             std::span<const double> features);
ForwardResult policy_forward_obs(const PolicyModel& model, const Observation& obs);

int sample_action(std::span<const double> probs, Rng& rng);
int argmax_action(std::span<const double> probs);

std::string policy_to_json(const PolicyModel& model);
PolicyModel policy_from_json(const std::string& text);
PolicyModel load_policy(const std::filesystem::path& file);
// Atomic: writes a temp file in the target directory, then renames.
void save_policy(const PolicyModel& model, const std::filesystem::path& file);

std::uint64_t policy_fingerprint(const PolicyModel& model);

}  // namespace sgym
