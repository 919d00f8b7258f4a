#pragma once

#include <memory>
#include <string>

#include "streamgym/abr.hpp"
#include "streamgym/learn.hpp"
#include "streamgym/oracle.hpp"

namespace sgym {

// Algorithm selection key: fixed:<i> | rate | buffer | policy:<model-file> | oracle
struct AbrSpec {
  enum class Kind { kFixed, kRate, kBuffer, kPolicy, kOracle };
  Kind kind = Kind::kRate;
  int fixed_quality = 0;
  double rate_safety = 0.9;
  double reservoir_s = 5.0;
  double cushion_s = 10.0;
  std::shared_ptr<const PolicyModel> model;  // kPolicy
  bool policy_greedy = true;
  std::string text;  // the original key, for reports
};

AbrSpec parse_abr_spec(const std::string& text);

// Binds the algorithm to a session. The oracle key plans the whole trace with
// the DP oracle up front and replays it chunk by chunk.
AbrDecider make_decider(const AbrSpec& spec, const VideoManifest& manifest,
                        const SimConfig& sim_cfg, const QoEConfig& qoe_cfg,
                        const TimedTrace* trace, std::uint64_t seed);

}  // namespace sgym
