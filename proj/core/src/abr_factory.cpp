#include "streamgym/abr_factory.hpp"

#include <stdexcept>

namespace sgym {

AbrSpec parse_abr_spec(const std::string& text) {
  AbrSpec spec;
  spec.text = text;
  if (text == "rate") {
    spec.kind = AbrSpec::Kind::kRate;
  } else if (text == "buffer") {
    spec.kind = AbrSpec::Kind::kBuffer;
  } else if (text == "oracle") {
    spec.kind = AbrSpec::Kind::kOracle;
  } else if (text.rfind("fixed:", 0) == 0) {
    spec.kind = AbrSpec::Kind::kFixed;
    try {
      spec.fixed_quality = std::stoi(text.substr(6));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad abr spec: " + text);
    }
  } else if (text.rfind("policy:", 0) == 0) {
    spec.kind = AbrSpec::Kind::kPolicy;
    spec.model = std::make_shared<PolicyModel>(load_policy(text.substr(7)));
  } else {
    throw std::invalid_argument(
        "unknown abr spec '" + text +
        "' (expected fixed:<i> | rate | buffer | policy:<file> | oracle)");
  }
  return spec;
}

AbrDecider make_decider(const AbrSpec& spec, const VideoManifest& manifest,
                        const SimConfig& sim_cfg, const QoEConfig& qoe_cfg,
                        const TimedTrace* trace, std::uint64_t seed) {
  switch (spec.kind) {
    case AbrSpec::Kind::kFixed: {
      if (spec.fixed_quality < 0 || spec.fixed_quality >= manifest.quality_count()) {
        throw std::invalid_argument("fixed quality index out of range");
      }
      const int q = spec.fixed_quality;
      return [q](const Observation& obs) { return decide_fixed(obs, q); };
    }
    case AbrSpec::Kind::kRate: {
      const double safety = spec.rate_safety;
      return [&manifest, safety](const Observation& obs) {
        return decide_rate_based(obs, manifest, safety);
      };
    }
    case AbrSpec::Kind::kBuffer: {
      const double res = spec.reservoir_s, cushion = spec.cushion_s;
      return [&manifest, res, cushion](const Observation& obs) {
        return decide_buffer_based(obs, manifest, res, cushion);
      };
    }
    case AbrSpec::Kind::kPolicy:
      return make_policy_decider(*spec.model, spec.policy_greedy, seed);
    case AbrSpec::Kind::kOracle: {
      if (trace == nullptr) {
        throw std::invalid_argument("oracle abr requires a bound trace");
      }
      auto plan = std::make_shared<OracleResult>(
          offline_optimal(*trace, manifest, sim_cfg, qoe_cfg,
                          manifest.chunk_count(), OracleMode::kDp));
      const int chunks = manifest.chunk_count();
      return [plan, chunks](const Observation& obs) {
        const int next = chunks - obs.remaining_chunks;
        if (next < 0 || next >= static_cast<int>(plan->qualities.size())) {
          throw std::logic_error("oracle plan exhausted");
        }
        return plan->qualities[next];
      };
    }
  }
  throw std::logic_error("unreachable abr kind");
}

}  // namespace sgym
