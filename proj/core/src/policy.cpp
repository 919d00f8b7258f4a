#include "streamgym/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace sgym {

FeatureNorm FeatureNorm::for_manifest(const VideoManifest& m,
                                      double buffer_capacity_s) {
  FeatureNorm n;
  n.throughput_mbps = m.bitrates_mbps.back();
  n.download_s = m.chunk_duration_s;
  n.buffer_s = buffer_capacity_s;
  n.chunk_bytes = m.max_chunk_bytes();
  n.chunks = m.chunk_count();
  n.rtprop_s = 1.0;
  return n;
}

int PolicyModel::feature_dim(int history, int action_count) {
  return 2 * history + 1 + action_count + 1 + action_count + 1;
}

namespace {

struct Layout {
  std::size_t w1, b1, w_pi, b_pi, w_v, b_v, total;
};

Layout layout_of(int in, int hidden, int actions) {
  Layout l{};
  l.w1 = 0;
  l.b1 = l.w1 + static_cast<std::size_t>(hidden) * in;
  l.w_pi = l.b1 + hidden;
  l.b_pi = l.w_pi + static_cast<std::size_t>(actions) * hidden;
  l.w_v = l.b_pi + actions;
  l.b_v = l.w_v + hidden;
  l.total = l.b_v + 1;
  return l;
}

}  // namespace

#define SGYM_PARAM_SPAN(name, from, count)                                     \
  std::span<double> PolicyModel::name() {                                      \
    auto l = layout_of(input_dim, hidden_dim, action_count);                   \
    return {params.data() + l.from, (count)};                                  \
  }                                                                            \
  std::span<const double> PolicyModel::name() const {                          \
    auto l = layout_of(input_dim, hidden_dim, action_count);                   \
    return {params.data() + l.from, (count)};                                  \
  }

SGYM_PARAM_SPAN(w1, w1, static_cast<std::size_t>(hidden_dim) * input_dim)
SGYM_PARAM_SPAN(b1, b1, static_cast<std::size_t>(hidden_dim))
SGYM_PARAM_SPAN(w_pi, w_pi, static_cast<std::size_t>(action_count) * hidden_dim)
SGYM_PARAM_SPAN(b_pi, b_pi, static_cast<std::size_t>(action_count))
SGYM_PARAM_SPAN(w_v, w_v, static_cast<std::size_t>(hidden_dim))
SGYM_PARAM_SPAN(b_v, b_v, std::size_t{1})
#undef SGYM_PARAM_SPAN

PolicyModel PolicyModel::init(int history, int action_count, int hidden_dim,
                              std::uint64_t seed, const FeatureNorm& norm) {
  if (history < 1 || action_count < 2 || hidden_dim < 1) {
    throw std::invalid_argument("PolicyModel: bad dimensions");
  }
  PolicyModel m;
  m.history = history;
  m.action_count = action_count;
  m.hidden_dim = hidden_dim;
  m.input_dim = feature_dim(history, action_count);
  m.norm = norm;
  const auto l = layout_of(m.input_dim, hidden_dim, action_count);
  m.params.assign(l.total, 0.0);
  Rng rng(derive_seed(seed, "policy-init"));
  const double scale_in = std::sqrt(2.0 / m.input_dim);
  for (std::size_t i = l.w1; i < l.b1; ++i) {
    m.params[i] = (uniform01(rng) * 2 - 1) * scale_in;
  }
  const double scale_head = std::sqrt(1.0 / hidden_dim);
  for (std::size_t i = l.w_pi; i < l.b_pi; ++i) {
    m.params[i] = (uniform01(rng) * 2 - 1) * scale_head;
  }
  for (std::size_t i = l.w_v; i < l.b_v; ++i) {
    m.params[i] = (uniform01(rng) * 2 - 1) * scale_head;
  }
  return m;
}

std::vector<double> featurize(const Observation& obs, const FeatureNorm& norm,
                              int action_count) {
  std::vector<double> f;
  f.reserve(2 * obs.throughput_history_mbps.size() + 2 * action_count + 3);
  for (double v : obs.throughput_history_mbps) f.push_back(v / norm.throughput_mbps);
  for (double v : obs.download_time_history_s) f.push_back(v / norm.download_s);
  f.push_back(obs.buffer_level_s / norm.buffer_s);
  for (int q = 0; q < action_count; ++q) {
    const double size = q < static_cast<int>(obs.next_chunk_sizes_bytes.size())
                            ? obs.next_chunk_sizes_bytes[q]
                            : 0.0;
    f.push_back(size / norm.chunk_bytes);
  }
  f.push_back(obs.remaining_chunks / norm.chunks);
  for (int q = 0; q < action_count; ++q) {
    f.push_back(obs.last_quality == q ? 1.0 : 0.0);
  }
  f.push_back(obs.rtprop_last_s / norm.rtprop_s);
  return f;
}

ForwardResult policy_forward(const PolicyModel& model,
                             std::span<const double> features) {
  if (static_cast<int>(features.size()) != model.input_dim) {
    throw std::invalid_argument("policy_forward: feature size mismatch");
  }
  for (double v : features) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("policy_forward: non-finite feature");
    }
  }
  ForwardResult out;
  out.hidden.assign(model.hidden_dim, 0.0);
  const auto w1 = model.w1();
  const auto b1 = model.b1();
  for (int h = 0; h < model.hidden_dim; ++h) {
    double acc = b1[h];
    const double* row = w1.data() + static_cast<std::size_t>(h) * model.input_dim;
    for (int i = 0; i < model.input_dim; ++i) acc += row[i] * features[i];
    out.hidden[h] = acc > 0 ? acc : 0.0;  // rectifier
  }
  out.logits.assign(model.action_count, 0.0);
  const auto w_pi = model.w_pi();
  const auto b_pi = model.b_pi();
  for (int a = 0; a < model.action_count; ++a) {
    double acc = b_pi[a];
    const double* row = w_pi.data() + static_cast<std::size_t>(a) * model.hidden_dim;
    for (int h = 0; h < model.hidden_dim; ++h) acc += row[h] * out.hidden[h];
    out.logits[a] = acc;
  }
  const double zmax = *std::max_element(out.logits.begin(), out.logits.end());
  out.probs.assign(model.action_count, 0.0);
  double norm = 0;
  for (int a = 0; a < model.action_count; ++a) {
    out.probs[a] = std::exp(out.logits[a] - zmax);
    norm += out.probs[a];
  }
  for (auto& p : out.probs) p /= norm;

  const auto w_v = model.w_v();
  double v = model.b_v()[0];
  for (int h = 0; h < model.hidden_dim; ++h) v += w_v[h] * out.hidden[h];
  out.value = v;
  return out;
}

ForwardResult policy_forward_obs(const PolicyModel& model, const Observation& obs) {
  return policy_forward(model, featurize(obs, model.norm, model.action_count));
}

int sample_action(std::span<const double> probs, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    acc += probs[a];
    if (u < acc) return static_cast<int>(a);
  }
  return static_cast<int>(probs.size()) - 1;
}

int argmax_action(std::span<const double> probs) {
  return static_cast<int>(
      std::max_element(probs.begin(), probs.end()) - probs.begin());
}

std::string policy_to_json(const PolicyModel& model) {
  nlohmann::json j;
  j["version"] = model.version;
  j["input_dim"] = model.input_dim;
  j["hidden_dim"] = model.hidden_dim;
  j["actions"] = model.action_count;
  j["history"] = model.history;
  j["norm"] = {{"throughput_mbps", model.norm.throughput_mbps},
               {"download_s", model.norm.download_s},
               {"buffer_s", model.norm.buffer_s},
               {"chunk_bytes", model.norm.chunk_bytes},
               {"chunks", model.norm.chunks},
               {"rtprop_s", model.norm.rtprop_s}};
  auto dump = [](std::span<const double> s) {
    return std::vector<double>(s.begin(), s.end());
  };
  j["w1"] = dump(model.w1());
  j["b1"] = dump(model.b1());
  j["w_pi"] = dump(model.w_pi());
  j["b_pi"] = dump(model.b_pi());
  j["w_v"] = dump(model.w_v());
  j["b_v"] = dump(model.b_v());
  return j.dump();
}

PolicyModel policy_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const auto version = j.at("version").get<std::string>();
  if (version != kPolicyVersion) {
    throw std::runtime_error("unsupported policy version: " + version);
  }
  PolicyModel m;
  m.version = version;
  m.input_dim = j.at("input_dim").get<int>();
  m.hidden_dim = j.at("hidden_dim").get<int>();
  m.action_count = j.at("actions").get<int>();
  m.history = j.at("history").get<int>();
  const auto& n = j.at("norm");
  m.norm.throughput_mbps = n.at("throughput_mbps").get<double>();
  m.norm.download_s = n.at("download_s").get<double>();
  m.norm.buffer_s = n.at("buffer_s").get<double>();
  m.norm.chunk_bytes = n.at("chunk_bytes").get<double>();
  m.norm.chunks = n.at("chunks").get<double>();
  m.norm.rtprop_s = n.at("rtprop_s").get<double>();
  const auto l = layout_of(m.input_dim, m.hidden_dim, m.action_count);
  m.params.assign(l.total, 0.0);
  auto read = [&](const char* key, std::span<double> dst) {
    const auto arr = j.at(key).get<std::vector<double>>();
    if (arr.size() != dst.size()) {
      throw std::runtime_error(std::string("policy JSON: bad length for ") + key);
    }
    std::copy(arr.begin(), arr.end(), dst.begin());
  };
  read("w1", m.w1());
  read("b1", m.b1());
  read("w_pi", m.w_pi());
  read("b_pi", m.b_pi());
  read("w_v", m.w_v());
  read("b_v", m.b_v());
  for (double p : m.params) {
    if (!std::isfinite(p)) throw std::runtime_error("policy JSON: non-finite weight");
  }
  return m;
}

PolicyModel load_policy(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw std::runtime_error("cannot open policy file: " + file.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return policy_from_json(ss.str());
}

void save_policy(const PolicyModel& model, const std::filesystem::path& file) {
  namespace fs = std::filesystem;
  const fs::path tmp = file.parent_path() / (file.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) {
      throw std::runtime_error("cannot write policy file: " + tmp.string());
    }
    out << policy_to_json(model) << '\n';
  }
  fs::rename(tmp, file);
}

std::uint64_t policy_fingerprint(const PolicyModel& model) {
  return fnv1a(policy_to_json(model));
}

}  // namespace sgym
