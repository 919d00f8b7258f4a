#include "streamgym/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "streamgym/util.hpp"

namespace sgym {

int VideoManifest::chunk_count() const {
  return chunk_sizes_bytes.empty() ? 0
                                   : static_cast<int>(chunk_sizes_bytes.front().size());
}

double VideoManifest::chunk_duration(int chunk) const {
  const int count = chunk_count();
  if (chunk < 0 || chunk >= count) {
    throw std::out_of_range("chunk_duration: chunk index out of range");
  }
  if (chunk == count - 1) {
    const double tail = total_length_s - chunk_duration_s * (count - 1);
    if (tail > 1e-12) return tail;
  }
  return chunk_duration_s;
}

double VideoManifest::max_chunk_bytes() const {
  double m = 0;
  for (const auto& row : chunk_sizes_bytes) {
    for (double v : row) m = std::max(m, v);
  }
  return m;
}

void VideoManifest::validate() const {
  if (bitrates_mbps.empty()) {
    throw std::invalid_argument("manifest: empty bitrate ladder");
  }
  if (quality_values.size() != bitrates_mbps.size()) {
    throw std::invalid_argument("manifest: quality_values/bitrates length mismatch");
  }
  for (std::size_t q = 1; q < bitrates_mbps.size(); ++q) {
    if (!(bitrates_mbps[q] > bitrates_mbps[q - 1])) {
      throw std::invalid_argument("manifest: bitrates must be strictly increasing");
    }
  }
  if (chunk_sizes_bytes.size() != bitrates_mbps.size()) {
    throw std::invalid_argument("manifest: one size row per quality required");
  }
  const std::size_t chunks = chunk_sizes_bytes.front().size();
  if (chunks == 0) {
    throw std::invalid_argument("manifest: no chunks");
  }
  for (const auto& row : chunk_sizes_bytes) {
    if (row.size() != chunks) {
      throw std::invalid_argument("manifest: ragged chunk size table");
    }
  }
  for (std::size_t n = 0; n < chunks; ++n) {
    double prev = 0;
    for (std::size_t q = 0; q < chunk_sizes_bytes.size(); ++q) {
      const double s = chunk_sizes_bytes[q][n];
      if (!(s > prev)) {
        throw std::invalid_argument(
            "manifest: chunk sizes must be positive and increase with quality");
      }
      prev = s;
    }
  }
  if (!(chunk_duration_s > 0) || !(total_length_s > 0)) {
    throw std::invalid_argument("manifest: durations must be > 0");
  }
}

VideoManifest make_manifest(std::vector<double> bitrates_mbps,
                            double chunk_duration_s, double total_length_s,
                            std::vector<double> quality_values,
                            const SizeModel& size_model) {
  VideoManifest m;
  m.chunk_duration_s = chunk_duration_s;
  m.total_length_s = total_length_s;
  m.bitrates_mbps = std::move(bitrates_mbps);
  m.quality_values = std::move(quality_values);

  const int chunks = static_cast<int>(std::ceil(total_length_s / chunk_duration_s));
  Rng rng(derive_seed(size_model.seed, "vbr"));
  std::vector<double> factor(chunks);
  for (int n = 0; n < chunks; ++n) {
    factor[n] = uniform(rng, 1 - size_model.vbr_amplitude, 1 + size_model.vbr_amplitude);
  }
  m.chunk_sizes_bytes.assign(m.bitrates_mbps.size(), std::vector<double>(chunks));
  for (std::size_t q = 0; q < m.bitrates_mbps.size(); ++q) {
    for (int n = 0; n < chunks; ++n) {
      const double dur = n == chunks - 1
                             ? std::max(total_length_s - chunk_duration_s * (chunks - 1),
                                        chunk_duration_s * 1e-9)
                             : chunk_duration_s;
      m.chunk_sizes_bytes[q][n] =
          std::round(m.bitrates_mbps[q] * 1e6 * dur / 8.0 * factor[n]);
    }
  }
  m.validate();
  return m;
}

VideoManifest default_manifest(const SizeModel& size_model) {
  return make_manifest({0.3, 0.75, 1.2, 1.85, 2.85, 4.3}, 4.0, 193.0,
                       {1, 2, 3, 12, 15, 20}, size_model);
}

VideoManifest manifest_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  VideoManifest m;
  m.chunk_duration_s = j.at("chunk_duration_s").get<double>();
  m.total_length_s = j.at("total_length_s").get<double>();
  m.bitrates_mbps = j.at("bitrates_mbps").get<std::vector<double>>();
  m.quality_values = j.at("quality_values").get<std::vector<double>>();
  m.chunk_sizes_bytes =
      j.at("chunk_sizes_bytes").get<std::vector<std::vector<double>>>();
  m.validate();
  return m;
}

std::string manifest_to_json(const VideoManifest& m) {
  nlohmann::json j;
  j["chunk_duration_s"] = m.chunk_duration_s;
  j["total_length_s"] = m.total_length_s;
  j["bitrates_mbps"] = m.bitrates_mbps;
  j["quality_values"] = m.quality_values;
  j["chunk_sizes_bytes"] = m.chunk_sizes_bytes;
  return j.dump(2);
}

VideoManifest load_manifest(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw std::runtime_error("cannot open manifest: " + file.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return manifest_from_json(ss.str());
}

void save_manifest(const VideoManifest& m, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write manifest: " + file.string());
  }
  out << manifest_to_json(m) << '\n';
}

}  // namespace sgym
