#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sgym {

struct VideoManifest {
  double chunk_duration_s = 4.0;  // nominal; the last chunk may be shorter
  double total_length_s = 193.0;
  std::vector<double> bitrates_mbps;                   // strictly increasing
  std::vector<double> quality_values;                  // per bitrate, HD utility
  std::vector<std::vector<double>> chunk_sizes_bytes;  // [quality][chunk]

  int quality_count() const { return static_cast<int>(bitrates_mbps.size()); }
  int chunk_count() const;
  double chunk_duration(int chunk) const;
  double max_chunk_bytes() const;

  void validate() const;  // throws std::invalid_argument on broken invariants
};

// Deterministic per-chunk variable-bitrate factor drawn from
// [1 - amplitude, 1 + amplitude]; the same factor applies to every quality of
// a chunk, so sizes stay monotone in quality.
struct SizeModel {
  double vbr_amplitude = 0.15;
  std::uint64_t seed = 0;
};

VideoManifest make_manifest(std::vector<double> bitrates_mbps,
                            double chunk_duration_s, double total_length_s,
                            std::vector<double> quality_values,
                            const SizeModel& size_model = {});

// The reference ladder: {0.3, 0.75, 1.2, 1.85, 2.85, 4.3} Mbps, 4 s chunks,
// 193 s total (48 full chunks + a 1 s tail).
VideoManifest default_manifest(const SizeModel& size_model = {});

VideoManifest manifest_from_json(const std::string& text);
std::string manifest_to_json(const VideoManifest& m);
VideoManifest load_manifest(const std::filesystem::path& file);
void save_manifest(const VideoManifest& m, const std::filesystem::path& file);

}  // namespace sgym
