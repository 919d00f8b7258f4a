#pragma once

#include <span>
#include <string>
#include <vector>

#include "streamgym/abr_factory.hpp"
#include "streamgym/session.hpp"

namespace sgym {

struct EvalRow {
  std::string trace;
  std::uint64_t seed = 0;
  double session_qoe = 0;
  double mean_bitrate_mbps = 0;
  double total_rebuffer_s = 0;
  int switch_count = 0;
};

struct EvalReport {
  std::string algorithm;
  std::vector<EvalRow> rows;  // sorted by (trace, seed)
  double mean = 0;
  double p5 = 0, p25 = 0, median = 0, p75 = 0, p95 = 0;
  std::vector<std::pair<double, double>> cdf;  // (session qoe, cumulative fraction)
  double mean_chunk_bitrate_mbps = 0;
  double mean_chunk_rebuffer_s = 0;
  std::uint64_t manifest_fingerprint = 0;
  std::uint64_t config_fingerprint = 0;

  std::vector<double> qoe_values() const;
};

// One session per (test trace, seed). Algorithm failures are rethrown with the
// trace id attached.
EvalReport evaluate(const AbrSpec& abr, const Corpus& corpus,
                    const VideoManifest& manifest, const SimConfig& sim_cfg,
                    const QoEConfig& qoe_cfg, std::span<const std::uint64_t> seeds,
                    Split split = Split::kTest, int workers = 1);

std::string report_to_csv(const EvalReport& report);
std::string report_summary_json(const EvalReport& report);

// Empirical [2.5%, 97.5%] of the mean difference a-b under independent
// resampling.
struct BootstrapCi {
  double mean_diff = 0;
  double lo = 0;
  double hi = 0;
};
BootstrapCi bootstrap_mean_diff(std::span<const double> a, std::span<const double> b,
                                int resamples = 10000, std::uint64_t seed = 0);

struct ComparisonRow {
  std::string algorithm;
  double mean = 0, median = 0, p5 = 0, p95 = 0;
  double relative_to_best = 0;
};

struct PairwiseDiff {
  std::string a, b;
  BootstrapCi ci;
};

struct Comparison {
  std::vector<ComparisonRow> rows;
  std::vector<PairwiseDiff> pairs;
};

// Requires >= 2 reports evaluated against the same manifest.
Comparison compare(std::span<const EvalReport> reports, int resamples = 10000,
                   std::uint64_t seed = 0);

std::string comparison_to_text(const Comparison& c);

double percentile(std::vector<double> values, double p);  // linear interpolation

}  // namespace sgym
