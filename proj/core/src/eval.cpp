#include "streamgym/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace sgym {

std::vector<double> EvalReport::qoe_values() const {
  std::vector<double> v;
  v.reserve(rows.size());
  for (const auto& r : rows) v.push_back(r.session_qoe);
  return v;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) {
    throw std::invalid_argument("percentile: empty sample");
  }
  std::sort(values.begin(), values.end());
  const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = static_cast<std::size_t>(std::ceil(rank));
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

namespace {

std::uint64_t fingerprint_configs(const VideoManifest& manifest,
                                  const SimConfig& sim, const QoEConfig& qoe,
                                  const std::string& algorithm) {
  std::string blob = manifest_to_json(manifest);
  blob += '|';
  blob += algorithm;
  for (double v :
       {static_cast<double>(sim.variant == SimVariant::kSimT), sim.fixed_rtprop_s,
        sim.noise_fraction, sim.packet_size_bytes, sim.buffer_capacity_s,
        sim.loss_rate, static_cast<double>(qoe.utility == UtilityKind::kHd),
        qoe.mu}) {
    blob += '|';
    blob += format_double(v);
  }
  return fnv1a(blob);
}

}  // namespace

EvalReport evaluate(const AbrSpec& abr, const Corpus& corpus,
                    const VideoManifest& manifest, const SimConfig& sim_cfg,
                    const QoEConfig& qoe_cfg, std::span<const std::uint64_t> seeds,
                    Split split, int workers) {
  manifest.validate();
  const auto traces = corpus.traces(split);
  if (traces.empty()) {
    throw std::invalid_argument("evaluate: empty corpus split");
  }
  if (seeds.empty()) {
    throw std::invalid_argument("evaluate: need at least one seed");
  }

  struct Task {
    const TimedTrace* trace;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const auto* t : traces) {
    for (auto s : seeds) tasks.push_back({t, s});
  }

  EvalReport report;
  report.algorithm = abr.text;
  report.rows.resize(tasks.size());
  std::vector<double> chunk_bitrate_sums(tasks.size());
  std::vector<double> chunk_rebuffer_sums(tasks.size());
  std::vector<std::size_t> chunk_counts(tasks.size());
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto run_range = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < tasks.size(); i += stride) {
      const auto& task = tasks[i];
      try {
        const auto decider =
            make_decider(abr, manifest, sim_cfg, qoe_cfg, task.trace, task.seed);
        const auto session_seed =
            derive_seed(task.seed, "eval-session", fnv1a(task.trace->name()));
        const auto result =
            run_session(decider, *task.trace, manifest, sim_cfg, session_seed);
        report.rows[i] = {task.trace->name(), task.seed,
                          session_qoe(result.qoe_log(), qoe_cfg),
                          result.mean_bitrate_mbps(), result.total_rebuffer_s(),
                          result.switch_count()};
        double bsum = 0, rsum = 0;
        for (const auto& c : result.chunks) {
          bsum += c.bitrate_mbps;
          rsum += c.rebuffer_s;
        }
        chunk_bitrate_sums[i] = bsum;
        chunk_rebuffer_sums[i] = rsum;
        chunk_counts[i] = result.chunks.size();
      } catch (const std::exception& e) {
        std::lock_guard lock(failure_mu);
        if (!failure) {
          failure = std::make_exception_ptr(std::runtime_error(
              "evaluate: algorithm '" + abr.text + "' failed on trace '" +
              task.trace->name() + "': " + e.what()));
        }
        return;
      }
    }
  };

  const int n_workers = std::clamp<int>(workers, 1, static_cast<int>(tasks.size()));
  if (n_workers == 1) {
    run_range(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) {
      pool.emplace_back(run_range, static_cast<std::size_t>(w),
                        static_cast<std::size_t>(n_workers));
    }
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::sort(report.rows.begin(), report.rows.end(),
            [](const EvalRow& a, const EvalRow& b) {
              return std::tie(a.trace, a.seed) < std::tie(b.trace, b.seed);
            });

  auto values = report.qoe_values();
  report.mean = 0;
  for (double v : values) report.mean += v;
  report.mean /= static_cast<double>(values.size());
  report.p5 = percentile(values, 5);
  report.p25 = percentile(values, 25);
  report.median = percentile(values, 50);
  report.p75 = percentile(values, 75);
  report.p95 = percentile(values, 95);

  std::sort(values.begin(), values.end());
  report.cdf.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    report.cdf.emplace_back(values[i], static_cast<double>(i + 1) /
                                           static_cast<double>(values.size()));
  }

  double bsum = 0, rsum = 0;
  std::size_t chunks = 0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    bsum += chunk_bitrate_sums[i];
    rsum += chunk_rebuffer_sums[i];
    chunks += chunk_counts[i];
  }
  report.mean_chunk_bitrate_mbps = bsum / static_cast<double>(chunks);
  report.mean_chunk_rebuffer_s = rsum / static_cast<double>(chunks);
  report.manifest_fingerprint = fnv1a(manifest_to_json(manifest));
  report.config_fingerprint =
      fingerprint_configs(manifest, sim_cfg, qoe_cfg, abr.text);
  return report;
}

std::string report_to_csv(const EvalReport& report) {
  std::string out =
      "trace,seed,session_qoe,mean_bitrate_mbps,total_rebuffer_s,switch_count\n";
  for (const auto& r : report.rows) {
    out += r.trace;
    out += ',';
    out += std::to_string(r.seed);
    for (double v : {r.session_qoe, r.mean_bitrate_mbps, r.total_rebuffer_s}) {
      out += ',';
      out += format_double(v);
    }
    out += ',';
    out += std::to_string(r.switch_count);
    out += '\n';
  }
  return out;
}

std::string report_summary_json(const EvalReport& report) {
  nlohmann::json j;
  j["algorithm"] = report.algorithm;
  j["sessions"] = report.rows.size();
  j["qoe"] = {{"mean", report.mean}, {"p5", report.p5},     {"p25", report.p25},
              {"median", report.median}, {"p75", report.p75}, {"p95", report.p95}};
  j["per_chunk"] = {{"mean_bitrate_mbps", report.mean_chunk_bitrate_mbps},
                    {"mean_rebuffer_s", report.mean_chunk_rebuffer_s}};
  j["manifest_fingerprint"] = report.manifest_fingerprint;
  j["config_fingerprint"] = report.config_fingerprint;
  auto& cdf = j["cdf"] = nlohmann::json::array();
  for (const auto& [v, f] : report.cdf) {
    cdf.push_back({{"qoe", v}, {"fraction", f}});
  }
  return j.dump(2);
}

BootstrapCi bootstrap_mean_diff(std::span<const double> a, std::span<const double> b,
                                int resamples, std::uint64_t seed) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("bootstrap_mean_diff: empty sample");
  }
  auto mean = [](std::span<const double> v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  Rng rng(derive_seed(seed, "bootstrap"));
  std::vector<double> diffs(resamples);
  for (int r = 0; r < resamples; ++r) {
    double sa = 0, sb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      sa += a[std::min<std::size_t>(uniform01(rng) * a.size(), a.size() - 1)];
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      sb += b[std::min<std::size_t>(uniform01(rng) * b.size(), b.size() - 1)];
    }
    diffs[r] = sa / static_cast<double>(a.size()) - sb / static_cast<double>(b.size());
  }
  BootstrapCi ci;
  ci.mean_diff = mean(a) - mean(b);
  ci.lo = percentile(diffs, 2.5);
  ci.hi = percentile(diffs, 97.5);
  return ci;
}

Comparison compare(std::span<const EvalReport> reports, int resamples,
                   std::uint64_t seed) {
  if (reports.size() < 2) {
    throw std::invalid_argument("compare: need at least 2 reports");
  }
  for (const auto& r : reports) {
    if (r.manifest_fingerprint != reports[0].manifest_fingerprint) {
      throw std::invalid_argument("compare: manifest fingerprints differ");
    }
  }
  Comparison c;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& r : reports) best = std::max(best, r.mean);
  for (const auto& r : reports) {
    c.rows.push_back({r.algorithm, r.mean, r.median, r.p5, r.p95, r.mean / best});
  }
  for (std::size_t i = 0; i < reports.size(); ++i) {
    for (std::size_t j = i + 1; j < reports.size(); ++j) {
      const auto a = reports[i].qoe_values();
      const auto b = reports[j].qoe_values();
      c.pairs.push_back({reports[i].algorithm, reports[j].algorithm,
                         bootstrap_mean_diff(a, b, resamples,
                                             derive_seed(seed, "pair", i * 97 + j))});
    }
  }
  return c;
}

std::string comparison_to_text(const Comparison& c) {
  std::ostringstream out;
  out << "algorithm,mean,median,p5,p95,relative_to_best\n";
  for (const auto& r : c.rows) {
    out << r.algorithm << ',' << format_double(r.mean) << ','
        << format_double(r.median) << ',' << format_double(r.p5) << ','
        << format_double(r.p95) << ',' << format_double(r.relative_to_best) << '\n';
  }
  out << "\npair,mean_diff,ci95_lo,ci95_hi\n";
  for (const auto& p : c.pairs) {
    out << p.a << " vs " << p.b << ',' << format_double(p.ci.mean_diff) << ','
        << format_double(p.ci.lo) << ',' << format_double(p.ci.hi) << '\n';
  }
  return out.str();
}

}  // namespace sgym
