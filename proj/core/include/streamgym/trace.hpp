#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "streamgym/util.hpp"

namespace sgym {

// One timed measurement: relative time, throughput, round-trip propagation delay.
struct TraceSample {
  double t = 0;       // seconds since trace start
  double bw = 0;      // Mbit/s
  double rtprop = 0;  // seconds
};

// Immutable after construction; safe to share across threads.
class TimedTrace {
 public:
  TimedTrace() = default;
  // Validates invariants (non-empty, t strictly increasing, bw > 0, rtprop >= 0)
  // and normalizes timestamps so the first sample sits at t = 0.
  TimedTrace(std::string name, std::vector<TraceSample> samples);

  const std::string& name() const { return name_; }
  const std::vector<TraceSample>& samples() const { return samples_; }

  // Last t plus the final inter-sample gap; 1 s for single-sample traces.
  double duration() const { return duration_; }

  // Piecewise-constant hold. Traces repeat cyclically, so this is total for
  // any time >= 0.
  const TraceSample& sample_at(double time) const;

  TimedTrace renamed(std::string name) const;

 private:
  std::string name_;
  std::vector<TraceSample> samples_;
  double duration_ = 0;
};

// Accepts the legacy 2-column (t, bw) and the timed 3-column (t, bw, rtprop)
// formats, one sample per line, '#' comments. 2-column lines get default_rtprop.
TimedTrace parse_trace(std::istream& in, double default_rtprop,
                       std::string name = "trace");
TimedTrace parse_trace(const std::string& text, double default_rtprop,
                       std::string name = "trace");
TimedTrace load_trace(const std::filesystem::path& file, double default_rtprop);

// Always emits the 3-column format; parse(serialize(x)) == x.
std::string serialize_trace(const TimedTrace& trace);
void save_trace(const TimedTrace& trace, const std::filesystem::path& file);

// Replaces every sample's rtprop with an independent uniform draw from
// [base*(1-noise_fraction), base*(1+noise_fraction)]. t and bw are untouched.
TimedTrace augment_rtprop(const TimedTrace& trace, double base,
                          double noise_fraction, std::uint64_t seed);

enum class Split { kTrain, kTest };

struct Corpus {
  struct Entry {
    TimedTrace trace;
    Split split = Split::kTrain;
  };
  std::vector<Entry> entries;

  std::vector<const TimedTrace*> traces(Split which) const;
  std::size_t count(Split which) const;
};

// Deterministic shuffled split by whole trace; |TEST| = round(f*N) clamped to
// [1, N-1].
Corpus split_corpus(Corpus corpus, double test_fraction, std::uint64_t seed);

// Directory layout: dir/{train,test}/<name>.trace
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir, double default_rtprop);

}  // namespace sgym
