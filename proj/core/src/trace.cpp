#include "streamgym/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace sgym {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

}  // namespace

TimedTrace::TimedTrace(std::string name, std::vector<TraceSample> samples)
    : name_(std::move(name)), samples_(std::move(samples)) {
  if (samples_.empty()) {
    throw std::invalid_argument("trace '" + name_ + "': no samples");
  }
  const double t0 = samples_.front().t;
  double prev = -1;
  for (auto& s : samples_) {
    s.t -= t0;
    if (!(s.t >= 0) || !std::isfinite(s.t)) {
      throw std::invalid_argument("trace '" + name_ + "': negative timestamp");
    }
    if (s.t <= prev) {
      throw std::invalid_argument("trace '" + name_ +
                                  "': timestamps not strictly increasing at t=" +
                                  format_double(s.t + t0));
    }
    if (!(s.bw > 0) || !std::isfinite(s.bw)) {
      throw std::invalid_argument("trace '" + name_ + "': throughput must be > 0");
    }
    if (!(s.rtprop >= 0) || !std::isfinite(s.rtprop)) {
      throw std::invalid_argument("trace '" + name_ + "': rtprop must be >= 0");
    }
    prev = s.t;
  }
  if (samples_.size() == 1) {
    duration_ = samples_.front().t + 1.0;
  } else {
    const double last = samples_.back().t;
    const double gap = last - samples_[samples_.size() - 2].t;
    duration_ = last + gap;
  }
}

const TraceSample& TimedTrace::sample_at(double time) const {
  if (time < 0) {
    throw std::invalid_argument("sample_at: time must be >= 0");
  }
  double phase = std::fmod(time, duration_);
  if (phase < 0) phase = 0;
  // Largest sample t <= phase. First sample is at t = 0, so this always exists.
  auto it = std::upper_bound(samples_.begin(), samples_.end(), phase,
                             [](double v, const TraceSample& s) { return v < s.t; });
  return *(it - 1);
}

TimedTrace TimedTrace::renamed(std::string name) const {
  TimedTrace copy = *this;
  copy.name_ = std::move(name);
  return copy;
}

TimedTrace parse_trace(std::istream& in, double default_rtprop, std::string name) {
  std::vector<TraceSample> samples;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_fields(line);
    if (fields.empty() || fields.front().front() == '#') continue;
    if (fields.size() != 2 && fields.size() != 3) {
      throw std::invalid_argument(name + ":" + std::to_string(lineno) +
                                  ": expected 2 or 3 fields, got " +
                                  std::to_string(fields.size()));
    }
    TraceSample s;
    auto t = try_parse_double(fields[0]);
    auto bw = try_parse_double(fields[1]);
    if (!t || !bw) {
      throw std::invalid_argument(name + ":" + std::to_string(lineno) +
                                  ": malformed numeric field");
    }
    s.t = *t;
    s.bw = *bw;
    if (fields.size() == 3) {
      auto rt = try_parse_double(fields[2]);
      if (!rt) {
        throw std::invalid_argument(name + ":" + std::to_string(lineno) +
                                    ": malformed rtprop field");
      }
      s.rtprop = *rt;
    } else {
      s.rtprop = default_rtprop;
    }
    samples.push_back(s);
  }
  if (samples.empty()) {
    throw std::invalid_argument(name + ": empty trace");
  }
  return TimedTrace(std::move(name), std::move(samples));
}

TimedTrace parse_trace(const std::string& text, double default_rtprop,
                       std::string name) {
  std::istringstream in(text);
  return parse_trace(in, default_rtprop, std::move(name));
}

TimedTrace load_trace(const std::filesystem::path& file, double default_rtprop) {
  std::ifstream in(file);
  if (!in) {
    throw std::runtime_error("cannot open trace file: " + file.string());
  }
  return parse_trace(in, default_rtprop, file.stem().string());
}

std::string serialize_trace(const TimedTrace& trace) {
  std::string out;
  for (const auto& s : trace.samples()) {
    out += format_double(s.t);
    out += ' ';
    out += format_double(s.bw);
    out += ' ';
    out += format_double(s.rtprop);
    out += '\n';
  }
  return out;
}

void save_trace(const TimedTrace& trace, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write trace file: " + file.string());
  }
  out << serialize_trace(trace);
}

TimedTrace augment_rtprop(const TimedTrace& trace, double base,
                          double noise_fraction, std::uint64_t seed) {
  if (!(base > 0)) {
    throw std::invalid_argument("augment_rtprop: base must be > 0");
  }
  if (!(noise_fraction >= 0 && noise_fraction < 1)) {
    throw std::invalid_argument("augment_rtprop: noise_fraction must be in [0, 1)");
  }
  Rng rng(seed);
  std::vector<TraceSample> samples = trace.samples();
  for (auto& s : samples) {
    s.rtprop = uniform(rng, base * (1 - noise_fraction), base * (1 + noise_fraction));
  }
  return TimedTrace(trace.name(), std::move(samples));
}

std::vector<const TimedTrace*> Corpus::traces(Split which) const {
  std::vector<const TimedTrace*> out;
  for (const auto& e : entries) {
    if (e.split == which) out.push_back(&e.trace);
  }
  return out;
}

std::size_t Corpus::count(Split which) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(),
                    [&](const Entry& e) { return e.split == which; }));
}

Corpus split_corpus(Corpus corpus, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0 && test_fraction < 1)) {
    throw std::invalid_argument("split_corpus: test_fraction must be in (0, 1)");
  }
  const std::size_t n = corpus.entries.size();
  if (n < 2) {
    throw std::invalid_argument("split_corpus: need at least 2 traces");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "corpus-split"));
  // Fisher-Yates with our canonical uniform, for seed-stable splits.
  for (std::size_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i + 1));
    std::swap(order[i], order[std::min(j, i)]);
  }
  std::size_t test_count = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(n)));
  test_count = std::clamp<std::size_t>(test_count, 1, n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    corpus.entries[order[i]].split = i < test_count ? Split::kTest : Split::kTrain;
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "train");
  fs::create_directories(dir / "test");
  for (const auto& e : corpus.entries) {
    const char* sub = e.split == Split::kTrain ? "train" : "test";
    save_trace(e.trace, dir / sub / (e.trace.name() + ".trace"));
  }
}

Corpus load_corpus(const std::filesystem::path& dir, double default_rtprop) {
  namespace fs = std::filesystem;
  Corpus corpus;
  for (auto [sub, split] : {std::pair{"train", Split::kTrain}, {"test", Split::kTest}}) {
    const fs::path d = dir / sub;
    if (!fs::exists(d)) continue;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(d)) {
      if (entry.is_regular_file() && entry.path().extension() == ".trace") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      corpus.entries.push_back({load_trace(f, default_rtprop), split});
    }
  }
  if (corpus.entries.empty()) {
    throw std::runtime_error("no .trace files under " + dir.string());
  }
  return corpus;
}

}  // namespace sgym
