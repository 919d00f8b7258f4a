#include <doctest.h>

#include "streamgym/eval.hpp"

using namespace sgym;

namespace {

Corpus test_corpus() {
  Corpus c;
  c.entries.push_back({TimedTrace("a", {{0, 1.3, 0.05}, {5, 2.6, 0.05}}), Split::kTest});
  c.entries.push_back({TimedTrace("b", {{0, 3.1, 0.08}}), Split::kTest});
  c.entries.push_back({TimedTrace("c", {{0, 0.9, 0.06}, {3, 1.8, 0.07}}), Split::kTest});
  c.entries.push_back({TimedTrace("t", {{0, 2.0, 0.05}}), Split::kTrain});
  return c;
}

}  // namespace

TEST_CASE("fixed(0) pins the mean bitrate to the bottom rung") {
  const auto corpus = test_corpus();
  const auto m = default_manifest({0.1, 1});
  const std::uint64_t seeds[] = {1, 2};
  const auto report = evaluate(parse_abr_spec("fixed:0"), corpus, m, SimConfig{},
                               QoEConfig::linear(), seeds);
  CHECK(report.rows.size() == 6);
  for (const auto& r : report.rows) {
    CHECK(r.mean_bitrate_mbps == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(r.switch_count == 0);
  }
  CHECK(report.mean_chunk_bitrate_mbps == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("evaluation reports are deterministic and CDFs are monotone") {
  const auto corpus = test_corpus();
  const auto m = default_manifest({0.1, 1});
  const std::uint64_t seeds[] = {7, 8, 9};
  const auto a = evaluate(parse_abr_spec("rate"), corpus, m, SimConfig{},
                          QoEConfig::hd_default(), seeds);
  const auto b = evaluate(parse_abr_spec("rate"), corpus, m, SimConfig{},
                          QoEConfig::hd_default(), seeds);
  CHECK(report_to_csv(a) == report_to_csv(b));
  // parallel evaluation is order-stable too
  const auto par = evaluate(parse_abr_spec("rate"), corpus, m, SimConfig{},
                            QoEConfig::hd_default(), seeds, Split::kTest, 4);
  CHECK(report_to_csv(par) == report_to_csv(a));

  double prev_v = -1e300, prev_f = 0;
  for (const auto& [v, f] : a.cdf) {
    CHECK(v >= prev_v);
    CHECK(f >= prev_f);
    prev_v = v;
    prev_f = f;
  }
  CHECK(a.cdf.back().second == doctest::Approx(1.0));
  const auto values = a.qoe_values();
  CHECK(a.mean >= *std::min_element(values.begin(), values.end()));
  CHECK(a.mean <= *std::max_element(values.begin(), values.end()));
  CHECK(a.p5 <= a.p25);
  CHECK(a.p25 <= a.median);
  CHECK(a.median <= a.p75);
  CHECK(a.p75 <= a.p95);
}

TEST_CASE("oracle evaluation dominates a fixed baseline with a clean CI") {
  const auto corpus = test_corpus();
  const auto m = default_manifest({0.1, 1});
  const std::uint64_t seeds[] = {1, 2, 3};
  SimConfig cfg;
  const auto qoe_cfg = QoEConfig::linear();
  const auto oracle = evaluate(parse_abr_spec("oracle"), corpus, m, cfg, qoe_cfg, seeds);
  const auto fixed0 = evaluate(parse_abr_spec("fixed:0"), corpus, m, cfg, qoe_cfg, seeds);
  CHECK(oracle.mean >= fixed0.mean);
  const EvalReport reports[] = {oracle, fixed0};
  const auto cmp = compare(reports, 10000, 3);
  REQUIRE(cmp.pairs.size() == 1);
  CHECK(cmp.pairs[0].ci.mean_diff > 0);
  CHECK(cmp.pairs[0].ci.lo > 0);  // CI excludes zero
  CHECK(cmp.rows[0].relative_to_best == doctest::Approx(1.0));
}

TEST_CASE("comparing a report with itself gives a null difference") {
  const auto corpus = test_corpus();
  const auto m = default_manifest({0.1, 1});
  const std::uint64_t seeds[] = {4, 5};
  const auto r = evaluate(parse_abr_spec("buffer"), corpus, m, SimConfig{},
                          QoEConfig::linear(), seeds);
  const EvalReport reports[] = {r, r};
  const auto cmp = compare(reports, 5000, 1);
  CHECK(cmp.pairs[0].ci.mean_diff == 0);
  CHECK(cmp.pairs[0].ci.lo <= 0);
  CHECK(cmp.pairs[0].ci.hi >= 0);
  CHECK(cmp.rows[0].relative_to_best == doctest::Approx(1.0));
  CHECK(cmp.rows[1].relative_to_best == doctest::Approx(1.0));
}

TEST_CASE("compare rejects mismatched manifests") {
  const auto corpus = test_corpus();
  const std::uint64_t seeds[] = {1};
  const auto r1 = evaluate(parse_abr_spec("rate"), corpus, default_manifest({0.1, 1}),
                           SimConfig{}, QoEConfig::linear(), seeds);
  const auto r2 = evaluate(parse_abr_spec("rate"), corpus, default_manifest({0.1, 2}),
                           SimConfig{}, QoEConfig::linear(), seeds);
  const EvalReport reports[] = {r1, r2};
  CHECK_THROWS_AS(compare(reports), std::invalid_argument);
  const EvalReport one[] = {r1};
  CHECK_THROWS_AS(compare(one), std::invalid_argument);
}

TEST_CASE("evaluate surfaces algorithm failures with the trace id") {
  Corpus corpus;
  corpus.entries.push_back({TimedTrace("bad-trace", {{0, 1.0, 0.05}}), Split::kTest});
  const auto m = default_manifest({0.1, 1});
  AbrSpec spec = parse_abr_spec("fixed:0");
  spec.fixed_quality = 99;  // out of range at decision time
  const std::uint64_t seeds[] = {1};
  CHECK_THROWS_WITH_AS(
      evaluate(spec, corpus, m, SimConfig{}, QoEConfig::linear(), seeds),
      doctest::Contains("bad-trace"), std::runtime_error);
  CHECK_THROWS_AS(evaluate(parse_abr_spec("rate"), Corpus{}, m, SimConfig{},
                           QoEConfig::linear(), seeds),
                  std::invalid_argument);
}

TEST_CASE("percentiles interpolate linearly") {
  CHECK(percentile({1, 2, 3, 4}, 50) == doctest::Approx(2.5));
  CHECK(percentile({5}, 95) == 5);
  CHECK(percentile({1, 3}, 25) == doctest::Approx(1.5));
  CHECK_THROWS_AS(percentile({}, 50), std::invalid_argument);
}

TEST_CASE("abr spec parsing covers the documented keys") {
  CHECK(parse_abr_spec("fixed:3").fixed_quality == 3);
  CHECK(parse_abr_spec("rate").kind == AbrSpec::Kind::kRate);
  CHECK(parse_abr_spec("buffer").kind == AbrSpec::Kind::kBuffer);
  CHECK(parse_abr_spec("oracle").kind == AbrSpec::Kind::kOracle);
  CHECK_THROWS_AS(parse_abr_spec("mystery"), std::invalid_argument);
  CHECK_THROWS_AS(parse_abr_spec("fixed:x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_abr_spec("policy:/no/such/file.json"), std::runtime_error);
}
