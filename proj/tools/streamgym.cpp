#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "streamgym/channel.hpp"
#include "streamgym/eval.hpp"
#include "streamgym/learn.hpp"
#include "streamgym/oracle.hpp"
#include "streamgym/server.hpp"

namespace fs = std::filesystem;
using namespace sgym;

namespace {

struct CommonOpts {
  std::uint64_t seed = 0;
  int workers = 1;
  std::string manifest_file;
  std::string sim = "t";
  std::string qoe = "linear";
  double sim_loss = 0.0;
};

VideoManifest resolve_manifest(const CommonOpts& o) {
  if (!o.manifest_file.empty()) return load_manifest(o.manifest_file);
  return default_manifest({0.15, 0});
}

SimConfig resolve_sim(const CommonOpts& o) {
  SimConfig cfg;
  cfg.variant = o.sim == "o" ? SimVariant::kSimO : SimVariant::kSimT;
  cfg.loss_rate = o.sim_loss;
  return cfg;
}

QoEConfig resolve_qoe(const CommonOpts& o) {
  return o.qoe == "hd" ? QoEConfig::hd_default() : QoEConfig::linear();
}

CcaKind parse_cca(const std::string& s) {
  if (s == "loss" || s == "cubic") return CcaKind::kLossBased;
  if (s == "model" || s == "bbr") return CcaKind::kModelBased;
  throw CLI::ValidationError("--cca", "expected loss|model (aliases cubic|bbr)");
}

void write_file(const fs::path& path, const std::string& content) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

void add_sim_qoe_flags(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--sim", o.sim, "Simulator variant: o or t")
      ->check(CLI::IsMember({"o", "t"}));
  cmd->add_option("--qoe", o.qoe, "QoE metric: linear or hd")
      ->check(CLI::IsMember({"linear", "hd"}));
  cmd->add_option("--loss", o.sim_loss, "Per-packet loss rate inside SIM-T")
      ->check(CLI::Range(0.0, 0.999));
  cmd->add_option("--manifest", o.manifest_file, "Manifest JSON file");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streamgym: trace-driven adaptive-bitrate streaming laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("streamgym ") + std::string(kVersion));
  app.set_config("--config", "", "Read defaults from a config file");

  CommonOpts common;
  app.add_option("--seed", common.seed, "Master seed for all randomness")
      ->envname("STREAMGYM_SEED");
  app.add_option("--workers", common.workers, "Worker threads where supported")
      ->check(CLI::PositiveNumber);

  // augment
  auto* augment = app.add_subcommand(
      "augment", "Add an rtprop column to a legacy throughput trace");
  std::string aug_in, aug_out;
  double aug_base = 0.08, aug_noise = 0.10;
  augment->add_option("--in", aug_in, "Input trace")->required();
  augment->add_option("--out", aug_out, "Output trace")->required();
  augment->add_option("--base-rtprop", aug_base, "Base rtprop in seconds");
  augment->add_option("--noise", aug_noise, "Uniform noise fraction")
      ->check(CLI::Range(0.0, 0.999));

  // gen-trace
  auto* gen_trace = app.add_subcommand(
      "gen-trace", "Generate a synthetic trace from a fluid congestion model");
  std::string gt_cca = "model", gt_out;
  ChannelConfig gt_cfg;
  double gt_duration = 300, gt_granularity = 1;
  gen_trace->add_option("--cca", gt_cca, "loss|model (aliases cubic|bbr)");
  gen_trace->add_option("--btlbw", gt_cfg.btlbw_mbps, "Bottleneck bandwidth, Mbps");
  gen_trace->add_option("--rtprop", gt_cfg.rtprop_s, "Propagation delay, seconds");
  gen_trace->add_option("--buffer-bdp", gt_cfg.buffer_bdp, "Queue size in BDPs");
  gen_trace->add_option("--loss", gt_cfg.loss_rate, "Per-packet loss rate")
      ->check(CLI::Range(0.0, 0.999));
  gen_trace->add_option("--duration", gt_duration, "Trace length, seconds");
  gen_trace->add_option("--granularity", gt_granularity, "Sample spacing, seconds");
  gen_trace->add_option("--out", gt_out, "Output trace file")->required();

  // gen-corpus
  auto* gen_corpus = app.add_subcommand(
      "gen-corpus", "Generate a CCA-homogeneous corpus with a train/test split");
  std::vector<double> gc_levels{3, 3.5, 4, 4.5};
  std::string gc_cca = "model", gc_out;
  double gc_rtprop = 0.08, gc_duration = 300, gc_loss = 0, gc_test_fraction = 0.2;
  int gc_reps = 25;
  gen_corpus->add_option("--levels", gc_levels, "Bottleneck levels, Mbps")
      ->delimiter(',');
  gen_corpus->add_option("--cca", gc_cca, "loss|model (aliases cubic|bbr)");
  gen_corpus->add_option("--rtprop", gc_rtprop, "Propagation delay, seconds");
  gen_corpus->add_option("--reps", gc_reps, "Traces per level");
  gen_corpus->add_option("--duration", gc_duration, "Trace length, seconds");
  gen_corpus->add_option("--loss", gc_loss, "Channel per-packet loss rate")
      ->check(CLI::Range(0.0, 0.999));
  gen_corpus->add_option("--test-fraction", gc_test_fraction, "Test split share")
      ->check(CLI::Range(0.001, 0.999));
  gen_corpus->add_option("--out", gc_out, "Corpus directory")->required();

  // simulate
  auto* simulate = app.add_subcommand(
      "simulate", "Play one session over a trace and emit the chunk log CSV");
  std::string sm_trace, sm_abr = "rate", sm_out;
  double sm_default_rtprop = 0.08;
  simulate->add_option("--trace", sm_trace, "Trace file")->required();
  simulate->add_option("--abr", sm_abr,
                       "fixed:<i> | rate | buffer | policy:<file> | oracle");
  simulate->add_option("--default-rtprop", sm_default_rtprop,
                       "rtprop for legacy 2-column traces");
  simulate->add_option("--out", sm_out, "Output CSV (default: stdout)");
  add_sim_qoe_flags(simulate, common);

  // oracle
  auto* oracle_cmd = app.add_subcommand(
      "oracle", "Offline-optimal quality sequence for a trace");
  std::string or_trace, or_mode = "dp";
  int or_horizon = 0;
  double or_quant = 0.1, or_default_rtprop = 0.08;
  oracle_cmd->add_option("--trace", or_trace, "Trace file")->required();
  oracle_cmd->add_option("--mode", or_mode, "exhaustive or dp")
      ->check(CLI::IsMember({"exhaustive", "dp"}));
  oracle_cmd->add_option("--horizon", or_horizon,
                         "Chunks to plan (default: whole video)");
  oracle_cmd->add_option("--buffer-quant", or_quant, "DP buffer cell, seconds");
  oracle_cmd->add_option("--default-rtprop", or_default_rtprop,
                         "rtprop for legacy 2-column traces");
  add_sim_qoe_flags(oracle_cmd, common);

  // train
  auto* train_cmd = app.add_subcommand(
      "train", "Train a policy on a corpus's train split");
  std::string tr_corpus, tr_out = "out";
  TrainConfig tr_cfg;
  EntropySchedule tr_sched;
  bool tr_sched_fit = false;
  double tr_default_rtprop = 0.08;
  train_cmd->add_option("--corpus", tr_corpus, "Corpus directory")->required();
  train_cmd->add_option("--out", tr_out, "Output directory");
  train_cmd->add_option("--iterations", tr_cfg.iterations, "Training iterations");
  train_cmd->add_option("--hidden", tr_cfg.hidden_dim, "Hidden layer width");
  train_cmd->add_option("--discount", tr_cfg.discount, "Reward discount");
  train_cmd->add_option("--lr-actor", tr_cfg.lr_actor, "Actor learning rate");
  train_cmd->add_option("--lr-critic", tr_cfg.lr_critic, "Critic learning rate");
  train_cmd->add_option("--checkpoint-every", tr_cfg.checkpoint_every,
                        "Checkpoint period in iterations");
  train_cmd->add_option("--entropy-start", tr_sched.start, "Entropy weight start");
  train_cmd->add_option("--entropy-end", tr_sched.end, "Entropy weight end");
  train_cmd->add_option("--entropy-step", tr_sched.step, "Entropy weight step");
  train_cmd->add_option("--entropy-iterations", tr_sched.total_iterations,
                        "Schedule length (iterations)");
  train_cmd->add_flag("--entropy-fit", tr_sched_fit,
                      "Stretch the schedule over --iterations");
  train_cmd->add_option("--default-rtprop", tr_default_rtprop,
                        "rtprop for legacy 2-column traces");
  add_sim_qoe_flags(train_cmd, common);

  // eval
  auto* eval_cmd = app.add_subcommand(
      "eval", "Evaluate an algorithm on a corpus's test split");
  std::string ev_abr = "rate", ev_corpus, ev_out = "out";
  int ev_seed_count = 1;
  double ev_default_rtprop = 0.08;
  bool ev_train_split = false;
  eval_cmd->add_option("--abr", ev_abr,
                       "fixed:<i> | rate | buffer | policy:<file> | oracle");
  eval_cmd->add_option("--corpus", ev_corpus, "Corpus directory")->required();
  eval_cmd->add_option("--out", ev_out, "Output directory");
  eval_cmd->add_option("--sessions-per-trace", ev_seed_count,
                       "Seeds (sessions) per trace")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_flag("--train-split", ev_train_split,
                     "Evaluate on the train split instead of test");
  eval_cmd->add_option("--default-rtprop", ev_default_rtprop,
                       "rtprop for legacy 2-column traces");
  add_sim_qoe_flags(eval_cmd, common);

  // serve
  auto* serve_cmd = app.add_subcommand(
      "serve", "Run the ABR decision service over HTTP");
  std::string sv_listen = "127.0.0.1:8333", sv_abr = "rate";
  double sv_ttl = 600;
  serve_cmd->add_option("--listen", sv_listen, "host:port");
  serve_cmd->add_option("--abr", sv_abr,
                        "fixed:<i> | rate | buffer | policy:<file>");
  serve_cmd->add_option("--session-ttl", sv_ttl, "Idle session eviction, seconds");
  serve_cmd->add_option("--manifest", common.manifest_file, "Manifest JSON file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message
    std::cerr << app.help() << '\n';
    return 1;
  }

  try {
    if (*augment) {
      const auto tr = load_trace(aug_in, aug_base);
      save_trace(augment_rtprop(tr, aug_base, aug_noise, common.seed), aug_out);
    } else if (*gen_trace) {
      const auto tr = generate_trace(gt_cfg, parse_cca(gt_cca), gt_duration,
                                     gt_granularity, common.seed,
                                     fs::path(gt_out).stem().string());
      save_trace(tr, gt_out);
    } else if (*gen_corpus) {
      auto corpus = generate_dash_corpus(gc_levels, gc_rtprop, parse_cca(gc_cca),
                                         gc_reps, gc_duration, common.seed,
                                         gc_loss);
      corpus = split_corpus(std::move(corpus), gc_test_fraction, common.seed);
      save_corpus(corpus, gc_out);
      std::cout << "wrote " << corpus.entries.size() << " traces ("
                << corpus.count(Split::kTrain) << " train / "
                << corpus.count(Split::kTest) << " test) to " << gc_out << '\n';
    } else if (*simulate) {
      const auto manifest = resolve_manifest(common);
      const auto sim_cfg = resolve_sim(common);
      const auto qoe_cfg = resolve_qoe(common);
      const auto trace = load_trace(sm_trace, sm_default_rtprop);
      const auto spec = parse_abr_spec(sm_abr);
      const auto decider =
          make_decider(spec, manifest, sim_cfg, qoe_cfg, &trace, common.seed);
      const auto result = run_session(decider, trace, manifest, sim_cfg, common.seed);
      const auto csv = session_to_csv(result);
      if (sm_out.empty()) {
        std::cout << csv;
      } else {
        write_file(sm_out, csv);
      }
      std::cerr << "session_qoe=" << format_double(session_qoe(result.qoe_log(), qoe_cfg))
                << " startup_s=" << format_double(result.startup_s)
                << " rebuffer_s=" << format_double(result.total_rebuffer_s()) << '\n';
    } else if (*oracle_cmd) {
      const auto manifest = resolve_manifest(common);
      const auto trace = load_trace(or_trace, or_default_rtprop);
      const int horizon = or_horizon > 0 ? or_horizon : manifest.chunk_count();
      const auto mode =
          or_mode == "exhaustive" ? OracleMode::kExhaustive : OracleMode::kDp;
      const auto r = offline_optimal(trace, manifest, resolve_sim(common),
                                     resolve_qoe(common), horizon, mode, or_quant,
                                     common.workers);
      nlohmann::json j{{"session_qoe", r.session_qoe}, {"qualities", r.qualities}};
      std::cout << j.dump(2) << '\n';
    } else if (*train_cmd) {
      const auto manifest = resolve_manifest(common);
      tr_cfg.sim = resolve_sim(common);
      tr_cfg.qoe = resolve_qoe(common);
      tr_cfg.seed = common.seed;
      tr_cfg.workers = common.workers;
      tr_cfg.out_dir = tr_out;
      if (tr_sched_fit) tr_sched.total_iterations = tr_cfg.iterations;
      const auto corpus = load_corpus(tr_corpus, tr_default_rtprop);
      const auto result = train(corpus, manifest, tr_cfg, tr_sched);
      save_policy(result.model, fs::path(tr_out) / "model.json");
      std::cout << "wrote " << (fs::path(tr_out) / "model.json").string() << '\n';
    } else if (*eval_cmd) {
      const auto manifest = resolve_manifest(common);
      const auto sim_cfg = resolve_sim(common);
      const auto qoe_cfg = resolve_qoe(common);
      const auto corpus = load_corpus(ev_corpus, ev_default_rtprop);
      std::vector<std::uint64_t> seeds(ev_seed_count);
      for (int i = 0; i < ev_seed_count; ++i) {
        seeds[i] = derive_seed(common.seed, "eval-seed", i);
      }
      const auto report = evaluate(parse_abr_spec(ev_abr), corpus, manifest,
                                   sim_cfg, qoe_cfg, seeds,
                                   ev_train_split ? Split::kTrain : Split::kTest,
                                   common.workers);
      write_file(fs::path(ev_out) / "report.csv", report_to_csv(report));
      write_file(fs::path(ev_out) / "summary.json", report_summary_json(report));
      std::cout << "sessions=" << report.rows.size()
                << " mean_qoe=" << format_double(report.mean)
                << " median=" << format_double(report.median) << '\n';
    } else if (*serve_cmd) {
      const auto manifest = resolve_manifest(common);
      const auto pos = sv_listen.rfind(':');
      if (pos == std::string::npos) {
        throw std::runtime_error("--listen must be host:port");
      }
      const std::string host = sv_listen.substr(0, pos);
      const int port = std::stoi(sv_listen.substr(pos + 1));
      HttpDecisionServer server(
          DecisionService(parse_abr_spec(sv_abr), manifest, common.seed, sv_ttl));
      const int bound = server.start(host, port);
      std::cout << "listening on " << host << ':' << bound << std::endl;
      // foreground service: block until killed
      while (true) std::this_thread::sleep_for(std::chrono::seconds(3600));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
