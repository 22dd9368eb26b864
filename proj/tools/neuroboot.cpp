// neuroboot: synth / preprocess / metrics / augment / decode / stats / run.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "neuroboot/bootstrap.hpp"
#include "neuroboot/decode.hpp"
#include "neuroboot/epoch_io.hpp"
#include "neuroboot/experiment.hpp"
#include "neuroboot/parallel.hpp"
#include "neuroboot/report.hpp"
#include "neuroboot/stats.hpp"
#include "neuroboot/synthgen.hpp"

namespace fs = std::filesystem;
using namespace neuroboot;

namespace {

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw InvalidArgument("'" + s + "' is not an unsigned integer");
  }
  return v;
}

// "1..5", "3" or "1,4,9".
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const auto lo = parse_u64(text.substr(0, dots));
    const auto hi = parse_u64(text.substr(dots + 2));
    if (hi < lo) throw InvalidArgument("seed range '" + text + "' is empty");
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
    return out;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    out.push_back(parse_u64(text.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& ex) {
    throw InvalidArgument(path.string() + " is not valid JSON: " + ex.what());
  }
}

std::vector<EpochSet> load_dir(const fs::path& dir) {
  auto cohort = load_epoch_directory(dir);
  if (cohort.empty()) throw InvalidArgument("no .epb files in " + dir.string());
  return cohort;
}

void save_dir(std::span<const EpochSet> cohort, const fs::path& dir, std::size_t threads) {
  fs::create_directories(dir);
  parallel_for(cohort.size(), threads, [&](std::size_t s) {
    save_epochs(cohort[s], dir / (cohort[s].subject_id() + ".epb"));
  });
}

// Weights for every subject of `targets`, estimated on `pool` without the
// subject of the same id.
std::vector<TopicWeights> loso_for(std::span<const EpochSet> targets,
                                   std::span<const EpochSet> pool, const TimeWindow& signal) {
  std::vector<TopicDelta> deltas;
  for (const auto& s : pool) deltas.push_back(topic_abs_delta(s, signal));
  std::vector<TopicWeights> out;
  for (const auto& t : targets) {
    std::vector<TopicDelta> others;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (pool[i].subject_id() != t.subject_id()) others.push_back(deltas[i]);
    }
    out.push_back(weights_from_deltas(others));
  }
  return out;
}

struct Stage {
  std::string name;
  std::function<void()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reliability-weighted bootstrap augmentation for ERP decoding"};
  app.require_subcommand(1);
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  std::vector<Stage> stages;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort as EPB1 files");
  fs::path synth_config;
  fs::path synth_out;
  synth->add_option("--config", synth_config, "SynthConfig JSON (or an experiment config)");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->callback([&] {
    stages.push_back({"synth", [&] {
      SynthConfig cfg;
      if (!synth_config.empty()) {
        const auto j = read_json(synth_config);
        cfg = j.contains("synth") ? j.at("synth").get<SynthConfig>() : j.get<SynthConfig>();
      }
      ExperimentConfig tmp;
      tmp.synth = cfg;
      apply_seed_override(tmp);
      cfg = tmp.synth;
      cfg.validate();
      const auto cohort = generate_cohort(cfg);
      save_dir(cohort, synth_out, threads);
      nlohmann::json files = nlohmann::json::array();
      for (const auto& s : cohort) files.push_back(s.subject_id() + ".epb");
      std::ofstream m = open_out(synth_out / "manifest.json");
      m << nlohmann::json{{"config", cfg}, {"files", files}}.dump(2) << "\n";
      std::printf("wrote %zu subjects to %s\n", cohort.size(), synth_out.c_str());
    }});
  });

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "Baseline z-score, low-pass and downsample");
  fs::path pre_in;
  fs::path pre_out;
  std::string pre_baseline = "-0.2:0";
  double pre_lowpass = 20.0;
  int pre_order = 4;
  std::size_t pre_down = 1;
  pre->add_option("--in", pre_in)->required();
  pre->add_option("--out", pre_out)->required();
  pre->add_option("--baseline", pre_baseline, "Baseline window start:end")->capture_default_str();
  pre->add_option("--lowpass", pre_lowpass, "Low-pass cutoff in Hz (0 = off)")->capture_default_str();
  pre->add_option("--order", pre_order, "Butterworth order")->capture_default_str();
  pre->add_option("--downsample", pre_down, "Integer decimation factor")->capture_default_str();
  pre->callback([&] {
    stages.push_back({"preprocess", [&] {
      PreprocessOptions opt;
      opt.baseline = TimeWindow::parse(pre_baseline);
      opt.lowpass_hz = pre_lowpass;
      opt.order = pre_order;
      opt.downsample = pre_down;
      auto cohort = load_dir(pre_in);
      parallel_for(cohort.size(), threads, [&](std::size_t s) {
        try {
          cohort[s] = preprocess(cohort[s], opt);
        } catch (const std::exception& ex) {
          throw Error(cohort[s].subject_id() + ": " + ex.what());
        }
      });
      save_dir(cohort, pre_out, threads);
    }});
  });

  // metrics
  auto* met = app.add_subcommand("metrics", "SNR and dERP per subject and topic");
  fs::path met_in;
  fs::path met_out;
  std::string met_signal = "0.3:0.6";
  std::string met_baseline = "-0.2:0";
  met->add_option("--in", met_in)->required();
  met->add_option("--out", met_out)->required();
  met->add_option("--signal", met_signal)->capture_default_str();
  met->add_option("--baseline", met_baseline)->capture_default_str();
  met->callback([&] {
    stages.push_back({"metrics", [&] {
      const auto cohort = load_dir(met_in);
      const auto rows =
          quality_table(cohort, TimeWindow::parse(met_signal), TimeWindow::parse(met_baseline));
      auto out = open_out(met_out);
      write_quality_csv(rows, out);
    }});
  });

  // augment
  auto* aug = app.add_subcommand("augment", "Write bootstrap sub-averaged trials");
  fs::path aug_in;
  fs::path aug_out;
  fs::path aug_weights_from;
  std::string aug_scheme = "uniform";
  std::string aug_signal = "0.3:0.6";
  std::size_t aug_k = 8;
  std::size_t aug_L = 250;
  std::uint64_t aug_seed = 42;
  bool aug_pooled = false;
  aug->add_option("--in", aug_in)->required();
  aug->add_option("--out", aug_out)->required();
  aug->add_option("--scheme", aug_scheme, "uniform|weighted|shuffled")->capture_default_str();
  aug->add_option("--k", aug_k)->capture_default_str();
  aug->add_option("--L", aug_L)->capture_default_str();
  aug->add_option("--weights-from", aug_weights_from,
                  "Cohort used for leave-one-subject-out weights (default: --in)");
  aug->add_option("--signal", aug_signal, "Window for dERP weights")->capture_default_str();
  aug->add_option("--seed", aug_seed)->capture_default_str();
  aug->add_flag("--pooled", aug_pooled, "Draw from all trials instead of per sentence type");
  aug->callback([&] {
    stages.push_back({"augment", [&] {
      const Scheme scheme = parse_scheme(aug_scheme);
      const auto cohort = load_dir(aug_in);
      std::vector<TopicWeights> weights(cohort.size());
      if (scheme != Scheme::Uniform) {
        const auto pool = aug_weights_from.empty() ? cohort : load_dir(aug_weights_from);
        weights = loso_for(cohort, pool, TimeWindow::parse(aug_signal));
      }
      std::vector<std::optional<EpochSet>> out(cohort.size());
      parallel_for(cohort.size(), threads, [&](std::size_t s) {
        try {
          const RngSeed seed{aug_seed};
          const auto wv = build_weight_vector(cohort[s].labels(), weights[s], scheme,
                                              derive_seed(seed, s, 1));
          const BootstrapPlan plan{aug_k, aug_L, derive_seed(seed, s, 0), !aug_pooled};
          out[s] = augment(cohort[s], wv, plan);
        } catch (const std::exception& ex) {
          throw Error(cohort[s].subject_id() + ": " + ex.what());
        }
      });
      std::vector<EpochSet> done;
      for (auto& e : out) done.push_back(std::move(*e));
      save_dir(done, aug_out, threads);
    }});
  });

  // decode
  auto* dec = app.add_subcommand("decode", "Cross-validated decoding of sentence type");
  fs::path dec_in;
  fs::path dec_out;
  fs::path dec_weights_from;
  std::string dec_mode = "window";
  std::string dec_window = "0.3:0.6";
  std::string dec_signal = "0.3:0.6";
  std::string dec_scheme = "uniform";
  std::string dec_condition = "BI";
  std::string dec_seeds = "1";
  DecodeConfig dcfg;
  dec->add_option("--in", dec_in)->required();
  dec->add_option("--out", dec_out)->required();
  dec->add_option("--mode", dec_mode, "timecourse|window")->capture_default_str();
  dec->add_option("--window", dec_window)->capture_default_str();
  dec->add_option("--condition", dec_condition, "Bio|Int|BI")->capture_default_str();
  dec->add_option("--scheme", dec_scheme)->capture_default_str();
  dec->add_option("--k", dcfg.k)->capture_default_str();
  dec->add_option("--L", dcfg.L)->capture_default_str();
  dec->add_option("--source-trials", dcfg.source_trials, "0 = all")->capture_default_str();
  dec->add_option("--folds", dcfg.n_folds)->capture_default_str();
  dec->add_option("--seeds", dec_seeds, "e.g. 1..5 or 1,2,7")->capture_default_str();
  dec->add_option("--C", dcfg.svm.hyper_c, "SVM regularisation")->capture_default_str();
  dec->add_option("--components", dcfg.n_components)->capture_default_str();
  dec->add_option("--weights-from", dec_weights_from,
                  "Cohort used for leave-one-subject-out weights (default: --in)");
  dec->add_option("--signal", dec_signal, "Window for dERP weights")->capture_default_str();
  dec->callback([&] {
    stages.push_back({"decode", [&] {
      if (dec_mode != "timecourse" && dec_mode != "window") {
        throw InvalidArgument("--mode must be timecourse or window");
      }
      const auto mode = dec_mode == "window" ? DecodeMode::Window : DecodeMode::Timecourse;
      dcfg.condition = dec_condition;
      dcfg.scheme = parse_scheme(dec_scheme);
      dcfg.seeds = parse_seeds(dec_seeds);
      const TimeWindow window = TimeWindow::parse(dec_window);
      const TimeWindow signal = TimeWindow::parse(dec_signal);
      const auto cohort = load_dir(dec_in);
      DecodingReport report;
      if (dcfg.scheme == Scheme::Uniform || dec_weights_from.empty()) {
        report = decode_cohort(cohort, mode, window, dcfg, signal, threads);
      } else {
        const auto pool = load_dir(dec_weights_from);
        const auto weights = loso_for(cohort, pool, signal);
        std::vector<DecodingReport> parts(cohort.size());
        parallel_for(cohort.size(), threads, [&](std::size_t s) {
          DecodeConfig local = dcfg;
          local.weights = weights[s];
          const auto subject = condition_trials(cohort[s], dcfg.condition);
          parts[s] = mode == DecodeMode::Window ? decode_window(subject, window, local)
                                                : decode_timecourse(subject, local);
        });
        for (const auto& p : parts) report.append(p);
        report.sort();
      }
      auto out = open_out(dec_out);
      report.write_csv(out);
    }});
  });

  // stats
  auto* st = app.add_subcommand("stats", "Compare two decoding reports");
  fs::path st_report;
  fs::path st_against;
  fs::path st_out;
  std::string st_test = "paired-t";
  std::string st_window;
  double st_q = 0.05;
  double st_alpha = 0.05;
  ClusterOptions copt;
  std::uint64_t st_seed = 1;
  st->add_option("--report", st_report)->required();
  st->add_option("--against", st_against)->required();
  st->add_option("--out", st_out)->required();
  st->add_option("--test", st_test, "paired-t|cluster")->capture_default_str();
  st->add_option("--q", st_q, "BH false discovery rate")->capture_default_str();
  st->add_option("--alpha", st_alpha, "Cluster significance level")->capture_default_str();
  st->add_option("--alpha-cluster", copt.alpha_cluster, "Cluster-forming threshold")
      ->capture_default_str();
  st->add_option("--n-perm", copt.n_permutations)->capture_default_str();
  st->add_option("--seed", st_seed)->capture_default_str();
  st->add_option("--window", st_window, "Restrict cluster search to start:end");
  st->callback([&] {
    stages.push_back({"stats", [&] {
      const auto a = DecodingReport::load_csv(st_report);
      const auto b = DecodingReport::load_csv(st_against);
      std::vector<StatsRow> rows;
      if (st_test == "paired-t") {
        rows = paired_report_tests(a, b, st_q);
      } else if (st_test == "cluster") {
        copt.seed = RngSeed{st_seed};
        std::optional<TimeWindow> window;
        if (!st_window.empty()) window = TimeWindow::parse(st_window);
        rows = cluster_report_test(a, b, window, copt, st_alpha);
      } else {
        throw InvalidArgument("--test must be paired-t or cluster");
      }
      auto out = open_out(st_out);
      write_stats_csv(rows, out);
    }});
  });

  // run
  auto* run = app.add_subcommand("run", "Full experiment: synth through stats");
  fs::path run_config;
  fs::path run_out;
  bool run_dump = false;
  run->add_option("--config", run_config, "Experiment config JSON (default: standard cohort)");
  run->add_option("--out", run_out, "Artifact directory");
  run->add_flag("--dump-config", run_dump, "Print the effective config and exit");
  run->callback([&] {
    stages.push_back({"run", [&] {
      ExperimentConfig cfg =
          run_config.empty() ? ExperimentConfig::standard() : load_experiment_config(run_config);
      apply_seed_override(cfg);
      if (run_dump) {
        std::cout << nlohmann::json(cfg).dump(2) << "\n";
        return;
      }
      if (run_out.empty()) throw InvalidArgument("--out is required");
      const auto out = run_experiment(cfg, run_out, threads);
      std::printf("config %s -> %s\n", config_hash(cfg).c_str(), run_out.c_str());
    }});
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  for (const auto& stage : stages) {
    try {
      stage.run();
    } catch (const StageError& ex) {
      std::fprintf(stderr, "neuroboot %s: error in %s\n", stage.name.c_str(), ex.what());
      return 1;
    } catch (const std::exception& ex) {
      std::fprintf(stderr, "neuroboot %s: error: %s\n", stage.name.c_str(), ex.what());
      return 1;
    }
  }
  return 0;
}
