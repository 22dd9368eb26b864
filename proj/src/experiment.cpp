#include "neuroboot/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "neuroboot/metrics.hpp"
#include "neuroboot/parallel.hpp"

namespace neuroboot {

namespace {

using nlohmann::json;

const std::set<std::string> kConditions{"Bio", "Int", "BI"};

std::size_t conditions_cells(const std::string& condition) { return condition == "BI" ? 4 : 2; }

json window_json(const TimeWindow& w) { return json::array({w.start_s, w.end_s}); }

TimeWindow window_from(const json& j, const char* what) {
  if (j.is_string()) return TimeWindow::parse(j.get<std::string>());
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 2) throw InvalidArgument(std::string(what) + " must be [start, end]");
  return TimeWindow(v[0], v[1]);
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw InvalidArgument(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(),
                                [&](const char* a) { return key == a; });
    if (!ok) throw InvalidArgument("unknown key '" + key + "' in " + where);
  }
}

template <typename Fn>
auto staged(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& ex) {
    throw StageError(stage, ex.what());
  }
}

std::filesystem::path write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path.string());
  return path;
}

std::optional<double> parse_time(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

EpochSet preprocess(const EpochSet& e, const PreprocessOptions& options) {
  if (!options.enabled) return e;
  if (options.downsample == 0) throw InvalidArgument("downsample factor must be >= 1");
  if (options.downsample > 1) {
    const double new_nyquist = e.fs() / static_cast<double>(options.downsample) / 2.0;
    if (!(options.lowpass_hz > 0.0) || !(options.lowpass_hz < new_nyquist)) {
      throw InvalidArgument("downsampling by " + std::to_string(options.downsample) +
                            " needs a low-pass cutoff below " + format_number(new_nyquist) +
                            " Hz");
    }
  }
  EpochSet x = baseline_zscore(e, options.baseline);
  if (options.lowpass_hz > 0.0) {
    x = lowpass_zerophase(x, FilterSpec{options.lowpass_hz, options.order, FilterKind::Lowpass});
  }
  if (options.downsample > 1) x = downsample(x, options.downsample);
  return x;
}

std::string TimecourseSpec::label() const {
  return condition + "/" + to_string(scheme) + "/" + std::to_string(source) + "/" +
         std::to_string(k);
}

ExperimentConfig ExperimentConfig::standard() {
  ExperimentConfig cfg;
  cfg.synth.n_subjects = 20;
  cfg.synth.n_trials_per_cell = 120;
  cfg.synth.fs = 250.0;
  cfg.synth.effect_bio = 0.04;
  cfg.synth.effect_int = 0.12;
  cfg.synth.seed = RngSeed{7};
  cfg.preprocess.downsample = 2;
  const auto u = Scheme::Uniform;
  cfg.timecourses = {{"Int", u, 80, 8}, {"BI", u, 80, 8}, {"Bio", u, 80, 8}};
  cfg.cluster_comparisons = {{"Int/uniform/80/8", "BI/uniform/80/8"},
                             {"BI/uniform/80/8", "Bio/uniform/80/8"}};
  const std::vector<Scheme> all{Scheme::Uniform, Scheme::Weighted, Scheme::RandomShuffled};
  cfg.grid = {{"Bio", 80, 8, {u}},      {"Int", 80, 8, {u}},       {"BI", 80, 8, all},
              {"BI", 160, 8, all},      {"BI", 160, 12, all},      {"BI", 160, 16, all}};
  cfg.cluster.seed = RngSeed{1};
  return cfg;
}

void ExperimentConfig::validate() const {
  synth.validate();
  const TimeWindow& span = synth.epoch_span;
  auto inside = [&](const TimeWindow& w, const char* what) {
    if (w.start_s < span.start_s - 1e-9 || w.end_s > span.end_s + 1e-9) {
      throw InvalidArgument(std::string(what) + " window lies outside the epoch span");
    }
  };
  inside(signal_window, "signal");
  inside(baseline_window, "baseline");
  inside(decode_window, "decode");
  if (preprocess.enabled) inside(preprocess.baseline, "preprocessing baseline");
  if (preprocess.downsample == 0) throw InvalidArgument("downsample factor must be >= 1");
  if (preprocess.enabled && preprocess.downsample > 1) {
    const double nyquist = synth.fs / static_cast<double>(preprocess.downsample) / 2.0;
    if (!(preprocess.lowpass_hz > 0.0 && preprocess.lowpass_hz < nyquist)) {
      throw InvalidArgument("downsampling needs a low-pass cutoff below the new Nyquist frequency");
    }
  }
  if (seeds.empty()) throw InvalidArgument("at least one decoding seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw InvalidArgument("decoding seeds must be distinct");
  }
  if (L < 2 || L % 2 != 0) throw InvalidArgument("L must be an even number >= 2");
  if (n_folds < 2) throw InvalidArgument("at least 2 folds are required");
  if (!(hyper_c > 0.0)) throw InvalidArgument("hyper_c must be positive");
  if (!(q > 0.0 && q < 1.0) || !(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidArgument("q and alpha must lie in (0, 1)");
  }
  auto check_cell = [&](const std::string& condition, std::size_t source, std::size_t k,
                        const std::string& where) {
    if (!kConditions.contains(condition)) {
      throw InvalidArgument(where + ": unknown condition '" + condition + "'");
    }
    if (k < 1) throw InvalidArgument(where + ": k must be >= 1");
    const std::size_t cells = conditions_cells(condition);
    const std::size_t available = cells * synth.n_trials_per_cell;
    if (source > available) {
      throw InvalidArgument(where + ": source " + std::to_string(source) + " exceeds the " +
                            std::to_string(available) + " available trials");
    }
    if (source % cells != 0) {
      throw InvalidArgument(where + ": source must split evenly over " + std::to_string(cells) +
                            " label cells");
    }
    const std::size_t used = source == 0 ? available : source;
    if (used / 2 < n_folds) throw InvalidArgument(where + ": fewer trials per type than folds");
  };
  std::set<std::string> labels;
  for (const auto& tc : timecourses) {
    check_cell(tc.condition, tc.source, tc.k, "timecourse " + tc.label());
    if (!labels.insert(tc.label()).second) {
      throw InvalidArgument("duplicate timecourse " + tc.label());
    }
  }
  for (const auto& [a, b] : cluster_comparisons) {
    if (!labels.contains(a) || !labels.contains(b)) {
      throw InvalidArgument("cluster comparison " + a + " vs " + b +
                            " references an unknown timecourse");
    }
  }
  std::set<std::string> cells;
  for (const auto& g : grid) {
    const std::string where = "grid cell " + g.condition + "/" + std::to_string(g.source) + "/" +
                              std::to_string(g.k);
    check_cell(g.condition, g.source, g.k, where);
    if (g.schemes.empty()) throw InvalidArgument(where + ": no schemes");
    for (const Scheme s : g.schemes) {
      if (!cells.insert(where + "/" + to_string(s)).second) {
        throw InvalidArgument("duplicate " + where + " scheme " + to_string(s));
      }
    }
  }
  if (timecourses.empty() && grid.empty()) {
    throw InvalidArgument("config has neither timecourses nor grid cells");
  }
}

void to_json(json& j, const ExperimentConfig& cfg) {
  json tcs = json::array();
  for (const auto& t : cfg.timecourses) {
    tcs.push_back({{"condition", t.condition},
                   {"scheme", to_string(t.scheme)},
                   {"source", t.source},
                   {"k", t.k}});
  }
  json comps = json::array();
  for (const auto& [a, b] : cfg.cluster_comparisons) comps.push_back({a, b});
  json grid = json::array();
  for (const auto& g : cfg.grid) {
    json schemes = json::array();
    for (const Scheme s : g.schemes) schemes.push_back(to_string(s));
    grid.push_back({{"condition", g.condition}, {"source", g.source}, {"k", g.k}, {"schemes", schemes}});
  }
  j = json{{"synth", cfg.synth},
           {"preprocess",
            {{"enabled", cfg.preprocess.enabled},
             {"baseline", window_json(cfg.preprocess.baseline)},
             {"lowpass_hz", cfg.preprocess.lowpass_hz},
             {"order", cfg.preprocess.order},
             {"downsample", cfg.preprocess.downsample}}},
           {"windows",
            {{"signal", window_json(cfg.signal_window)},
             {"baseline", window_json(cfg.baseline_window)},
             {"decode", window_json(cfg.decode_window)}}},
           {"L", cfg.L},
           {"folds", cfg.n_folds},
           {"seeds", cfg.seeds},
           {"hyper_c", cfg.hyper_c},
           {"timecourses", tcs},
           {"cluster_comparisons", comps},
           {"grid", grid},
           {"stats",
            {{"q", cfg.q},
             {"alpha", cfg.alpha},
             {"alpha_cluster", cfg.cluster.alpha_cluster},
             {"n_permutations", cfg.cluster.n_permutations},
             {"seed", cfg.cluster.seed.value}}}};
}

void from_json(const json& j, ExperimentConfig& cfg) {
  cfg = ExperimentConfig::standard();
  check_keys(j,
             {"synth", "preprocess", "windows", "L", "folds", "seeds", "hyper_c", "timecourses",
              "cluster_comparisons", "grid", "stats"},
             "experiment config");
  if (j.contains("synth")) {
    check_keys(j.at("synth"),
               {"n_subjects", "n_trials_per_cell", "n_channels", "fs", "epoch_span",
                "erp_latency_s", "erp_width_s", "effect_bio", "effect_int", "noise_sd",
                "noise_ar1", "spatial_rank", "subject_jitter", "base_amplitude", "seed"},
               "synth");
    SynthConfig synth = cfg.synth;
    from_json(j.at("synth"), synth);
    cfg.synth = synth;
  }
  if (j.contains("preprocess")) {
    const auto& p = j.at("preprocess");
    check_keys(p, {"enabled", "baseline", "lowpass_hz", "order", "downsample"}, "preprocess");
    if (p.contains("enabled")) cfg.preprocess.enabled = p.at("enabled").get<bool>();
    if (p.contains("baseline")) cfg.preprocess.baseline = window_from(p.at("baseline"), "baseline");
    if (p.contains("lowpass_hz")) cfg.preprocess.lowpass_hz = p.at("lowpass_hz").get<double>();
    if (p.contains("order")) cfg.preprocess.order = p.at("order").get<int>();
    if (p.contains("downsample")) cfg.preprocess.downsample = p.at("downsample").get<std::size_t>();
  }
  if (j.contains("windows")) {
    const auto& w = j.at("windows");
    check_keys(w, {"signal", "baseline", "decode"}, "windows");
    if (w.contains("signal")) cfg.signal_window = window_from(w.at("signal"), "signal");
    if (w.contains("baseline")) cfg.baseline_window = window_from(w.at("baseline"), "baseline");
    if (w.contains("decode")) cfg.decode_window = window_from(w.at("decode"), "decode");
  }
  if (j.contains("L")) cfg.L = j.at("L").get<std::size_t>();
  if (j.contains("folds")) cfg.n_folds = j.at("folds").get<std::size_t>();
  if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("hyper_c")) cfg.hyper_c = j.at("hyper_c").get<double>();
  if (j.contains("timecourses")) {
    cfg.timecourses.clear();
    for (const auto& t : j.at("timecourses")) {
      check_keys(t, {"condition", "scheme", "source", "k"}, "timecourse");
      TimecourseSpec spec;
      spec.condition = t.at("condition").get<std::string>();
      spec.scheme = parse_scheme(t.value("scheme", std::string("uniform")));
      spec.source = t.value("source", std::size_t{0});
      spec.k = t.value("k", std::size_t{8});
      cfg.timecourses.push_back(spec);
    }
    if (!j.contains("cluster_comparisons")) cfg.cluster_comparisons.clear();
  }
  if (j.contains("cluster_comparisons")) {
    cfg.cluster_comparisons.clear();
    for (const auto& c : j.at("cluster_comparisons")) {
      const auto pair = c.get<std::vector<std::string>>();
      if (pair.size() != 2) throw InvalidArgument("cluster comparison must name two timecourses");
      cfg.cluster_comparisons.emplace_back(pair[0], pair[1]);
    }
  }
  if (j.contains("grid")) {
    cfg.grid.clear();
    for (const auto& g : j.at("grid")) {
      check_keys(g, {"condition", "source", "k", "schemes"}, "grid cell");
      GridCell cell;
      cell.condition = g.at("condition").get<std::string>();
      cell.source = g.value("source", std::size_t{0});
      cell.k = g.value("k", std::size_t{8});
      for (const auto& s : g.value("schemes", std::vector<std::string>{"uniform"})) {
        cell.schemes.push_back(parse_scheme(s));
      }
      cfg.grid.push_back(cell);
    }
  }
  if (j.contains("stats")) {
    const auto& s = j.at("stats");
    check_keys(s, {"q", "alpha", "alpha_cluster", "n_permutations", "seed"}, "stats");
    if (s.contains("q")) cfg.q = s.at("q").get<double>();
    if (s.contains("alpha")) cfg.alpha = s.at("alpha").get<double>();
    if (s.contains("alpha_cluster")) cfg.cluster.alpha_cluster = s.at("alpha_cluster").get<double>();
    if (s.contains("n_permutations")) {
      cfg.cluster.n_permutations = s.at("n_permutations").get<std::size_t>();
    }
    if (s.contains("seed")) cfg.cluster.seed = RngSeed{s.at("seed").get<std::uint64_t>()};
  }
  cfg.validate();
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& ex) {
    throw InvalidArgument("config " + path.string() + " is not valid JSON: " + ex.what());
  }
  try {
    return j.get<ExperimentConfig>();
  } catch (const json::exception& ex) {
    throw InvalidArgument("config " + path.string() + ": " + ex.what());
  }
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool apply_seed_override(ExperimentConfig& cfg) {
  const char* env = std::getenv("NEUROBOOT_SEED");
  if (env == nullptr || *env == '\0') return false;
  const std::string text(env);
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw InvalidArgument("NEUROBOOT_SEED must be an unsigned integer, got '" + text + "'");
  }
  cfg.synth.seed = RngSeed{v};
  return true;
}

std::vector<EpochSet> build_cohort(const ExperimentConfig& cfg, std::size_t threads) {
  std::vector<std::optional<EpochSet>> slots(cfg.synth.n_subjects);
  parallel_for(slots.size(), threads, [&](std::size_t s) {
    EpochSet raw = staged("synth", [&] {
      try {
        return generate_subject(cfg.synth, s);
      } catch (const std::exception& ex) {
        throw Error("subject " + std::to_string(s) + ": " + ex.what());
      }
    });
    slots[s] = staged("preprocess", [&] {
      try {
        return preprocess(raw, cfg.preprocess);
      } catch (const std::exception& ex) {
        throw Error(raw.subject_id() + ": " + ex.what());
      }
    });
  });
  std::vector<EpochSet> cohort;
  cohort.reserve(slots.size());
  for (auto& s : slots) cohort.push_back(std::move(*s));
  return cohort;
}

std::vector<QualityRow> quality_table(std::span<const EpochSet> cohort, const TimeWindow& signal,
                                      const TimeWindow& baseline) {
  std::vector<QualityRow> rows;
  for (const auto& subject : cohort) {
    for (const char* toi : {"Bio", "Int", "BI"}) {
      try {
        const auto q = quality(condition_trials(subject, toi), signal, baseline);
        rows.push_back({subject.subject_id(), toi, q.snr_db, q.delta_erp});
      } catch (const std::exception& ex) {
        throw Error(subject.subject_id() + " " + toi + ": " + ex.what());
      }
    }
  }
  return rows;
}

void write_quality_csv(std::span<const QualityRow> rows, std::ostream& out) {
  CsvWriter w(out);
  w.row({"subject", "toi", "snr_db", "delta_erp"});
  for (const auto& r : rows) {
    w.row({r.subject, r.toi, format_number(r.snr_db), format_number(r.delta_erp)});
  }
}

void write_stats_csv(std::span<const StatsRow> rows, std::ostream& out) {
  CsvWriter w(out);
  w.row({"analysis", "metric", "a", "b", "start", "end", "statistic", "df", "p", "significant"});
  for (const auto& r : rows) {
    w.row({r.analysis, r.metric, r.a, r.b, r.start, r.end, format_number(r.statistic),
           format_number(r.df), format_number(r.p), r.significant ? "1" : "0"});
  }
}

std::string report_label(const DecodingReport& r) {
  if (r.rows.empty()) throw InvalidArgument("report has no rows");
  const auto& f = r.rows.front();
  const std::string label =
      f.condition + "/" + f.scheme + "/" + std::to_string(f.source) + "/" + std::to_string(f.k);
  for (const auto& row : r.rows) {
    if (row.condition != f.condition || row.scheme != f.scheme || row.source != f.source ||
        row.k != f.k) {
      throw InvalidArgument("report mixes decoding settings (" + label + " and " + row.condition +
                            "/" + row.scheme + "/" + std::to_string(row.source) + "/" +
                            std::to_string(row.k) + ")");
    }
  }
  return label;
}

namespace {

// Subject ids and time keys shared by both reports, each in report order.
struct Matched {
  std::vector<std::string> subjects;
  std::vector<std::string> times;
  std::map<std::string, std::map<std::string, double>> a;
  std::map<std::string, std::map<std::string, double>> b;
};

Matched match_reports(const DecodingReport& a, const DecodingReport& b,
                      const std::optional<TimeWindow>& window) {
  report_label(a);
  report_label(b);
  Matched m{{}, {}, a.subject_means(), b.subject_means()};
  for (const auto& [subject, times] : m.a) {
    if (m.b.contains(subject)) m.subjects.push_back(subject);
  }
  if (m.subjects.empty()) throw InvalidArgument("reports share no subjects");
  for (const auto& [t, p] : a.summary()) {
    bool everywhere = true;
    for (const auto& s : m.subjects) {
      everywhere = everywhere && m.a[s].contains(t) && m.b[s].contains(t);
    }
    if (!everywhere) continue;
    if (window) {
      const auto tv = parse_time(t);
      if (!tv || *tv < window->start_s - 1e-9 || *tv >= window->end_s - 1e-9) continue;
    }
    m.times.push_back(t);
  }
  if (m.times.empty()) throw InvalidArgument("reports share no time points");
  return m;
}

}  // namespace

std::vector<StatsRow> paired_report_tests(const DecodingReport& a, const DecodingReport& b,
                                          double q) {
  Matched m = match_reports(a, b, std::nullopt);
  const std::string la = report_label(a);
  const std::string lb = report_label(b);
  std::vector<StatsRow> rows;
  std::vector<double> p_values;
  for (const auto& t : m.times) {
    std::vector<double> xa;
    std::vector<double> xb;
    for (const auto& s : m.subjects) {
      xa.push_back(m.a[s][t]);
      xb.push_back(m.b[s][t]);
    }
    StatsRow row{"paired-t", "accuracy", la, lb, t, t};
    try {
      const auto r = paired_t(xa, xb);
      row.statistic = r.t;
      row.df = r.df;
      row.p = r.p;
    } catch (const DegenerateSample&) {
      row.statistic = std::nan("");
      row.df = static_cast<double>(xa.size()) - 1.0;
      row.p = 1.0;
    }
    p_values.push_back(row.p);
    rows.push_back(std::move(row));
  }
  const auto reject = fdr_bh(p_values, q);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].significant = reject[i];
  return rows;
}

std::pair<SubjectTimeMatrix, SubjectTimeMatrix> matched_matrices(
    const DecodingReport& a, const DecodingReport& b, const std::optional<TimeWindow>& window,
    std::vector<std::string>* times) {
  Matched m = match_reports(a, b, window);
  SubjectTimeMatrix ma{m.subjects.size(), m.times.size(), {}};
  SubjectTimeMatrix mb{m.subjects.size(), m.times.size(), {}};
  for (const auto& s : m.subjects) {
    for (const auto& t : m.times) {
      ma.values.push_back(m.a[s][t]);
      mb.values.push_back(m.b[s][t]);
    }
  }
  if (times != nullptr) *times = m.times;
  return {std::move(ma), std::move(mb)};
}

std::vector<StatsRow> cluster_report_test(const DecodingReport& a, const DecodingReport& b,
                                          const std::optional<TimeWindow>& window,
                                          const ClusterOptions& options, double alpha) {
  std::vector<std::string> times;
  const auto [ma, mb] = matched_matrices(a, b, window, &times);
  const auto result = cluster_permutation(ma, mb, options);
  std::vector<StatsRow> rows;
  for (const auto& c : result.clusters) {
    StatsRow row{"cluster", "accuracy", report_label(a), report_label(b), times[c.start],
                 times[c.end]};
    row.statistic = c.mass;
    row.df = static_cast<double>(ma.n_subjects) - 1.0;
    row.p = c.p;
    row.significant = c.p < alpha;
    rows.push_back(std::move(row));
  }
  return rows;
}

ExperimentOutputs run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                 std::size_t threads) {
  staged("config", [&] { cfg.validate(); });
  staged("output", [&] {
    std::filesystem::create_directories(out_dir / "reports");
  });
  const std::vector<EpochSet> cohort = build_cohort(cfg, threads);
  const auto rows = staged("metrics", [&] {
    return quality_table(cohort, cfg.signal_window, cfg.baseline_window);
  });

  auto decode_cfg = [&](const std::string& condition, Scheme scheme, std::size_t source,
                        std::size_t k) {
    DecodeConfig d;
    d.condition = condition;
    d.scheme = scheme;
    d.k = k;
    d.L = cfg.L;
    d.n_folds = cfg.n_folds;
    d.seeds = cfg.seeds;
    d.svm.hyper_c = cfg.hyper_c;
    d.source_trials = source;
    return d;
  };

  ExperimentOutputs out;
  std::map<std::string, DecodingReport> timecourses;
  for (const auto& tc : cfg.timecourses) {
    auto report = staged("decode " + tc.label(), [&] {
      return decode_cohort(cohort, DecodeMode::Timecourse, cfg.decode_window,
                           decode_cfg(tc.condition, tc.scheme, tc.source, tc.k),
                           cfg.signal_window, threads);
    });
    out.timecourse_report.append(report);
    timecourses.emplace(tc.label(), std::move(report));
  }
  std::vector<std::pair<std::string, DecodingReport>> cells;
  for (const auto& g : cfg.grid) {
    for (const Scheme s : g.schemes) {
      const auto d = decode_cfg(g.condition, s, g.source, g.k);
      auto report = staged("decode " + g.condition + "/" + to_string(s) + "/" +
                               std::to_string(g.source) + "/" + std::to_string(g.k),
                           [&] {
                             return decode_cohort(cohort, DecodeMode::Window, cfg.decode_window, d,
                                                  cfg.signal_window, threads);
                           });
      out.window_report.append(report);
      cells.emplace_back(report_label(report), std::move(report));
    }
  }

  std::vector<StatsRow> stats = staged("stats", [&] {
    std::vector<StatsRow> all;
    // Topic comparisons of the data-quality metrics.
    std::map<std::string, std::map<std::string, std::pair<double, double>>> by_toi;
    for (const auto& r : rows) by_toi[r.toi][r.subject] = {r.snr_db, r.delta_erp};
    const std::pair<const char*, const char*> pairs[] = {{"Int", "Bio"}, {"Int", "BI"}, {"BI", "Bio"}};
    for (const char* metric : {"snr_db", "delta_erp"}) {
      std::vector<StatsRow> family;
      for (const auto& [a, b] : pairs) {
        std::vector<double> xa;
        std::vector<double> xb;
        for (const auto& [subject, v] : by_toi[a]) {
          const auto& w = by_toi[b][subject];
          const bool snr = std::string(metric) == "snr_db";
          xa.push_back(snr ? v.first : std::abs(v.second));
          xb.push_back(snr ? w.first : std::abs(w.second));
        }
        StatsRow row{"quality-paired-t", metric, a, b, "", ""};
        row.df = static_cast<double>(xa.size()) - 1.0;
        try {
          const auto t = paired_t(xa, xb);
          row.statistic = t.t;
          row.p = t.p;
        } catch (const DegenerateSample&) {
          row.statistic = std::nan("");
        }
        family.push_back(row);
      }
      std::vector<double> p;
      for (const auto& r : family) p.push_back(r.p);
      const auto reject = fdr_bh(p, cfg.q);
      for (std::size_t i = 0; i < family.size(); ++i) family[i].significant = reject[i];
      all.insert(all.end(), family.begin(), family.end());
    }

    // Scheme comparisons within each grid cell, one BH family over all of them.
    std::vector<StatsRow> family;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      for (std::size_t j = 0; j < cells.size(); ++j) {
        const auto& ra = cells[i].second.rows.front();
        const auto& rb = cells[j].second.rows.front();
        if (ra.condition != rb.condition || ra.source != rb.source || ra.k != rb.k) continue;
        const bool wanted = (ra.scheme == "weighted" && rb.scheme == "uniform") ||
                            (ra.scheme == "shuffled" && rb.scheme == "uniform") ||
                            (ra.scheme == "weighted" && rb.scheme == "shuffled");
        if (!wanted) continue;
        auto r = paired_report_tests(cells[i].second, cells[j].second, cfg.q);
        family.insert(family.end(), r.begin(), r.end());
      }
    }
    if (!family.empty()) {
      std::vector<double> p;
      for (const auto& r : family) p.push_back(r.p);
      const auto reject = fdr_bh(p, cfg.q);
      for (std::size_t i = 0; i < family.size(); ++i) family[i].significant = reject[i];
    }
    all.insert(all.end(), family.begin(), family.end());

    // Cluster tests need enough subjects for a meaningful sign-flip null.
    if (cohort.size() >= 6) {
      for (const auto& [a, b] : cfg.cluster_comparisons) {
        auto r = cluster_report_test(timecourses.at(a), timecourses.at(b), cfg.signal_window,
                                     cfg.cluster, cfg.alpha);
        all.insert(all.end(), r.begin(), r.end());
      }
    }
    return all;
  });

  staged("write", [&] {
    std::ostringstream quality_text;
    write_quality_csv(rows, quality_text);
    out.quality_csv = write_text(out_dir / "quality.csv", quality_text.str());

    std::ostringstream tc_text;
    {
      CsvWriter w(tc_text);
      w.row({"condition", "scheme", "source", "k", "t", "mean_accuracy", "se", "n_subjects"});
      for (const auto& tc : cfg.timecourses) {
        for (const auto& [t, p] : timecourses.at(tc.label()).summary()) {
          w.row({tc.condition, to_string(tc.scheme), std::to_string(tc.source),
                 std::to_string(tc.k), t, format_number(p.mean), format_number(p.se),
                 std::to_string(p.n_subjects)});
        }
      }
    }
    out.timecourse_csv = write_text(out_dir / "timecourse.csv", tc_text.str());

    std::ostringstream table_text;
    {
      CsvWriter w(table_text);
      w.row({"condition", "source", "k", "scheme", "mean_accuracy", "se", "n_subjects"});
      for (const auto& [label, report] : cells) {
        const auto& f = report.rows.front();
        const auto summary = report.summary();
        const auto& p = summary.front().second;
        w.row({f.condition, std::to_string(f.source), std::to_string(f.k), f.scheme,
               format_number(p.mean), format_number(p.se), std::to_string(p.n_subjects)});
      }
    }
    out.table1_csv = write_text(out_dir / "table1.csv", table_text.str());

    std::ostringstream stats_text;
    write_stats_csv(stats, stats_text);
    out.stats_csv = write_text(out_dir / "stats.csv", stats_text.str());

    std::ostringstream tc_report;
    out.timecourse_report.write_csv(tc_report);
    write_text(out_dir / "reports" / "timecourse_report.csv", tc_report.str());
    std::ostringstream win_report;
    out.window_report.write_csv(win_report);
    write_text(out_dir / "reports" / "window_report.csv", win_report.str());

    json files = json::object();
    const std::pair<const char*, std::string> written[] = {
        {"quality.csv", quality_text.str()},
        {"timecourse.csv", tc_text.str()},
        {"table1.csv", table_text.str()},
        {"stats.csv", stats_text.str()},
        {"reports/timecourse_report.csv", tc_report.str()},
        {"reports/window_report.csv", win_report.str()}};
    for (const auto& [name, text] : written) files[name] = {{"rows", count_lines(text) - 1}};
    json manifest{{"config_hash", config_hash(cfg)},
                  {"synth_seed", cfg.synth.seed.value},
                  {"decode_seeds", cfg.seeds},
                  {"cluster_seed", cfg.cluster.seed.value},
                  {"cluster_tests_run", cohort.size() >= 6},
                  {"n_subjects", cohort.size()},
                  {"files", files},
                  {"config", cfg}};
    out.manifest = write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  });
  return out;
}

}  // namespace neuroboot
