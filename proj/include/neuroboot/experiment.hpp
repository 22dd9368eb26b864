#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "neuroboot/bootstrap.hpp"
#include "neuroboot/decode.hpp"
#include "neuroboot/preprocess.hpp"
#include "neuroboot/report.hpp"
#include "neuroboot/stats.hpp"
#include "neuroboot/synthgen.hpp"

namespace neuroboot {

/// Error tagged with the pipeline stage (and unit) that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct PreprocessOptions {
  bool enabled = true;
  TimeWindow baseline{-0.2, 0.0};
  /// 0 disables the filter.
  double lowpass_hz = 20.0;
  int order = 4;
  std::size_t downsample = 1;
};

/// Applies baseline z-scoring, zero-phase low-pass and downsampling in that
/// order. Throws InvalidArgument when downsampling is requested without a
/// low-pass below the new Nyquist frequency.
EpochSet preprocess(const EpochSet& e, const PreprocessOptions& options);

/// One time-resolved decoding run.
struct TimecourseSpec {
  std::string condition;
  Scheme scheme = Scheme::Uniform;
  std::size_t source = 0;
  std::size_t k = 8;

  std::string label() const;
};

/// One row of the source × sub-average grid, decoded on the window.
struct GridCell {
  std::string condition;
  std::size_t source = 0;
  std::size_t k = 8;
  std::vector<Scheme> schemes;
};

struct ExperimentConfig {
  SynthConfig synth;
  PreprocessOptions preprocess;
  TimeWindow signal_window{0.3, 0.6};
  TimeWindow baseline_window{-0.2, 0.0};
  TimeWindow decode_window{0.3, 0.6};
  std::size_t L = 250;
  std::size_t n_folds = 5;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double hyper_c = 1.0;
  std::vector<TimecourseSpec> timecourses;
  /// Pairs of TimecourseSpec labels compared with the cluster test.
  std::vector<std::pair<std::string, std::string>> cluster_comparisons;
  std::vector<GridCell> grid;
  double q = 0.05;
  /// Significance level for cluster p-values.
  double alpha = 0.05;
  ClusterOptions cluster;

  /// Throws InvalidArgument when windows, seeds, grid entries or comparison
  /// labels are inconsistent.
  void validate() const;

  /// The default grid: Bio and Int at (80, 8) uniform only, BI at (80, 8),
  /// (160, 8), (160, 12) and (160, 16) under all three schemes.
  static ExperimentConfig standard();
};

void to_json(nlohmann::json& j, const ExperimentConfig& cfg);
/// Missing keys keep the values of ExperimentConfig::standard().
void from_json(const nlohmann::json& j, ExperimentConfig& cfg);

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

/// Synthesises and preprocesses the cohort described by the config.
std::vector<EpochSet> build_cohort(const ExperimentConfig& cfg, std::size_t threads);

struct QualityRow {
  std::string subject;
  std::string toi;
  double snr_db = 0.0;
  double delta_erp = 0.0;
};

/// SNR and ΔERP per subject for the Bio, Int and combined BI trials.
std::vector<QualityRow> quality_table(std::span<const EpochSet> cohort, const TimeWindow& signal,
                                      const TimeWindow& baseline);
void write_quality_csv(std::span<const QualityRow> rows, std::ostream& out);

/// One line of stats.csv. Window-level tests leave start/end empty.
struct StatsRow {
  std::string analysis;
  std::string metric;
  std::string a;
  std::string b;
  std::string start;
  std::string end;
  double statistic = 0.0;
  double df = 0.0;
  double p = 1.0;
  bool significant = false;
};

void write_stats_csv(std::span<const StatsRow> rows, std::ostream& out);

/// "condition/scheme/source/k" of the first row; throws on an empty report.
std::string report_label(const DecodingReport& r);

/// Paired t-test per time point (or window) across subjects present in both
/// reports, BH-corrected at level q over all points.
std::vector<StatsRow> paired_report_tests(const DecodingReport& a, const DecodingReport& b,
                                          double q);

/// Subject × time accuracy matrix (fold means) restricted to time points in
/// `window`, with subjects ordered by id. Throws when the reports do not share
/// subjects and time points.
std::pair<SubjectTimeMatrix, SubjectTimeMatrix> matched_matrices(
    const DecodingReport& a, const DecodingReport& b, const std::optional<TimeWindow>& window,
    std::vector<std::string>* times = nullptr);

/// Cluster-mass sign-flip test of a − b over `window`; one row per cluster.
std::vector<StatsRow> cluster_report_test(const DecodingReport& a, const DecodingReport& b,
                                          const std::optional<TimeWindow>& window,
                                          const ClusterOptions& options, double alpha);

/// Replaces cfg.synth.seed with $NEUROBOOT_SEED when it is set. Returns true
/// when an override was applied; throws InvalidArgument on a malformed value.
bool apply_seed_override(ExperimentConfig& cfg);

struct ExperimentOutputs {
  std::filesystem::path quality_csv;
  std::filesystem::path timecourse_csv;
  std::filesystem::path table1_csv;
  std::filesystem::path stats_csv;
  std::filesystem::path manifest;
  DecodingReport timecourse_report;
  DecodingReport window_report;
};

/// Runs synth → preprocess → metrics → decode → stats and writes
/// quality.csv, timecourse.csv, table1.csv, stats.csv and manifest.json into
/// `out_dir`, plus the raw per-fold reports under reports/.
ExperimentOutputs run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                 std::size_t threads);

}  // namespace neuroboot
