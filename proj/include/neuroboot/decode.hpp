#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neuroboot/bootstrap.hpp"
#include "neuroboot/core.hpp"
#include "neuroboot/report.hpp"
#include "neuroboot/svm.hpp"

namespace neuroboot {

/// Stratified fold assignment: trials of each (sentence type, topic) cell
/// are shuffled and dealt round-robin; the dealing position carries over
/// between cells of the same type, so each type's fold sizes differ by at
/// most one.
struct FoldPlan {
  std::size_t n_folds = 5;
  std::vector<std::size_t> assignments;

  std::vector<std::size_t> test_indices(std::size_t fold) const;
  std::vector<std::size_t> train_indices(std::size_t fold) const;
};

/// Throws InvalidArgument when a sentence type has fewer than n_folds trials.
FoldPlan make_folds(std::span<const TrialLabel> labels, std::size_t n_folds, RngSeed seed);

/// Seeded stratified subsample of `source_trials` trials spread evenly over
/// the (topic, type) cells present; original order kept. 0 means all.
std::vector<std::size_t> source_subset(std::span<const TrialLabel> labels,
                                       std::size_t source_trials, RngSeed seed);

enum class DecodeMode { Timecourse, Window };

struct DecodeConfig {
  std::string condition = "BI";
  Scheme scheme = Scheme::Uniform;
  std::size_t k = 8;
  std::size_t L = 250;
  std::size_t n_folds = 5;
  std::vector<std::uint64_t> seeds{1};
  TopicWeights weights;
  SvmOptions svm;
  std::size_t n_components = 3;
  /// Trials kept before fold assignment; 0 keeps every trial.
  std::size_t source_trials = 0;
  bool per_class = true;
};

/// Trial indices (into the decoded EpochSet) consumed by each fitting step
/// of one (seed, fold) unit.
struct FoldTrace {
  std::uint64_t seed = 0;
  std::size_t fold = 0;
  std::vector<std::size_t> projector_fit;
  std::vector<std::size_t> train_pool;
  std::vector<std::size_t> test_pool;
};

/// Per-fold accuracy (averaged over seeds), fold × time.
struct FoldAccuracy {
  std::size_t n_folds = 0;
  std::size_t n_points = 0;
  std::vector<double> values;
};

/// Runs stratified CV for one subject. Per fold: the PCA projector is fitted
/// on the training trials' type ERPs, train and test trials are augmented
/// separately, and a linear SVM is trained per time sample (timecourse) or
/// on the flattened window (window mode).
FoldAccuracy decode_subject(const EpochSet& e, DecodeMode mode, const TimeWindow& window,
                            const DecodeConfig& cfg, std::vector<FoldTrace>* trace = nullptr);

DecodingReport decode_timecourse(const EpochSet& e, const DecodeConfig& cfg,
                                 std::vector<FoldTrace>* trace = nullptr);

DecodingReport decode_window(const EpochSet& e, const TimeWindow& window, const DecodeConfig& cfg,
                             std::vector<FoldTrace>* trace = nullptr);

/// Trials of a named condition: "Bio", "Int" or "BI" (both topics).
EpochSet condition_trials(const EpochSet& e, const std::string& condition);

/// Decodes every subject with leave-one-subject-out weights estimated over
/// `weight_window`; subjects run on up to `threads` workers.
DecodingReport decode_cohort(std::span<const EpochSet> cohort, DecodeMode mode,
                             const TimeWindow& window, const DecodeConfig& cfg,
                             const TimeWindow& weight_window, std::size_t threads);

}  // namespace neuroboot
