#include "neuroboot/decode.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "neuroboot/features.hpp"
#include "neuroboot/parallel.hpp"

namespace neuroboot {

namespace {

enum Stream : std::uint64_t { kSource = 11, kFolds = 12, kShuffle = 13, kAugment = 14 };

std::size_t cell_of(const TrialLabel& l) { return label_code(l); }

// Rows [first, last) of every slab.
Tensor3 crop_columns(const Tensor3& x, SampleRange r) {
  if (r.first == 0 && r.last == x.cols()) return x;
  Tensor3 out(x.n(), x.rows(), r.size());
  for (std::size_t i = 0; i < x.n(); ++i) {
    for (std::size_t c = 0; c < x.rows(); ++c) {
      for (std::size_t s = 0; s < r.size(); ++s) out(i, c, s) = x(i, c, r.first + s);
    }
  }
  return out;
}

std::vector<int> class_targets(std::span<const TrialLabel> labels) {
  std::vector<int> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    y[i] = labels[i].type == SentenceType::Type1 ? 1 : -1;
  }
  return y;
}

std::string format_time(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", t);
  return buf;
}

std::string format_window(const TimeWindow& w) {
  return format_number(w.start_s) + ":" + format_number(w.end_s);
}

}  // namespace

std::vector<std::size_t> FoldPlan::test_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) out.push_back(i);
  }
  return out;
}

FoldPlan make_folds(std::span<const TrialLabel> labels, std::size_t n_folds, RngSeed seed) {
  if (n_folds < 2) throw InvalidArgument("need at least 2 folds");
  FoldPlan plan;
  plan.n_folds = n_folds;
  plan.assignments.assign(labels.size(), 0);
  Rng rng(seed);
  for (std::uint8_t t = 0; t < 2; ++t) {
    const auto type = static_cast<SentenceType>(t);
    std::size_t position = 0;
    for (std::uint8_t topic = 0; topic < 2; ++topic) {
      std::vector<std::size_t> cell;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i].type == type && static_cast<std::uint8_t>(labels[i].topic) == topic) {
          cell.push_back(i);
        }
      }
      rng.shuffle(std::span<std::size_t>(cell));
      for (std::size_t i : cell) plan.assignments[i] = position++ % n_folds;
    }
    if (position < n_folds) {
      throw InvalidArgument(std::string("sentence type ") + to_string(type) + " has " +
                            std::to_string(position) + " trials, fewer than " +
                            std::to_string(n_folds) + " folds");
    }
  }
  return plan;
}

std::vector<std::size_t> source_subset(std::span<const TrialLabel> labels,
                                       std::size_t source_trials, RngSeed seed) {
  std::vector<std::size_t> all(labels.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (source_trials == 0 || source_trials == labels.size()) return all;
  if (source_trials > labels.size()) {
    throw InvalidArgument("requested " + std::to_string(source_trials) +
                          " source trials but only " + std::to_string(labels.size()) +
                          " are available");
  }
  std::vector<std::vector<std::size_t>> cells(4);
  for (std::size_t i = 0; i < labels.size(); ++i) cells[cell_of(labels[i])].push_back(i);
  const auto present = static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](const auto& c) { return !c.empty(); }));
  if (source_trials % present != 0) {
    throw InvalidArgument("source trial count must split evenly over the label cells");
  }
  const std::size_t per_cell = source_trials / present;
  Rng rng(seed);
  std::vector<std::size_t> keep;
  for (auto& cell : cells) {
    if (cell.empty()) continue;
    if (cell.size() < per_cell) {
      throw InvalidArgument("a label cell has fewer trials than the source setting needs");
    }
    rng.shuffle(std::span<std::size_t>(cell));
    keep.insert(keep.end(), cell.begin(), cell.begin() + static_cast<std::ptrdiff_t>(per_cell));
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

EpochSet condition_trials(const EpochSet& e, const std::string& condition) {
  if (condition == "Bio") return select_trials(e, topic_is(Topic::Bio));
  if (condition == "Int") return select_trials(e, topic_is(Topic::Int));
  if (condition == "BI") return e;
  throw InvalidArgument("unknown condition '" + condition + "' (expected Bio, Int or BI)");
}

FoldAccuracy decode_subject(const EpochSet& e, DecodeMode mode, const TimeWindow& window,
                            const DecodeConfig& cfg, std::vector<FoldTrace>* trace) {
  if (cfg.seeds.empty()) throw InvalidArgument("decoding needs at least one seed");
  const SampleRange range = mode == DecodeMode::Window
                                ? e.samples_in(window)
                                : SampleRange{0, e.n_samples()};
  if (range.empty()) throw InvalidArgument("decoding window does not intersect the epoch");

  FoldAccuracy result;
  result.n_folds = cfg.n_folds;
  result.n_points = mode == DecodeMode::Window ? 1 : range.size();
  result.values.assign(result.n_folds * result.n_points, 0.0);
  const double seed_weight = 1.0 / static_cast<double>(cfg.seeds.size());

  for (const std::uint64_t raw_seed : cfg.seeds) {
    const RngSeed seed{raw_seed};
    const auto subset = source_subset(e.labels(), cfg.source_trials, derive_seed(seed, kSource));
    const EpochSet src = take_trials(e, subset);
    const FoldPlan folds = make_folds(src.labels(), cfg.n_folds, derive_seed(seed, kFolds));

    for (std::size_t f = 0; f < cfg.n_folds; ++f) try {
      const auto train_idx = folds.train_indices(f);
      const auto test_idx = folds.test_indices(f);
      const EpochSet train = take_trials(src, train_idx);
      const EpochSet test = take_trials(src, test_idx);

      const EpochSet train_only[] = {train};
      const auto groups = sentence_type_group_erps(train_only);
      const SpatialProjector projector = fit_projector(groups, cfg.n_components);
      const Tensor3 train_x = crop_columns(project(train.data(), projector), range);
      const Tensor3 test_x = crop_columns(project(test.data(), projector), range);

      const auto wv_train = build_weight_vector(train.labels(), cfg.weights, cfg.scheme,
                                                derive_seed(seed, kShuffle, f, 0));
      const auto wv_test = build_weight_vector(test.labels(), cfg.weights, cfg.scheme,
                                               derive_seed(seed, kShuffle, f, 1));
      BootstrapPlan plan{cfg.k, cfg.L, derive_seed(seed, kAugment, f, 0), cfg.per_class};
      const AugmentedTrials aug_train = augment_trials(train_x, train.labels(), wv_train, plan);
      plan.seed = derive_seed(seed, kAugment, f, 1);
      const AugmentedTrials aug_test = augment_trials(test_x, test.labels(), wv_test, plan);

      if (trace != nullptr) {
        FoldTrace t;
        t.seed = raw_seed;
        t.fold = f;
        for (std::size_t i : train_idx) t.projector_fit.push_back(subset[i]);
        t.train_pool = t.projector_fit;
        for (std::size_t i : test_idx) t.test_pool.push_back(subset[i]);
        trace->push_back(std::move(t));
      }

      const auto y_train = class_targets(aug_train.labels);
      const auto y_test = class_targets(aug_test.labels);
      const std::size_t n_comp = train_x.rows();
      const std::size_t n_cols = train_x.cols();
      double* out_row = &result.values[f * result.n_points];

      if (mode == DecodeMode::Window) {
        FeatureMatrix xtr(aug_train.data.n(), aug_train.data.slab_size());
        FeatureMatrix xte(aug_test.data.n(), aug_test.data.slab_size());
        std::copy(aug_train.data.values().begin(), aug_train.data.values().end(),
                  xtr.values.begin());
        std::copy(aug_test.data.values().begin(), aug_test.data.values().end(),
                  xte.values.begin());
        const LinearModel model = train_linear(xtr, y_train, cfg.svm);
        out_row[0] += seed_weight * accuracy(model, xte, y_test);
        continue;
      }

      FeatureMatrix xtr(aug_train.data.n(), n_comp);
      FeatureMatrix xte(aug_test.data.n(), n_comp);
      for (std::size_t s = 0; s < n_cols; ++s) {
        for (std::size_t i = 0; i < xtr.n; ++i) {
          for (std::size_t r = 0; r < n_comp; ++r) xtr.values[i * n_comp + r] = aug_train.data(i, r, s);
        }
        for (std::size_t i = 0; i < xte.n; ++i) {
          for (std::size_t r = 0; r < n_comp; ++r) xte.values[i * n_comp + r] = aug_test.data(i, r, s);
        }
        const LinearModel model = train_linear(xtr, y_train, cfg.svm);
        out_row[s] += seed_weight * accuracy(model, xte, y_test);
      }
    } catch (const Error& ex) {
      throw Error("seed " + std::to_string(raw_seed) + " fold " + std::to_string(f) + ": " +
                  ex.what());
    }
  }
  return result;
}

namespace {

DecodingReport to_report(const EpochSet& e, const FoldAccuracy& acc, DecodeMode mode,
                         const TimeWindow& window, const DecodeConfig& cfg) {
  DecodingReport report;
  const std::size_t source = cfg.source_trials == 0 ? e.n_trials() : cfg.source_trials;
  for (std::size_t f = 0; f < acc.n_folds; ++f) {
    for (std::size_t p = 0; p < acc.n_points; ++p) {
      DecodingRow row;
      row.subject = e.subject_id();
      row.condition = cfg.condition;
      row.scheme = to_string(cfg.scheme);
      row.source = source;
      row.k = cfg.k;
      row.fold = f;
      row.t_or_window = mode == DecodeMode::Window ? format_window(window) : format_time(e.time_of(p));
      row.accuracy = acc.values[f * acc.n_points + p];
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

}  // namespace

DecodingReport decode_timecourse(const EpochSet& e, const DecodeConfig& cfg,
                                 std::vector<FoldTrace>* trace) {
  const TimeWindow full(e.t0(), e.end_time());
  return to_report(e, decode_subject(e, DecodeMode::Timecourse, full, cfg, trace),
                   DecodeMode::Timecourse, full, cfg);
}

DecodingReport decode_window(const EpochSet& e, const TimeWindow& window, const DecodeConfig& cfg,
                             std::vector<FoldTrace>* trace) {
  return to_report(e, decode_subject(e, DecodeMode::Window, window, cfg, trace),
                   DecodeMode::Window, window, cfg);
}

DecodingReport decode_cohort(std::span<const EpochSet> cohort, DecodeMode mode,
                             const TimeWindow& window, const DecodeConfig& cfg,
                             const TimeWindow& weight_window, std::size_t threads) {
  std::vector<TopicDelta> deltas;
  if (cfg.scheme != Scheme::Uniform) {
    deltas.resize(cohort.size());
    parallel_for(cohort.size(), threads,
                 [&](std::size_t s) { deltas[s] = topic_abs_delta(cohort[s], weight_window); });
  }
  std::vector<DecodingReport> parts(cohort.size());
  parallel_for(cohort.size(), threads, [&](std::size_t s) {
    DecodeConfig local = cfg;
    if (cfg.scheme != Scheme::Uniform) local.weights = loso_weights(deltas, s);
    try {
      const EpochSet subject = condition_trials(cohort[s], cfg.condition);
      parts[s] = mode == DecodeMode::Window ? decode_window(subject, window, local)
                                            : decode_timecourse(subject, local);
    } catch (const std::exception& ex) {
      throw Error(cohort[s].subject_id() + ": " + ex.what());
    }
  });
  DecodingReport report;
  for (const auto& p : parts) report.append(p);
  report.sort();
  return report;
}

}  // namespace neuroboot
