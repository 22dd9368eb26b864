#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "neuroboot/core.hpp"
#include "neuroboot/rng.hpp"

namespace neuroboot {

// Reliability-weighted bootstrap augmentation.
//
// Every trial of topic Bio carries weight w_bio = 1 and every Int trial
// w_int = |ΔERP_Int| / |ΔERP_Bio|, estimated on other subjects. Weights are
// normalised to sampling probabilities, k trials are drawn with replacement
// and their count-weighted mean is one augmented trial.

enum class Scheme { Uniform, Weighted, RandomShuffled };

const char* to_string(Scheme scheme);
/// Accepts "uniform", "weighted", "shuffled" (or "random-shuffled").
Scheme parse_scheme(const std::string& text);

struct TopicWeights {
  double bio = 1.0;
  double intent = 1.0;
};

class WeightVector {
 public:
  /// Throws InvalidArgument on negative or non-finite weights, or when all are zero.
  WeightVector(std::vector<double> weights, Scheme scheme);

  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& probs() const { return probs_; }
  Scheme scheme() const { return scheme_; }
  std::size_t size() const { return weights_.size(); }

  /// Entries at `indices`, renormalised.
  WeightVector restricted(std::span<const std::size_t> indices) const;

 private:
  std::vector<double> weights_;
  std::vector<double> probs_;
  Scheme scheme_;
};

class DegenerateWeights : public Error {
 public:
  using Error::Error;
};

/// |ΔERP| of one subject's Bio and Int trials over the signal window.
struct TopicDelta {
  double bio = 0.0;
  double intent = 0.0;
};

TopicDelta topic_abs_delta(const EpochSet& subject, const TimeWindow& signal);

/// w_bio = 1, w_int = mean |ΔERP_Int| / mean |ΔERP_Bio| over the given
/// subjects. Throws DegenerateWeights when the Bio mean is zero.
TopicWeights weights_from_deltas(std::span<const TopicDelta> deltas);

/// Leave-one-subject-out estimate from the subjects in `others`: w_bio = 1,
/// w_int = mean_s |ΔERP_Int(s)| / mean_s |ΔERP_Bio(s)|. Throws
/// DegenerateWeights when the Bio mean is zero.
TopicWeights estimate_weights(std::span<const EpochSet> others, const TimeWindow& signal);

/// estimate_weights over every subject of the cohort except `held_out`.
TopicWeights loso_weights(std::span<const EpochSet> cohort, std::size_t held_out,
                          const TimeWindow& signal);

/// Same estimate from precomputed per-subject deltas.
TopicWeights loso_weights(std::span<const TopicDelta> deltas, std::size_t held_out);

/// Uniform: all ones. Weighted: per-topic weight. RandomShuffled: the
/// Weighted vector under a seeded uniform permutation.
WeightVector build_weight_vector(std::span<const TrialLabel> labels, const TopicWeights& w,
                                 Scheme scheme, RngSeed seed);

/// Inverse-CDF categorical sampler over a probability vector.
class CategoricalSampler {
 public:
  explicit CategoricalSampler(std::span<const double> probs);
  std::size_t draw(Rng& rng) const;
  std::size_t size() const { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
  std::size_t last_positive_ = 0;
};

/// Multinomial(k; probs) counts from k independent categorical draws.
std::vector<std::uint32_t> draw_counts(const WeightVector& wv, std::size_t k, RngSeed seed);
std::vector<std::uint32_t> draw_counts(const CategoricalSampler& sampler, std::size_t k,
                                       Rng& rng);

/// (1/k)·Σ_i counts_i·x_i over the slabs of `trials`. Throws
/// InvalidArgument when the counts do not sum to k or have the wrong length.
std::vector<double> sub_average(const Tensor3& trials, std::span<const std::uint32_t> counts,
                                std::size_t k);

struct BootstrapPlan {
  std::size_t k = 8;
  std::size_t L = 250;
  RngSeed seed{0};
  /// Draw each sentence type only from its own trials, L/2 per type.
  bool per_class = true;
};

struct AugmentedTrials {
  Tensor3 data;
  std::vector<TrialLabel> labels;
};

/// Augmented trial b of a class is drawn with seed derive_seed(plan.seed,
/// class, b); the output does not depend on evaluation order.
AugmentedTrials augment_trials(const Tensor3& trials, std::span<const TrialLabel> labels,
                               const WeightVector& wv, const BootstrapPlan& plan);

EpochSet augment(const EpochSet& e, const WeightVector& wv, const BootstrapPlan& plan);

}  // namespace neuroboot
