#include "neuroboot/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "neuroboot/metrics.hpp"

namespace neuroboot {

const char* to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::Uniform:
      return "uniform";
    case Scheme::Weighted:
      return "weighted";
    case Scheme::RandomShuffled:
      return "shuffled";
  }
  return "?";
}

Scheme parse_scheme(const std::string& text) {
  if (text == "uniform") return Scheme::Uniform;
  if (text == "weighted") return Scheme::Weighted;
  if (text == "shuffled" || text == "random-shuffled") return Scheme::RandomShuffled;
  throw InvalidArgument("unknown bootstrap scheme '" + text + "'");
}

WeightVector::WeightVector(std::vector<double> weights, Scheme scheme)
    : weights_(std::move(weights)), scheme_(scheme) {
  double total = 0.0;
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0) {
      throw InvalidArgument("weights must be finite and non-negative");
    }
    total += w;
  }
  if (!(total > 0.0)) throw InvalidArgument("at least one weight must be positive");
  probs_.resize(weights_.size());
  for (std::size_t i = 0; i < weights_.size(); ++i) probs_[i] = weights_[i] / total;
}

WeightVector WeightVector::restricted(std::span<const std::size_t> indices) const {
  std::vector<double> w;
  w.reserve(indices.size());
  for (std::size_t i : indices) w.push_back(weights_.at(i));
  return WeightVector(std::move(w), scheme_);
}

TopicDelta topic_abs_delta(const EpochSet& subject, const TimeWindow& signal) {
  const auto bio = select_trials(subject, topic_is(Topic::Bio));
  const auto intent = select_trials(subject, topic_is(Topic::Int));
  return TopicDelta{std::abs(delta_erp(compute_erp(bio), signal, bio.fs(), bio.t0())),
                    std::abs(delta_erp(compute_erp(intent), signal, intent.fs(), intent.t0()))};
}

TopicWeights weights_from_deltas(std::span<const TopicDelta> deltas) {
  if (deltas.empty()) throw InvalidArgument("weight estimation needs at least one other subject");
  double sum_bio = 0.0;
  double sum_int = 0.0;
  for (const auto& d : deltas) {
    sum_bio += d.bio;
    sum_int += d.intent;
  }
  const double n = static_cast<double>(deltas.size());
  const double mean_bio = sum_bio / n;
  const double mean_int = sum_int / n;
  if (!(mean_bio > 0.0)) {
    throw DegenerateWeights("mean |dERP| of the Bio topic is zero; weight ratio undefined");
  }
  return TopicWeights{1.0, mean_int / mean_bio};
}

TopicWeights estimate_weights(std::span<const EpochSet> others, const TimeWindow& signal) {
  std::vector<TopicDelta> deltas;
  deltas.reserve(others.size());
  for (const auto& subject : others) deltas.push_back(topic_abs_delta(subject, signal));
  return weights_from_deltas(deltas);
}

TopicWeights loso_weights(std::span<const EpochSet> cohort, std::size_t held_out,
                          const TimeWindow& signal) {
  std::vector<TopicDelta> deltas;
  for (std::size_t s = 0; s < cohort.size(); ++s) {
    if (s != held_out) deltas.push_back(topic_abs_delta(cohort[s], signal));
  }
  return weights_from_deltas(deltas);
}

TopicWeights loso_weights(std::span<const TopicDelta> deltas, std::size_t held_out) {
  std::vector<TopicDelta> others;
  for (std::size_t s = 0; s < deltas.size(); ++s) {
    if (s != held_out) others.push_back(deltas[s]);
  }
  return weights_from_deltas(others);
}

WeightVector build_weight_vector(std::span<const TrialLabel> labels, const TopicWeights& w,
                                 Scheme scheme, RngSeed seed) {
  if (labels.empty()) throw InvalidArgument("weight vector needs at least one trial");
  std::vector<double> weights(labels.size(), 1.0);
  if (scheme != Scheme::Uniform) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      weights[i] = labels[i].topic == Topic::Bio ? w.bio : w.intent;
    }
  }
  if (scheme == Scheme::RandomShuffled) {
    Rng rng(seed);
    rng.shuffle(std::span<double>(weights));
  }
  return WeightVector(std::move(weights), scheme);
}

CategoricalSampler::CategoricalSampler(std::span<const double> probs) : cdf_(probs.size()) {
  if (probs.empty()) throw InvalidArgument("cannot sample from an empty distribution");
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    cdf_[i] = acc;
    if (probs[i] > 0.0) last_positive_ = i;
  }
}

std::size_t CategoricalSampler::draw(Rng& rng) const {
  const double u = rng.uniform() * cdf_.back();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const auto idx = static_cast<std::size_t>(it - cdf_.begin());
  return std::min(idx, last_positive_);
}

std::vector<std::uint32_t> draw_counts(const CategoricalSampler& sampler, std::size_t k,
                                       Rng& rng) {
  std::vector<std::uint32_t> counts(sampler.size(), 0);
  for (std::size_t j = 0; j < k; ++j) ++counts[sampler.draw(rng)];
  return counts;
}

std::vector<std::uint32_t> draw_counts(const WeightVector& wv, std::size_t k, RngSeed seed) {
  Rng rng(seed);
  return draw_counts(CategoricalSampler(wv.probs()), k, rng);
}

std::vector<double> sub_average(const Tensor3& trials, std::span<const std::uint32_t> counts,
                                std::size_t k) {
  if (counts.size() != trials.n()) {
    throw InvalidArgument("count vector length does not match the number of trials");
  }
  const auto total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (k == 0 || total != k) throw InvalidArgument("counts must sum to k >= 1");
  std::vector<double> out(trials.slab_size(), 0.0);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    const double n = counts[i];
    const auto x = trials.slab(i);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += n * x[j];
  }
  const double inv = static_cast<double>(k);
  for (double& v : out) v /= inv;
  return out;
}

namespace {

template <typename Get>
std::uint8_t majority(std::span<const std::size_t> pool, std::span<const std::uint32_t> counts,
                      Get get) {
  std::uint32_t ones = 0;
  std::uint32_t total = 0;
  for (std::size_t j = 0; j < pool.size(); ++j) {
    total += counts[j];
    if (get(pool[j]) != 0) ones += counts[j];
  }
  return 2 * ones > total ? 1 : 0;
}

void fill_from_pool(const Tensor3& trials, std::span<const TrialLabel> labels,
                    std::span<const std::size_t> pool, const WeightVector& wv,
                    const BootstrapPlan& plan, std::uint64_t stream, std::size_t n_out,
                    std::size_t offset, AugmentedTrials& out) {
  const WeightVector local = wv.restricted(pool);
  const CategoricalSampler sampler(local.probs());
  const std::size_t slab = trials.slab_size();
  const double k = static_cast<double>(plan.k);
  for (std::size_t b = 0; b < n_out; ++b) {
    Rng rng(derive_seed(plan.seed, stream, b));
    const auto counts = draw_counts(sampler, plan.k, rng);
    auto dst = out.data.slab(offset + b);
    std::fill(dst.begin(), dst.end(), 0.0);
    for (std::size_t j = 0; j < pool.size(); ++j) {
      if (counts[j] == 0) continue;
      const double n = counts[j];
      const auto x = trials.slab(pool[j]);
      for (std::size_t q = 0; q < slab; ++q) dst[q] += n * x[q];
    }
    for (double& v : dst) v /= k;
    const auto topic = majority(pool, counts, [&](std::size_t i) {
      return static_cast<int>(labels[i].topic);
    });
    const auto type = majority(pool, counts, [&](std::size_t i) {
      return static_cast<int>(labels[i].type);
    });
    out.labels[offset + b] = TrialLabel{static_cast<Topic>(topic), static_cast<SentenceType>(type)};
  }
}

}  // namespace

AugmentedTrials augment_trials(const Tensor3& trials, std::span<const TrialLabel> labels,
                               const WeightVector& wv, const BootstrapPlan& plan) {
  if (plan.k < 1) throw InvalidArgument("sub-average size k must be >= 1");
  if (plan.L < 1) throw InvalidArgument("number of augmented trials L must be >= 1");
  if (labels.size() != trials.n() || wv.size() != trials.n()) {
    throw InvalidArgument("labels, weights and trials disagree in length");
  }
  AugmentedTrials out{Tensor3(plan.L, trials.rows(), trials.cols()),
                      std::vector<TrialLabel>(plan.L)};
  if (!plan.per_class) {
    std::vector<std::size_t> pool(trials.n());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    fill_from_pool(trials, labels, pool, wv, plan, 2, plan.L, 0, out);
    return out;
  }
  if (plan.L % 2 != 0) throw InvalidArgument("per-class augmentation needs an even L");
  const std::size_t half = plan.L / 2;
  for (std::uint8_t t = 0; t < 2; ++t) {
    const auto type = static_cast<SentenceType>(t);
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i].type == type) pool.push_back(i);
    }
    if (pool.empty()) {
      throw InvalidArgument(std::string("no source trials of ") + to_string(type));
    }
    fill_from_pool(trials, labels, pool, wv, plan, t, half, t * half, out);
  }
  return out;
}

EpochSet augment(const EpochSet& e, const WeightVector& wv, const BootstrapPlan& plan) {
  auto out = augment_trials(e.data(), e.labels(), wv, plan);
  return EpochSet(e.subject_id(), e.fs(), e.t0(), std::move(out.labels), std::move(out.data));
}

}  // namespace neuroboot
