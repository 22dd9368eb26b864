#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "domain_oracles.hpp"
#include "helpers.hpp"
#include "neuroboot/bootstrap.hpp"

using namespace neuroboot;

namespace {

std::vector<TrialLabel> bi_labels(std::size_t per_cell) {
  std::vector<TrialLabel> labels;
  for (std::uint8_t code = 0; code < 4; ++code) {
    for (std::size_t i = 0; i < per_cell; ++i) labels.push_back(label_from_code(code));
  }
  return labels;
}

}  // namespace

TEST_CASE("scheme names") {
  CHECK(parse_scheme("weighted") == Scheme::Weighted);
  CHECK(parse_scheme("random-shuffled") == Scheme::RandomShuffled);
  CHECK(std::string(to_string(parse_scheme("shuffled"))) == "shuffled");
  CHECK_THROWS_AS(parse_scheme("bogus"), InvalidArgument);
}

TEST_CASE("weight vector normalisation and errors") {
  const WeightVector wv({1.0, 1.0, 3.0, 3.0}, Scheme::Weighted);
  CHECK(wv.probs()[0] == doctest::Approx(0.125));
  CHECK(wv.probs()[3] == doctest::Approx(0.375));
  const std::size_t idx[] = {1, 2};
  const auto sub = wv.restricted(idx);
  CHECK(sub.probs()[0] == doctest::Approx(0.25));
  CHECK_THROWS_AS(WeightVector({1.0, -1.0}, Scheme::Weighted), InvalidArgument);
  CHECK_THROWS_AS(WeightVector({0.0, 0.0}, Scheme::Weighted), InvalidArgument);
  CHECK_THROWS_AS(WeightVector({1.0, std::nan("")}, Scheme::Weighted), InvalidArgument);
}

TEST_CASE("categorical sampler frequencies") {
  const std::vector<double> probs{0.125, 0.125, 0.375, 0.375};
  const CategoricalSampler sampler(probs);
  Rng rng(RngSeed{3});
  std::vector<int> counts(4, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[sampler.draw(rng)];
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(counts[i] / double(n) - probs[i]) < 0.01);
}

TEST_CASE("zero-probability entries are never drawn") {
  const std::vector<double> probs{0.0, 0.5, 0.0, 0.5, 0.0};
  const CategoricalSampler sampler(probs);
  Rng rng(RngSeed{5});
  for (int i = 0; i < 20000; ++i) {
    const auto k = sampler.draw(rng);
    CHECK((k == 1 || k == 3));
  }
}

TEST_CASE("draw counts sum to k and are reproducible") {
  const WeightVector wv({1.0, 2.0, 3.0}, Scheme::Weighted);
  const auto a = draw_counts(wv, 16, RngSeed{8});
  CHECK(std::accumulate(a.begin(), a.end(), 0u) == 16u);
  CHECK(draw_counts(wv, 16, RngSeed{8}) == a);
}

TEST_CASE("sub-average matches the materialised list oracle") {
  Rng rng(RngSeed{17});
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rng.below(30);
    const std::size_t k = 1 + rng.below(16);
    Tensor3 trials(n, 1 + rng.below(4), 1 + rng.below(9));
    for (double& v : trials.values()) v = rng.normal() * 10.0;
    std::vector<double> w(n);
    for (double& v : w) v = rng.uniform() + 0.01;
    const auto counts = draw_counts(WeightVector(w, Scheme::Weighted), k, RngSeed{rng.next_u64()});
    const auto got = sub_average(trials, counts, k);
    const auto want = nbtest::materialised_average(trials, counts);
    for (std::size_t j = 0; j < got.size(); ++j) CHECK(std::abs(got[j] - want[j]) <= 1e-12);
  }
  Tensor3 t(3, 1, 2, 1.0);
  const std::vector<std::uint32_t> bad{1, 1, 1};
  CHECK_THROWS_AS(sub_average(t, bad, 2), InvalidArgument);
  const std::vector<std::uint32_t> short_counts{1, 1};
  CHECK_THROWS_AS(sub_average(t, short_counts, 2), InvalidArgument);
  // k = 1 returns one trial unchanged.
  const std::vector<std::uint32_t> one{0, 1, 0};
  CHECK(sub_average(t, one, 1) == std::vector<double>{1.0, 1.0});
}

TEST_CASE("topic weights from dERP magnitudes") {
  const std::vector<TopicDelta> d{{0.1, 0.3}, {0.2, 0.6}, {0.3, 0.3}};
  const auto w = weights_from_deltas(d);
  CHECK(w.bio == 1.0);
  CHECK(w.intent == doctest::Approx(1.2 / 0.6));
  const auto loso = loso_weights(d, 2);
  CHECK(loso.intent == doctest::Approx(0.9 / 0.3));
  const std::vector<TopicDelta> zero{{0.0, 0.5}, {0.0, 0.1}};
  CHECK_THROWS_AS(weights_from_deltas(zero), DegenerateWeights);
  CHECK_THROWS_AS(weights_from_deltas({}), InvalidArgument);
}

TEST_CASE("weights estimated from epoch sets leave the held-out subject out") {
  std::vector<EpochSet> cohort;
  for (std::uint64_t s = 0; s < 4; ++s) {
    cohort.push_back(nbtest::noise_epochs(4, 2, 30, 100.0, -0.2, s + 1, "s" + std::to_string(s)));
  }
  const TimeWindow win(0.0, 0.1);
  std::vector<TopicDelta> d;
  for (const auto& e : cohort) d.push_back(topic_abs_delta(e, win));
  for (std::size_t h = 0; h < 4; ++h) {
    const auto a = loso_weights(cohort, h, win);
    const auto b = loso_weights(d, h);
    CHECK(a.intent == doctest::Approx(b.intent));
    const std::span<const EpochSet> others(cohort);
    if (h == 0) CHECK(estimate_weights(others.subspan(1), win).intent == doctest::Approx(a.intent));
  }
}

TEST_CASE("weight vectors per scheme") {
  const auto labels = bi_labels(3);
  const TopicWeights w{1.0, 3.0};
  const auto u = build_weight_vector(labels, w, Scheme::Uniform, RngSeed{1});
  for (double x : u.weights()) CHECK(x == 1.0);
  const auto wt = build_weight_vector(labels, w, Scheme::Weighted, RngSeed{1});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    CHECK(wt.weights()[i] == (labels[i].topic == Topic::Int ? 3.0 : 1.0));
  }
  const auto sh = build_weight_vector(labels, w, Scheme::RandomShuffled, RngSeed{1});
  auto a = sh.weights();
  auto b = wt.weights();
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);
  CHECK(sh.weights() != wt.weights());
  CHECK(build_weight_vector(labels, w, Scheme::RandomShuffled, RngSeed{1}).weights() == sh.weights());
}

TEST_CASE("weighted draws favour the informative topic") {
  const auto labels = bi_labels(10);
  const auto wv = build_weight_vector(labels, {1.0, 3.0}, Scheme::Weighted, RngSeed{0});
  const auto c = draw_counts(wv, 40000, RngSeed{6});
  double intent = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) intent += labels[i].topic == Topic::Int ? c[i] : 0;
  CHECK(intent / 40000.0 == doctest::Approx(0.75).epsilon(0.02));
}

TEST_CASE("per-class augmentation") {
  const auto e = nbtest::noise_epochs(5, 2, 6);
  const auto wv = build_weight_vector(e.labels(), {1.0, 2.0}, Scheme::Weighted, RngSeed{0});
  BootstrapPlan plan{4, 10, RngSeed{12}, true};
  const auto out = augment_trials(e.data(), e.labels(), wv, plan);
  REQUIRE(out.labels.size() == 10);
  for (std::size_t b = 0; b < 10; ++b) {
    CHECK(out.labels[b].type == (b < 5 ? SentenceType::Type1 : SentenceType::Type2));
  }
  // Trial b of a class depends only on (seed, class, b).
  plan.L = 20;
  const auto longer = augment_trials(e.data(), e.labels(), wv, plan);
  for (std::size_t b = 0; b < 5; ++b) {
    for (std::size_t j = 0; j < 12; ++j) {
      CHECK(longer.data.slab(b)[j] == out.data.slab(b)[j]);
      CHECK(longer.data.slab(10 + b)[j] == out.data.slab(5 + b)[j]);
    }
  }
  // Each Type1 output is the oracle average of draws from the Type1 pool.
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < e.n_trials(); ++i) {
    if (e.labels()[i].type == SentenceType::Type1) pool.push_back(i);
  }
  const auto local = wv.restricted(pool);
  Rng rng(derive_seed(RngSeed{12}, 0, 3));
  const auto counts = draw_counts(CategoricalSampler(local.probs()), 4, rng);
  std::vector<std::uint32_t> full(e.n_trials(), 0);
  for (std::size_t j = 0; j < pool.size(); ++j) full[pool[j]] = counts[j];
  const auto want = nbtest::materialised_average(e.data(), full);
  for (std::size_t j = 0; j < 12; ++j) CHECK(out.data.slab(3)[j] == doctest::Approx(want[j]).epsilon(1e-12));

  plan.L = 9;
  CHECK_THROWS_AS(augment_trials(e.data(), e.labels(), wv, plan), InvalidArgument);
  plan.L = 10;
  plan.k = 0;
  CHECK_THROWS_AS(augment_trials(e.data(), e.labels(), wv, plan), InvalidArgument);
  const auto t1 = select_trials(e, type_is(SentenceType::Type1));
  const auto wv1 = build_weight_vector(t1.labels(), {}, Scheme::Uniform, RngSeed{0});
  plan.k = 2;
  CHECK_THROWS_AS(augment_trials(t1.data(), t1.labels(), wv1, plan), InvalidArgument);
}

TEST_CASE("pooled augmentation takes majority labels") {
  const auto e = nbtest::noise_epochs(3, 1, 4);
  const auto wv = build_weight_vector(e.labels(), {}, Scheme::Uniform, RngSeed{0});
  const auto out = augment(e, wv, BootstrapPlan{1, 30, RngSeed{2}, false});
  CHECK(out.n_trials() == 30);
  // With k = 1 each output is a copy of a source trial and keeps its label.
  for (std::size_t b = 0; b < 30; ++b) {
    bool found = false;
    for (std::size_t i = 0; i < e.n_trials() && !found; ++i) {
      found = std::equal(e.trial(i).begin(), e.trial(i).end(), out.trial(b).begin()) &&
              e.labels()[i] == out.labels()[b];
    }
    CHECK(found);
  }
}
