#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "neuroboot/bootstrap.hpp"
#include "neuroboot/stats.hpp"
#include "neuroboot/synthgen.hpp"

using namespace neuroboot;

namespace {

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.n_subjects = 3;
  cfg.n_trials_per_cell = 10;
  cfg.n_channels = 12;
  cfg.fs = 100.0;
  cfg.seed = RngSeed{11};
  return cfg;
}

// Mean over trials of one label cell, projected onto a spatial pattern.
std::vector<double> projected_cell_mean(const EpochSet& e, const std::vector<double>& pattern,
                                        TrialLabel label) {
  std::vector<double> out(e.n_samples(), 0.0);
  std::size_t n = 0;
  for (std::size_t i = 0; i < e.n_trials(); ++i) {
    if (!(e.labels()[i] == label)) continue;
    ++n;
    for (std::size_t c = 0; c < e.n_channels(); ++c) {
      for (std::size_t s = 0; s < e.n_samples(); ++s) out[s] += pattern[c] * e.data()(i, c, s);
    }
  }
  for (double& v : out) v /= static_cast<double>(n);
  return out;
}

double gauss(double t, double mu, double sigma) {
  return t < 0.0 ? 0.0 : std::exp(-0.5 * (t - mu) * (t - mu) / (sigma * sigma));
}

}  // namespace

TEST_CASE("generation is deterministic per subject") {
  const auto cfg = small_config();
  CHECK(generate_subject(cfg, 1) == generate_subject(cfg, 1));
  CHECK_FALSE(generate_subject(cfg, 0).data() == generate_subject(cfg, 1).data());
  const auto cohort = generate_cohort(cfg);
  REQUIRE(cohort.size() == 3);
  CHECK(cohort[2] == generate_subject(cfg, 2));
  CHECK(cohort[2].subject_id() == "sub-002");
}

TEST_CASE("trial layout") {
  const auto cfg = small_config();
  const auto e = generate_subject(cfg, 0);
  CHECK(e.n_trials() == 40);
  CHECK(e.n_channels() == 12);
  CHECK(e.n_samples() == 170);
  CHECK(e.t0() == doctest::Approx(-0.2));
  for (std::size_t i = 0; i < 40; ++i) CHECK(label_code(e.labels()[i]) == i / 10);
}

TEST_CASE("patterns are orthonormal") {
  auto cfg = small_config();
  cfg.spatial_rank = 5;
  const auto p = synth_patterns(cfg);
  REQUIRE(p.size() == 5);
  for (std::size_t a = 0; a < 5; ++a) {
    for (std::size_t b = 0; b < 5; ++b) {
      double dot = 0.0;
      for (std::size_t c = 0; c < cfg.n_channels; ++c) dot += p[a][c] * p[b][c];
      CHECK(dot == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("config validation") {
  auto cfg = small_config();
  CHECK_THROWS_AS(generate_subject(cfg, 3), InvalidArgument);
  cfg.effect_bio = -0.1;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = small_config();
  cfg.noise_sd = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = small_config();
  cfg.spatial_rank = 13;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = small_config();
  cfg.noise_ar1 = 1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("config JSON round trip keeps defaults for missing keys") {
  auto cfg = small_config();
  cfg.effect_int = 0.7;
  cfg.epoch_span = TimeWindow(-0.1, 0.8);
  const nlohmann::json j = cfg;
  const auto back = j.get<SynthConfig>();
  CHECK(nlohmann::json(back) == j);
  const auto partial = nlohmann::json{{"n_subjects", 4}}.get<SynthConfig>();
  CHECK(partial.n_subjects == 4);
  CHECK(partial.n_channels == 47);
  CHECK(partial.fs == 250.0);
}

TEST_CASE("baseline holds noise only") {
  auto cfg = small_config();
  cfg.noise_sd = 1.5;
  cfg.n_trials_per_cell = 25;
  const auto e = generate_subject(cfg, 0);
  const auto r = e.samples_in(TimeWindow(-0.2, 0.0));
  double sq = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < e.n_trials(); ++i) {
    for (std::size_t c = 0; c < e.n_channels(); ++c) {
      for (std::size_t s = r.first; s < r.last; ++s) {
        sq += e.data()(i, c, s) * e.data()(i, c, s);
        ++n;
      }
    }
  }
  CHECK(std::sqrt(sq / static_cast<double>(n)) == doctest::Approx(1.5).epsilon(0.02));
}

TEST_CASE("AR(1) noise keeps its marginal sd") {
  auto cfg = small_config();
  cfg.noise_ar1 = 0.6;
  cfg.n_trials_per_cell = 25;
  const auto e = generate_subject(cfg, 0);
  const auto r = e.samples_in(TimeWindow(-0.2, 0.0));
  double sq = 0.0;
  double lag = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < e.n_trials(); ++i) {
    for (std::size_t c = 0; c < e.n_channels(); ++c) {
      for (std::size_t s = r.first + 1; s < r.last; ++s) {
        sq += e.data()(i, c, s) * e.data()(i, c, s);
        lag += e.data()(i, c, s) * e.data()(i, c, s - 1);
        ++n;
      }
    }
  }
  CHECK(std::sqrt(sq / n) == doctest::Approx(1.0).epsilon(0.03));
  CHECK(lag / sq == doctest::Approx(0.6).epsilon(0.05));
}

TEST_CASE("noiseless limit separates the types by the effect at the peak") {
  auto cfg = small_config();
  cfg.noise_sd = 1e-9;
  cfg.effect_int = 0.8;
  const auto e = generate_subject(cfg, 1);
  const auto p = synth_patterns(cfg);
  const double scale = synth_subject_scale(cfg, 1);
  const auto peak = e.samples_in(TimeWindow(0.45, 0.46)).first;
  for (std::size_t r = 0; r < cfg.spatial_rank; ++r) {
    const auto t1 = projected_cell_mean(e, p[r], {Topic::Int, SentenceType::Type1});
    const auto t2 = projected_cell_mean(e, p[r], {Topic::Int, SentenceType::Type2});
    CHECK(t1[peak] - t2[peak] == doctest::Approx(0.8 * scale).epsilon(1e-6));
  }
  // Every single trial sits on the correct side with margin effect·scale.
  const auto t1 = projected_cell_mean(e, p[0], {Topic::Int, SentenceType::Type1});
  for (std::size_t i = 0; i < e.n_trials(); ++i) {
    if (e.labels()[i].topic != Topic::Int) continue;
    double v = 0.0;
    for (std::size_t c = 0; c < e.n_channels(); ++c) v += p[0][c] * e.data()(i, c, peak);
    const double expected = e.labels()[i].type == SentenceType::Type1 ? 0.0 : -0.8 * scale;
    CHECK(v - t1[peak] == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("null effect leaves no type difference") {
  auto cfg = small_config();
  cfg.effect_bio = 0.0;
  cfg.effect_int = 0.0;
  cfg.noise_sd = 1e-9;
  const auto e = generate_subject(cfg, 0);
  const auto p = synth_patterns(cfg);
  const auto a = projected_cell_mean(e, p[0], {Topic::Bio, SentenceType::Type1});
  const auto b = projected_cell_mean(e, p[0], {Topic::Bio, SentenceType::Type2});
  for (std::size_t s = 0; s < a.size(); ++s) CHECK(std::abs(a[s] - b[s]) < 1e-8);
}

TEST_CASE("grand average difference converges to effect times the bump factor") {
  auto cfg = small_config();
  cfg.n_trials_per_cell = 150;
  cfg.effect_bio = 0.5;
  const auto e = generate_subject(cfg, 2);
  const auto p = synth_patterns(cfg);
  const double scale = synth_subject_scale(cfg, 2);
  const auto w = e.samples_in(TimeWindow(0.3, 0.6));
  // Window mean of the bump at the sample times, computed directly.
  double factor = 0.0;
  for (std::size_t s = w.first; s < w.last; ++s) factor += gauss(e.time_of(s), 0.45, 0.15);
  factor /= static_cast<double>(w.size());
  for (std::size_t r = 0; r < cfg.spatial_rank; ++r) {
    const auto t1 = projected_cell_mean(e, p[r], {Topic::Bio, SentenceType::Type1});
    const auto t2 = projected_cell_mean(e, p[r], {Topic::Bio, SentenceType::Type2});
    double d = 0.0;
    for (std::size_t s = w.first; s < w.last; ++s) d += t1[s] - t2[s];
    d /= static_cast<double>(w.size());
    const double se = std::sqrt(2.0 / (150.0 * static_cast<double>(w.size())));
    CHECK(std::abs(d - 0.5 * scale * factor) < 3.0 * se);
  }
}

TEST_CASE("subject scale is lognormal with unit mean") {
  auto cfg = small_config();
  cfg.n_subjects = 4000;
  cfg.subject_jitter = 0.2;
  std::vector<double> logs;
  double sum = 0.0;
  for (std::size_t s = 0; s < cfg.n_subjects; ++s) {
    const double v = synth_subject_scale(cfg, s);
    sum += v;
    logs.push_back(std::log(v));
  }
  CHECK(sum / 4000.0 == doctest::Approx(1.0).epsilon(0.01));
  CHECK(standard_error(logs) * std::sqrt(4000.0) == doctest::Approx(0.2).epsilon(0.05));
}

TEST_CASE("topic delta ratio agrees with the committed Monte-Carlo fixture") {
  std::ifstream in(std::string(NEUROBOOT_FIXTURES) + "/weight_ci.json");
  REQUIRE(in);
  const auto fixture = nlohmann::json::parse(in).at("synth_ratio");
  SynthConfig cfg;
  cfg.n_subjects = 200;
  cfg.effect_bio = 0.3;
  cfg.effect_int = 0.9;
  cfg.noise_sd = 1.0;
  cfg.n_trials_per_cell = 40;
  cfg.seed = RngSeed{7};
  const TimeWindow win(0.3, 0.6);
  std::vector<double> r;
  for (std::size_t s = 0; s < 40; ++s) {
    const auto d = topic_abs_delta(generate_subject(cfg, s), win);
    r.push_back(d.intent / d.bio);
  }
  const double sd = fixture.at("sd_ratio").get<double>();
  CHECK(std::abs(mean(r) - fixture.at("mean_ratio").get<double>()) < 3.0 * sd / std::sqrt(40.0));
  CHECK(std::abs(fixture.at("mean_ratio").get<double>() - 3.0) <
        3.0 * fixture.at("se_ratio").get<double>());
}
