#include "neuroboot/synthgen.hpp"

#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>

namespace neuroboot {

namespace {

enum Stream : std::uint64_t { kPatterns = 1, kScale = 2, kNoise = 3 };

double gaussian_pulse(double t, double center, double width) {
  if (t < 0.0) return 0.0;
  const double z = (t - center) / width;
  return std::exp(-0.5 * z * z);
}

}  // namespace

void SynthConfig::validate() const {
  if (n_subjects < 1) throw InvalidArgument("n_subjects must be >= 1");
  if (n_trials_per_cell < 1) throw InvalidArgument("n_trials_per_cell must be >= 1");
  if (n_channels < 1) throw InvalidArgument("n_channels must be >= 1");
  if (!(fs > 0.0)) throw InvalidArgument("fs must be > 0");
  if (!(epoch_span.start_s < epoch_span.end_s)) throw InvalidArgument("empty epoch span");
  if (!(erp_width_s > 0.0)) throw InvalidArgument("erp_width_s must be > 0");
  if (!(effect_bio >= 0.0) || !(effect_int >= 0.0)) {
    throw InvalidArgument("effect sizes must be >= 0");
  }
  if (!(noise_sd > 0.0)) throw InvalidArgument("noise_sd must be > 0");
  if (!(noise_ar1 > -1.0 && noise_ar1 < 1.0)) throw InvalidArgument("noise_ar1 must be in (-1, 1)");
  if (spatial_rank < 1 || spatial_rank > n_channels) {
    throw InvalidArgument("spatial_rank must be in [1, n_channels]");
  }
  if (!(subject_jitter >= 0.0)) throw InvalidArgument("subject_jitter must be >= 0");
  if (n_samples() < 1) throw InvalidArgument("epoch span shorter than one sample");
}

std::size_t SynthConfig::n_samples() const {
  return static_cast<std::size_t>(std::llround((epoch_span.end_s - epoch_span.start_s) * fs));
}

void to_json(nlohmann::json& j, const SynthConfig& cfg) {
  j = nlohmann::json{{"n_subjects", cfg.n_subjects},
                     {"n_trials_per_cell", cfg.n_trials_per_cell},
                     {"n_channels", cfg.n_channels},
                     {"fs", cfg.fs},
                     {"epoch_span", {cfg.epoch_span.start_s, cfg.epoch_span.end_s}},
                     {"erp_latency_s", cfg.erp_latency_s},
                     {"erp_width_s", cfg.erp_width_s},
                     {"effect_bio", cfg.effect_bio},
                     {"effect_int", cfg.effect_int},
                     {"noise_sd", cfg.noise_sd},
                     {"noise_ar1", cfg.noise_ar1},
                     {"spatial_rank", cfg.spatial_rank},
                     {"subject_jitter", cfg.subject_jitter},
                     {"base_amplitude", cfg.base_amplitude},
                     {"seed", cfg.seed.value}};
}

void from_json(const nlohmann::json& j, SynthConfig& cfg) {
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("n_subjects", cfg.n_subjects);
  get("n_trials_per_cell", cfg.n_trials_per_cell);
  get("n_channels", cfg.n_channels);
  get("fs", cfg.fs);
  if (j.contains("epoch_span")) {
    const auto span = j.at("epoch_span").get<std::vector<double>>();
    if (span.size() != 2) throw InvalidArgument("epoch_span must be [start, end]");
    cfg.epoch_span = TimeWindow(span[0], span[1]);
  }
  get("erp_latency_s", cfg.erp_latency_s);
  get("erp_width_s", cfg.erp_width_s);
  get("effect_bio", cfg.effect_bio);
  get("effect_int", cfg.effect_int);
  get("noise_sd", cfg.noise_sd);
  get("noise_ar1", cfg.noise_ar1);
  get("spatial_rank", cfg.spatial_rank);
  get("subject_jitter", cfg.subject_jitter);
  get("base_amplitude", cfg.base_amplitude);
  get("seed", cfg.seed.value);
}

std::vector<std::vector<double>> synth_patterns(const SynthConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, kPatterns));
  const std::size_t n = cfg.n_channels;
  std::vector<std::vector<double>> patterns;
  patterns.reserve(cfg.spatial_rank);
  while (patterns.size() < cfg.spatial_rank) {
    // The first pattern is a broad positive topography so that channel
    // averages keep a non-zero share of the class difference.
    std::vector<double> v(n);
    const double offset = patterns.empty() ? 1.0 : 0.0;
    for (auto& x : v) x = offset + (patterns.empty() ? 0.5 : 1.0) * rng.normal();
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& p : patterns) {
        double dot = 0.0;
        for (std::size_t c = 0; c < n; ++c) dot += v[c] * p[c];
        for (std::size_t c = 0; c < n; ++c) v[c] -= dot * p[c];
      }
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-8) continue;
    for (auto& x : v) x /= norm;
    patterns.push_back(std::move(v));
  }
  return patterns;
}

double synth_bump(const SynthConfig& cfg, double t) {
  return gaussian_pulse(t, cfg.erp_latency_s, cfg.erp_width_s);
}

double synth_base(const SynthConfig& cfg, std::size_t r, double t) {
  const double latency = 0.1 + 0.12 * static_cast<double>(r % 8);
  const double sign = (r % 2 == 0) ? 1.0 : -1.0;
  return sign * cfg.base_amplitude * gaussian_pulse(t, latency, 0.05);
}

double synth_subject_scale(const SynthConfig& cfg, std::size_t subject_index) {
  Rng rng(derive_seed(cfg.seed, kScale, subject_index));
  const double s = cfg.subject_jitter;
  return std::exp(s * rng.normal() - 0.5 * s * s);
}

EpochSet generate_subject(const SynthConfig& cfg, std::size_t subject_index) {
  cfg.validate();
  if (subject_index >= cfg.n_subjects) {
    throw InvalidArgument("subject_index out of range for the cohort");
  }
  const std::size_t n_ch = cfg.n_channels;
  const std::size_t n_s = cfg.n_samples();
  const std::size_t per_cell = cfg.n_trials_per_cell;
  const auto patterns = synth_patterns(cfg);
  const double scale = synth_subject_scale(cfg, subject_index);
  const double t0 = cfg.epoch_span.start_s;

  // Class-independent and class-difference parts, both channels × samples.
  std::vector<double> base(n_ch * n_s, 0.0);
  std::vector<double> diff(n_ch * n_s, 0.0);
  for (std::size_t s = 0; s < n_s; ++s) {
    const double t = t0 + static_cast<double>(s) / cfg.fs;
    const double bump = synth_bump(cfg, t);
    for (std::size_t r = 0; r < cfg.spatial_rank; ++r) {
      const double b = synth_base(cfg, r, t);
      for (std::size_t c = 0; c < n_ch; ++c) {
        base[c * n_s + s] += scale * patterns[r][c] * b;
        diff[c * n_s + s] += scale * patterns[r][c] * bump;
      }
    }
  }

  Tensor3 data(4 * per_cell, n_ch, n_s);
  std::vector<TrialLabel> labels;
  labels.reserve(4 * per_cell);
  Rng rng(derive_seed(cfg.seed, kNoise, subject_index));
  const double phi = cfg.noise_ar1;
  const double innovation_sd = cfg.noise_sd * std::sqrt(1.0 - phi * phi);
  std::size_t trial = 0;
  for (std::uint8_t code = 0; code < 4; ++code) {
    const TrialLabel label = label_from_code(code);
    const double sign = label.type == SentenceType::Type1 ? 0.5 : -0.5;
    const double amp = sign * cfg.effect(label.topic);
    for (std::size_t i = 0; i < per_cell; ++i, ++trial) {
      labels.push_back(label);
      auto slab = data.slab(trial);
      for (std::size_t c = 0; c < n_ch; ++c) {
        double prev = cfg.noise_sd * rng.normal();
        for (std::size_t s = 0; s < n_s; ++s) {
          const double noise = s == 0 ? prev : phi * prev + innovation_sd * rng.normal();
          prev = noise;
          const std::size_t k = c * n_s + s;
          slab[k] = base[k] + amp * diff[k] + noise;
        }
      }
    }
  }
  char id[32];
  std::snprintf(id, sizeof id, "sub-%03zu", subject_index);
  return EpochSet(id, cfg.fs, t0, std::move(labels), std::move(data));
}

std::vector<EpochSet> generate_cohort(const SynthConfig& cfg) {
  std::vector<EpochSet> cohort;
  cohort.reserve(cfg.n_subjects);
  for (std::size_t i = 0; i < cfg.n_subjects; ++i) cohort.push_back(generate_subject(cfg, i));
  return cohort;
}

}  // namespace neuroboot
