#pragma once

#include <cstddef>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "neuroboot/core.hpp"
#include "neuroboot/rng.hpp"

namespace neuroboot {

/// Synthetic two-topic, two-type ERP cohort.
///
/// Trial model, per channel c and sample time t:
///
///   x(c, t) = scale · Σ_r pattern_r(c) · [base_r(t) ± ½·effect_topic·bump(t)] + noise(c, t)
///
/// with + for Type1 and − for Type2. bump is a unit-peak Gaussian centred at
/// erp_latency_s with standard deviation erp_width_s, zero before onset.
/// base_r are shared (class-independent) Gaussian deflections. Patterns are
/// orthonormal and depend only on the seed, so every subject of a cohort
/// shares the same topographies; scale is lognormal per subject.
struct SynthConfig {
  std::size_t n_subjects = 20;
  std::size_t n_trials_per_cell = 40;
  std::size_t n_channels = 47;
  double fs = 250.0;
  TimeWindow epoch_span{-0.2, 1.5};
  double erp_latency_s = 0.45;
  double erp_width_s = 0.15;
  double effect_bio = 0.3;
  double effect_int = 0.9;
  double noise_sd = 1.0;
  /// AR(1) coefficient of the noise; 0 gives white noise. Marginal sd stays noise_sd.
  double noise_ar1 = 0.0;
  std::size_t spatial_rank = 3;
  /// Log-scale standard deviation of the per-subject amplitude factor.
  double subject_jitter = 0.2;
  /// Peak amplitude of the shared class-independent deflections.
  double base_amplitude = 1.0;
  RngSeed seed{7};

  /// Throws InvalidArgument on any violated invariant.
  void validate() const;

  std::size_t n_samples() const;
  double effect(Topic topic) const { return topic == Topic::Bio ? effect_bio : effect_int; }
};

void to_json(nlohmann::json& j, const SynthConfig& cfg);
/// Missing keys keep their defaults.
void from_json(const nlohmann::json& j, SynthConfig& cfg);

/// Cohort-wide spatial patterns, spatial_rank × n_channels, orthonormal rows.
std::vector<std::vector<double>> synth_patterns(const SynthConfig& cfg);

/// Unit-peak class-difference waveform at time t (seconds).
double synth_bump(const SynthConfig& cfg, double t);

/// Shared deflection of latent source r at time t, before subject scaling.
double synth_base(const SynthConfig& cfg, std::size_t r, double t);

/// Per-subject amplitude factor exp(jitter·z − jitter²/2); mean 1.
double synth_subject_scale(const SynthConfig& cfg, std::size_t subject_index);

/// 4·n_trials_per_cell trials ordered Bio/Type1, Bio/Type2, Int/Type1,
/// Int/Type2. Subject id is "sub-NNN".
EpochSet generate_subject(const SynthConfig& cfg, std::size_t subject_index);

std::vector<EpochSet> generate_cohort(const SynthConfig& cfg);

}  // namespace neuroboot
