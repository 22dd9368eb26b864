#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "neuroboot/core.hpp"

namespace neuroboot {

class DegenerateBaseline : public Error {
 public:
  DegenerateBaseline(std::size_t trial, std::size_t channel);
  std::size_t trial() const { return trial_; }
  std::size_t channel() const { return channel_; }

 private:
  std::size_t trial_;
  std::size_t channel_;
};

/// Per trial and channel: (x − mean_baseline) / sd_baseline, sd with n−1.
EpochSet baseline_zscore(const EpochSet& e, const TimeWindow& baseline);

enum class FilterKind { Lowpass };

struct FilterSpec {
  double cutoff_hz = 20.0;
  /// Even Butterworth order of a single pass.
  int order = 4;
  FilterKind kind = FilterKind::Lowpass;
};

/// Second-order section, a0 == 1.
struct Biquad {
  std::array<double, 3> b{};
  std::array<double, 3> a{1.0, 0.0, 0.0};
};

/// Digital Butterworth lowpass via the bilinear transform with prewarping,
/// as order/2 cascaded sections with unit DC gain.
std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz, double fs);

/// |H(f)|² of the cascade, evaluated on the unit circle.
double squared_magnitude(std::span<const Biquad> sections, double f_hz, double fs);

/// Forward-backward filtering of one series with odd-symmetric extension of
/// `pad` samples per side and steady-state initial conditions.
std::vector<double> filtfilt(std::span<const Biquad> sections, std::span<const double> x,
                             std::size_t pad);

/// Zero-phase Butterworth lowpass per trial and channel. Padding is
/// 3 × order samples per side; throws InvalidArgument when the epoch is
/// not longer than the padding.
EpochSet lowpass_zerophase(const EpochSet& e, const FilterSpec& spec);

/// Keeps samples 0, f, 2f, ...; tail samples that do not fill a full
/// factor are dropped. fs becomes fs / factor, t0 is unchanged.
EpochSet downsample(const EpochSet& e, std::size_t factor);

}  // namespace neuroboot
