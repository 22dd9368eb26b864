#include "neuroboot/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace neuroboot {

DegenerateBaseline::DegenerateBaseline(std::size_t trial, std::size_t channel)
    : Error("baseline has zero variance at trial " + std::to_string(trial) + ", channel " +
            std::to_string(channel)),
      trial_(trial),
      channel_(channel) {}

EpochSet baseline_zscore(const EpochSet& e, const TimeWindow& baseline) {
  const SampleRange range = e.samples_in(baseline);
  if (range.size() < 2) {
    throw InvalidArgument("baseline window must cover at least 2 samples");
  }
  Tensor3 out(e.n_trials(), e.n_channels(), e.n_samples());
  const double n = static_cast<double>(range.size());
  for (std::size_t i = 0; i < e.n_trials(); ++i) {
    for (std::size_t c = 0; c < e.n_channels(); ++c) {
      double mean = 0.0;
      for (std::size_t s = range.first; s < range.last; ++s) mean += e.data()(i, c, s);
      mean /= n;
      double ss = 0.0;
      for (std::size_t s = range.first; s < range.last; ++s) {
        const double d = e.data()(i, c, s) - mean;
        ss += d * d;
      }
      const double sd = std::sqrt(ss / (n - 1.0));
      if (!(sd > 0.0)) throw DegenerateBaseline(i, c);
      for (std::size_t s = 0; s < e.n_samples(); ++s) {
        out(i, c, s) = (e.data()(i, c, s) - mean) / sd;
      }
    }
  }
  return EpochSet(e.subject_id(), e.fs(), e.t0(), e.labels(), std::move(out));
}

std::vector<Biquad> butterworth_lowpass(int order, double cutoff_hz, double fs) {
  if (order < 2 || order % 2 != 0) throw InvalidArgument("filter order must be even and >= 2");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < fs / 2.0)) {
    throw InvalidArgument("cutoff must lie strictly between 0 and fs/2");
  }
  // Prewarped analog cutoff with the bilinear constant 2·fs folded in.
  const double warped = std::tan(std::numbers::pi * cutoff_hz / fs);
  std::vector<Biquad> sections;
  for (int k = 0; k < order / 2; ++k) {
    const double angle =
        std::numbers::pi * static_cast<double>(2 * k + order + 1) / (2.0 * order);
    const std::complex<double> s_pole = warped * std::polar(1.0, angle);
    const std::complex<double> z_pole = (1.0 + s_pole) / (1.0 - s_pole);
    Biquad q;
    q.a = {1.0, -2.0 * z_pole.real(), std::norm(z_pole)};
    const double gain = (q.a[0] + q.a[1] + q.a[2]) / 4.0;
    q.b = {gain, 2.0 * gain, gain};
    sections.push_back(q);
  }
  return sections;
}

double squared_magnitude(std::span<const Biquad> sections, double f_hz, double fs) {
  const std::complex<double> z1 = std::polar(1.0, -2.0 * std::numbers::pi * f_hz / fs);
  const std::complex<double> z2 = z1 * z1;
  double mag2 = 1.0;
  for (const auto& q : sections) {
    const auto num = q.b[0] + q.b[1] * z1 + q.b[2] * z2;
    const auto den = q.a[0] + q.a[1] * z1 + q.a[2] * z2;
    mag2 *= std::norm(num / den);
  }
  return mag2;
}

namespace {

// Direct form II transposed, initial state at the steady state of a
// constant input equal to x[0].
void sosfilt_steady(std::span<const Biquad> sections, std::vector<double>& x) {
  if (x.empty()) return;
  double level = x.front();
  for (const auto& q : sections) {
    const double g = (q.b[0] + q.b[1] + q.b[2]) / (q.a[0] + q.a[1] + q.a[2]);
    const double out_level = g * level;
    double z2 = q.b[2] * level - q.a[2] * out_level;
    double z1 = q.b[1] * level - q.a[1] * out_level + z2;
    for (double& v : x) {
      const double in = v;
      const double y = q.b[0] * in + z1;
      z1 = q.b[1] * in - q.a[1] * y + z2;
      z2 = q.b[2] * in - q.a[2] * y;
      v = y;
    }
    level = out_level;
  }
}

}  // namespace

std::vector<double> filtfilt(std::span<const Biquad> sections, std::span<const double> x,
                             std::size_t pad) {
  const std::size_t n = x.size();
  if (n <= pad) throw InvalidArgument("signal is not longer than the filter padding");
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  sosfilt_steady(sections, ext);
  std::reverse(ext.begin(), ext.end());
  sosfilt_steady(sections, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

EpochSet lowpass_zerophase(const EpochSet& e, const FilterSpec& spec) {
  const auto sections = butterworth_lowpass(spec.order, spec.cutoff_hz, e.fs());
  const std::size_t pad = 3 * static_cast<std::size_t>(spec.order);
  if (e.n_samples() <= pad) {
    throw InvalidArgument("epoch of " + std::to_string(e.n_samples()) +
                          " samples is too short for padding of " + std::to_string(pad));
  }
  Tensor3 out(e.n_trials(), e.n_channels(), e.n_samples());
  const std::size_t ns = e.n_samples();
  for (std::size_t i = 0; i < e.n_trials(); ++i) {
    const auto src = e.trial(i);
    auto dst = out.slab(i);
    for (std::size_t c = 0; c < e.n_channels(); ++c) {
      const auto y = filtfilt(sections, src.subspan(c * ns, ns), pad);
      std::copy(y.begin(), y.end(), dst.begin() + static_cast<std::ptrdiff_t>(c * ns));
    }
  }
  return EpochSet(e.subject_id(), e.fs(), e.t0(), e.labels(), std::move(out));
}

EpochSet downsample(const EpochSet& e, std::size_t factor) {
  if (factor == 0) throw InvalidArgument("downsample factor must be >= 1");
  const std::size_t ns = e.n_samples() / factor;
  if (ns == 0) throw InvalidArgument("downsample factor exceeds the epoch length");
  Tensor3 out(e.n_trials(), e.n_channels(), ns);
  for (std::size_t i = 0; i < e.n_trials(); ++i) {
    for (std::size_t c = 0; c < e.n_channels(); ++c) {
      for (std::size_t s = 0; s < ns; ++s) out(i, c, s) = e.data()(i, c, s * factor);
    }
  }
  return EpochSet(e.subject_id(), e.fs() / static_cast<double>(factor), e.t0(), e.labels(),
                  std::move(out));
}

}  // namespace neuroboot
