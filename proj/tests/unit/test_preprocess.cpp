#include <cmath>
#include <numbers>

#include "doctest.h"
#include "helpers.hpp"
#include "neuroboot/experiment.hpp"
#include "neuroboot/preprocess.hpp"

using namespace neuroboot;

namespace {

// Analytic |H|² of an order-n digital Butterworth lowpass designed with the
// prewarped bilinear transform.
double butter_sq(int order, double fc, double fs, double f) {
  const double ratio = std::tan(std::numbers::pi * f / fs) / std::tan(std::numbers::pi * fc / fs);
  return 1.0 / (1.0 + std::pow(ratio, 2 * order));
}

}  // namespace

TEST_CASE("Butterworth magnitude matches the analytic response") {
  for (int order : {2, 4, 6}) {
    for (double fc : {5.0, 20.0, 40.0}) {
      const auto sos = butterworth_lowpass(order, fc, 250.0);
      CHECK(sos.size() == static_cast<std::size_t>(order / 2));
      for (double f : {0.0, 1.0, fc / 2, fc, 1.5 * fc, 60.0, 100.0, 124.0}) {
        CHECK(squared_magnitude(sos, f, 250.0) ==
              doctest::Approx(butter_sq(order, fc, 250.0, f)).epsilon(1e-9).scale(1e-12));
      }
      CHECK(squared_magnitude(sos, fc, 250.0) == doctest::Approx(0.5).epsilon(1e-10));
    }
  }
  CHECK_THROWS_AS(butterworth_lowpass(3, 20.0, 250.0), InvalidArgument);
  CHECK_THROWS_AS(butterworth_lowpass(4, 125.0, 250.0), InvalidArgument);
  CHECK_THROWS_AS(butterworth_lowpass(4, 0.0, 250.0), InvalidArgument);
}

TEST_CASE("filtfilt keeps constants and has zero phase") {
  const auto sos = butterworth_lowpass(4, 20.0, 250.0);
  std::vector<double> flat(200, 3.25);
  for (double v : filtfilt(sos, flat, 12)) CHECK(v == doctest::Approx(3.25).epsilon(1e-10));

  // A sinusoid comes out scaled by |H|² and unshifted away from the edges.
  const double f = 15.0;
  std::vector<double> x(2000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(2.0 * std::numbers::pi * f * i / 250.0);
  const auto y = filtfilt(sos, x, 12);
  const double gain = butter_sq(4, 20.0, 250.0, f);
  for (std::size_t i = 800; i < 1200; ++i) CHECK(y[i] == doctest::Approx(gain * x[i]).scale(1e-6));
}

TEST_CASE("filtfilt commutes with time reversal and is linear") {
  const auto sos = butterworth_lowpass(4, 10.0, 100.0);
  Rng rng(RngSeed{4});
  std::vector<double> a(600);
  std::vector<double> b(600);
  for (auto& v : a) v = rng.normal();
  for (auto& v : b) v = rng.normal();
  auto ra = a;
  std::reverse(ra.begin(), ra.end());
  const auto ya = filtfilt(sos, a, 12);
  auto yra = filtfilt(sos, ra, 12);
  std::reverse(yra.begin(), yra.end());
  // Edge conditions differ between the two orders; the interior agrees.
  for (std::size_t i = 200; i < 400; ++i) CHECK(yra[i] == doctest::Approx(ya[i]).scale(1e-8));

  std::vector<double> mix(600);
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 2.0 * a[i] - b[i];
  const auto yb = filtfilt(sos, b, 12);
  const auto ym = filtfilt(sos, mix, 12);
  for (std::size_t i = 0; i < mix.size(); ++i) {
    CHECK(ym[i] == doctest::Approx(2.0 * ya[i] - yb[i]).scale(1e-9));
  }
  CHECK_THROWS_AS(filtfilt(sos, std::vector<double>(12, 0.0), 12), InvalidArgument);
}

TEST_CASE("baseline z-score") {
  const auto e = nbtest::noise_epochs(2, 3, 60, 100.0, -0.2, 8);
  Tensor3 shifted = e.data();
  for (double& v : shifted.values()) v = 5.0 + 2.0 * v;
  const EpochSet raw(e.subject_id(), e.fs(), e.t0(), e.labels(), shifted);
  const auto z = baseline_zscore(raw, TimeWindow(-0.2, 0.0));
  const auto r = z.samples_in(TimeWindow(-0.2, 0.0));
  for (std::size_t i = 0; i < z.n_trials(); ++i) {
    for (std::size_t c = 0; c < z.n_channels(); ++c) {
      double m = 0.0;
      for (std::size_t s = r.first; s < r.last; ++s) m += z.data()(i, c, s);
      m /= r.size();
      double v = 0.0;
      for (std::size_t s = r.first; s < r.last; ++s) v += std::pow(z.data()(i, c, s) - m, 2);
      CHECK(std::abs(m) < 1e-12);
      CHECK(v / (r.size() - 1) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  // The z-score is invariant to affine rescaling of the input.
  const auto z0 = baseline_zscore(e, TimeWindow(-0.2, 0.0));
  for (std::size_t k = 0; k < z0.data().values().size(); ++k) {
    CHECK(z0.data().values()[k] == doctest::Approx(z.data().values()[k]).scale(1e-9));
  }

  Tensor3 flat = e.data();
  for (std::size_t s = 0; s < 60; ++s) flat(3, 1, s) = 1.0;
  try {
    baseline_zscore(EpochSet("x", 100.0, -0.2, e.labels(), flat), TimeWindow(-0.2, 0.0));
    FAIL("expected DegenerateBaseline");
  } catch (const DegenerateBaseline& ex) {
    CHECK(ex.trial() == 3);
    CHECK(ex.channel() == 1);
  }
  CHECK_THROWS_AS(baseline_zscore(e, TimeWindow(2.0, 3.0)), InvalidArgument);
}

TEST_CASE("downsampling keeps every factor-th sample") {
  const auto e = nbtest::noise_epochs(1, 2, 23, 100.0, -0.2);
  const auto d = downsample(e, 4);
  CHECK(d.n_samples() == 5);
  CHECK(d.fs() == 25.0);
  CHECK(d.t0() == e.t0());
  for (std::size_t s = 0; s < 5; ++s) CHECK(d.data()(2, 1, s) == e.data()(2, 1, 4 * s));
  CHECK(downsample(e, 1) == e);
  CHECK_THROWS_AS(downsample(e, 0), InvalidArgument);
  CHECK_THROWS_AS(downsample(e, 24), InvalidArgument);
}

TEST_CASE("zero-phase lowpass over an epoch set") {
  const auto e = nbtest::noise_epochs(1, 2, 100, 250.0, -0.2);
  const auto f = lowpass_zerophase(e, FilterSpec{20.0, 4});
  const auto sos = butterworth_lowpass(4, 20.0, 250.0);
  const auto expect = filtfilt(sos, e.data().slab(2).subspan(100, 100), 12);
  for (std::size_t s = 0; s < 100; ++s) CHECK(f.data()(2, 1, s) == doctest::Approx(expect[s]));
  const auto short_e = nbtest::noise_epochs(1, 1, 12, 250.0, 0.0);
  CHECK_THROWS_AS(lowpass_zerophase(short_e, FilterSpec{20.0, 4}), InvalidArgument);
}

TEST_CASE("preprocessing chain refuses aliasing downsamples") {
  const auto e = nbtest::noise_epochs(1, 2, 100, 250.0, -0.2);
  PreprocessOptions opt;
  opt.lowpass_hz = 0.0;
  opt.downsample = 2;
  CHECK_THROWS_AS(preprocess(e, opt), InvalidArgument);
  opt.lowpass_hz = 62.5;
  CHECK_THROWS_AS(preprocess(e, opt), InvalidArgument);
  opt.lowpass_hz = 20.0;
  const auto out = preprocess(e, opt);
  CHECK(out.fs() == 125.0);
  CHECK(out.n_samples() == 50);
  opt.enabled = false;
  CHECK(preprocess(e, opt) == e);
}
