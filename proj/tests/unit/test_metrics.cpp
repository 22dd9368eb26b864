#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "neuroboot/metrics.hpp"

using namespace neuroboot;

namespace {

// Two channels, fs 10, t0 -1: samples 0..9 are baseline, 10..19 signal.
ChannelMatrix two_level(double base, double signal) {
  ChannelMatrix m{2, 20, std::vector<double>(40)};
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t s = 0; s < 20; ++s) m(c, s) = (s < 10 ? base : signal) * (s % 2 ? 1 : -1);
  }
  return m;
}

EpochSet typed_constant(double type1, double type2, double channel_step) {
  std::vector<TrialLabel> labels;
  Tensor3 data(4, 3, 20);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto l = label_from_code(static_cast<std::uint8_t>(i));
    labels.push_back(l);
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t s = 0; s < 20; ++s) {
        data(i, c, s) = (l.type == SentenceType::Type1 ? type1 : type2) + channel_step * c;
      }
    }
  }
  return EpochSet("x", 10.0, -1.0, labels, data);
}

}  // namespace

TEST_CASE("SNR is the RMS ratio in dB") {
  const auto m = two_level(0.5, 5.0);
  CHECK(snr_db(m, TimeWindow(0.0, 1.0), TimeWindow(-1.0, 0.0), 10.0, -1.0) ==
        doctest::Approx(20.0));
  CHECK(snr_db(two_level(2.0, 1.0), TimeWindow(0.0, 1.0), TimeWindow(-1.0, 0.0), 10.0, -1.0) ==
        doctest::Approx(20.0 * std::log10(0.5)));
  CHECK_THROWS_AS(snr_db(two_level(0.0, 1.0), TimeWindow(0.0, 1.0), TimeWindow(-1.0, 0.0), 10.0, -1.0),
                  Error);
  CHECK_THROWS_AS(snr_db(m, TimeWindow(5.0, 6.0), TimeWindow(-1.0, 0.0), 10.0, -1.0),
                  InvalidArgument);
}

TEST_CASE("SNR grows by 10 log10(n) when averaging n noisy trials") {
  Rng rng(RngSeed{21});
  const double signal = 10.0;
  for (std::size_t n : {1u, 4u, 16u}) {
    double total = 0.0;
    const int reps = 100;
    for (int rep = 0; rep < reps; ++rep) {
      ChannelMatrix m{4, 200, std::vector<double>(800, 0.0)};
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < 4; ++c) {
          for (std::size_t s = 0; s < 200; ++s) {
            m(c, s) += ((s >= 100) ? signal : 0.0) + rng.normal();
          }
        }
      }
      for (double& v : m.values) v /= static_cast<double>(n);
      total += snr_db(m, TimeWindow(1.0, 2.0), TimeWindow(0.0, 1.0), 100.0, 0.0);
    }
    const double single = 20.0 * std::log10(std::sqrt(signal * signal + 1.0));
    const double expected = 10.0 * std::log10(static_cast<double>(n));
    CHECK(std::abs(total / reps - single - expected) < 0.5);
  }
}

TEST_CASE("ERP by sentence type and the dERP") {
  const auto e = typed_constant(2.0, 0.5, 1.0);
  const auto erp = compute_erp(e);
  CHECK(erp.n_type1 == 2);
  CHECK(erp.n_type2 == 2);
  CHECK(erp.type1(2, 5) == doctest::Approx(4.0));
  CHECK(delta_erp(erp, TimeWindow(0.0, 1.0), 10.0, -1.0) == doctest::Approx(1.5));
  const auto per = delta_erp_per_channel(erp, TimeWindow(0.0, 1.0), 10.0, -1.0);
  REQUIRE(per.size() == 3);
  for (double v : per) CHECK(v == doctest::Approx(1.5));
  const auto mt = mean_trial(e);
  CHECK(mt(0, 0) == doctest::Approx(1.25));
  CHECK_THROWS_AS(compute_erp(select_trials(e, type_is(SentenceType::Type1))), InvalidArgument);
}

TEST_CASE("dERP only averages the window samples") {
  std::vector<TrialLabel> labels{label_from_code(0), label_from_code(1)};
  Tensor3 data(2, 1, 20, 0.0);
  for (std::size_t s = 0; s < 20; ++s) data(0, 0, s) = static_cast<double>(s);
  const EpochSet e("x", 10.0, -1.0, labels, data);
  // Window [0.3, 0.6) holds samples 13, 14, 15.
  CHECK(delta_erp(compute_erp(e), TimeWindow(0.3, 0.6), 10.0, -1.0) == doctest::Approx(14.0));
  const auto q = quality(e, TimeWindow(0.3, 0.6), TimeWindow(-1.0, 0.0));
  CHECK(q.delta_erp == doctest::Approx(14.0));
}
