#include "neuroboot/metrics.hpp"

#include <cmath>

namespace neuroboot {

namespace {

ChannelMatrix mean_of(const EpochSet& e, SentenceType type, std::size_t& count) {
  ChannelMatrix m{e.n_channels(), e.n_samples(),
                  std::vector<double>(e.n_channels() * e.n_samples(), 0.0)};
  count = 0;
  for (std::size_t i = 0; i < e.n_trials(); ++i) {
    if (e.labels()[i].type != type) continue;
    const auto x = e.trial(i);
    for (std::size_t k = 0; k < x.size(); ++k) m.values[k] += x[k];
    ++count;
  }
  if (count > 0) {
    for (double& v : m.values) v /= static_cast<double>(count);
  }
  return m;
}

SampleRange checked_range(const TimeWindow& w, double fs, double t0, std::size_t n) {
  const SampleRange r = window_samples(t0, fs, n, w);
  if (r.empty()) throw InvalidArgument("window has no samples inside the ERP span");
  return r;
}

double rms(const ChannelMatrix& m, SampleRange r) {
  double ss = 0.0;
  for (std::size_t c = 0; c < m.n_channels; ++c) {
    for (std::size_t s = r.first; s < r.last; ++s) ss += m(c, s) * m(c, s);
  }
  return std::sqrt(ss / static_cast<double>(m.n_channels * r.size()));
}

}  // namespace

ChannelMatrix mean_trial(const EpochSet& e) {
  if (e.n_trials() == 0) throw InvalidArgument("cannot average an empty epoch set");
  ChannelMatrix m{e.n_channels(), e.n_samples(),
                  std::vector<double>(e.n_channels() * e.n_samples(), 0.0)};
  for (std::size_t i = 0; i < e.n_trials(); ++i) {
    const auto x = e.trial(i);
    for (std::size_t k = 0; k < x.size(); ++k) m.values[k] += x[k];
  }
  for (double& v : m.values) v /= static_cast<double>(e.n_trials());
  return m;
}

ErpPair compute_erp(const EpochSet& e) {
  ErpPair p;
  p.type1 = mean_of(e, SentenceType::Type1, p.n_type1);
  p.type2 = mean_of(e, SentenceType::Type2, p.n_type2);
  if (p.n_type1 == 0 || p.n_type2 == 0) {
    throw InvalidArgument("ERP needs at least one trial of each sentence type");
  }
  return p;
}

double snr_db(const ChannelMatrix& erp, const TimeWindow& signal, const TimeWindow& baseline,
              double fs, double t0) {
  const double num = rms(erp, checked_range(signal, fs, t0, erp.n_samples));
  const double den = rms(erp, checked_range(baseline, fs, t0, erp.n_samples));
  if (!(den > 0.0)) throw Error("baseline RMS is zero; SNR undefined");
  return 20.0 * std::log10(num / den);
}

std::vector<double> delta_erp_per_channel(const ErpPair& p, const TimeWindow& signal, double fs,
                                          double t0) {
  const SampleRange r = checked_range(signal, fs, t0, p.type1.n_samples);
  std::vector<double> out(p.type1.n_channels, 0.0);
  for (std::size_t c = 0; c < p.type1.n_channels; ++c) {
    double sum = 0.0;
    for (std::size_t s = r.first; s < r.last; ++s) sum += p.type1(c, s) - p.type2(c, s);
    out[c] = sum / static_cast<double>(r.size());
  }
  return out;
}

double delta_erp(const ErpPair& p, const TimeWindow& signal, double fs, double t0) {
  const SampleRange r = checked_range(signal, fs, t0, p.type1.n_samples);
  const std::size_t nc = p.type1.n_channels;
  double total = 0.0;
  for (std::size_t s = r.first; s < r.last; ++s) {
    double channel_mean = 0.0;
    for (std::size_t c = 0; c < nc; ++c) channel_mean += p.type1(c, s) - p.type2(c, s);
    total += channel_mean / static_cast<double>(nc);
  }
  return total / static_cast<double>(r.size());
}

QualityScore quality(const EpochSet& e, const TimeWindow& signal, const TimeWindow& baseline) {
  QualityScore q;
  q.signal = signal;
  q.baseline = baseline;
  q.snr_db = snr_db(mean_trial(e), signal, baseline, e.fs(), e.t0());
  q.delta_erp = delta_erp(compute_erp(e), signal, e.fs(), e.t0());
  return q;
}

}  // namespace neuroboot
