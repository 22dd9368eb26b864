#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "neuroboot/core.hpp"

namespace neuroboot {

/// Channels × samples matrix, row-major.
struct ChannelMatrix {
  std::size_t n_channels = 0;
  std::size_t n_samples = 0;
  std::vector<double> values;

  double operator()(std::size_t c, std::size_t s) const { return values[c * n_samples + s]; }
  double& operator()(std::size_t c, std::size_t s) { return values[c * n_samples + s]; }
};

/// Trial-averaged responses per sentence type.
struct ErpPair {
  ChannelMatrix type1;
  ChannelMatrix type2;
  std::size_t n_type1 = 0;
  std::size_t n_type2 = 0;
};

struct QualityScore {
  double snr_db = 0.0;
  double delta_erp = 0.0;
  TimeWindow signal{0.3, 0.6};
  TimeWindow baseline{-0.2, 0.0};
};

/// Elementwise mean over all trials of the set.
ChannelMatrix mean_trial(const EpochSet& e);

/// Throws InvalidArgument when either type has no trials.
ErpPair compute_erp(const EpochSet& e);

/// 20·log10(RMS over the signal window / RMS over the baseline window);
/// both RMS values pool channels and samples. Throws InvalidArgument on an
/// empty window and Error when the baseline RMS is zero.
double snr_db(const ChannelMatrix& erp, const TimeWindow& signal, const TimeWindow& baseline,
              double fs, double t0);

/// Mean over window samples of (type1 − type2) after averaging channels.
double delta_erp(const ErpPair& p, const TimeWindow& signal, double fs, double t0);

/// Same difference, one value per channel.
std::vector<double> delta_erp_per_channel(const ErpPair& p, const TimeWindow& signal, double fs,
                                          double t0);

/// SNR of the subject ERP (all trials) and ΔERP of the type split.
QualityScore quality(const EpochSet& e, const TimeWindow& signal, const TimeWindow& baseline);

}  // namespace neuroboot
