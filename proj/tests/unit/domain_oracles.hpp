#pragma once

// Naive reference implementations shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "neuroboot/features.hpp"
#include "neuroboot/stats.hpp"

namespace nbtest {

// Expands counts into the explicit list of drawn indices and averages it.
inline std::vector<double> materialised_average(const neuroboot::Tensor3& trials,
                                                const std::vector<std::uint32_t>& counts) {
  std::vector<std::size_t> drawn;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    for (std::uint32_t c = 0; c < counts[i]; ++c) drawn.push_back(i);
  }
  std::vector<double> out(trials.slab_size(), 0.0);
  for (std::size_t i : drawn) {
    const auto x = trials.slab(i);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += x[j];
  }
  for (double& v : out) v /= static_cast<double>(drawn.size());
  return out;
}

// Channel covariance of the concatenated, per-channel centred ERPs.
inline std::vector<double> covariance(const std::vector<neuroboot::GroupErp>& groups) {
  const std::size_t n = groups.front().erp.n_channels;
  std::vector<std::vector<double>> rows(n);
  for (const auto& g : groups) {
    for (std::size_t c = 0; c < n; ++c) {
      for (std::size_t s = 0; s < g.erp.n_samples; ++s) rows[c].push_back(g.erp(c, s));
    }
  }
  const std::size_t m = rows[0].size();
  for (auto& r : rows) {
    double mu = 0.0;
    for (double v : r) mu += v;
    mu /= static_cast<double>(m);
    for (double& v : r) v -= mu;
  }
  std::vector<double> cov(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      double s = 0.0;
      for (std::size_t k = 0; k < m; ++k) s += rows[a][k] * rows[b][k];
      cov[a * n + b] = s / static_cast<double>(m - 1);
    }
  }
  return cov;
}

// Frobenius norm of the part of the oracle subspace outside the fitted one;
// it bounds the sine of the largest principal angle.
inline double subspace_residual(const neuroboot::SpatialProjector& p,
                                const std::vector<std::vector<double>>& basis) {
  double total = 0.0;
  for (std::size_t r = 0; r < p.n_components; ++r) {
    std::vector<double> v = basis[r];
    for (std::size_t q = 0; q < p.n_components; ++q) {
      double dot = 0.0;
      for (std::size_t c = 0; c < p.n_channels; ++c) dot += p(q, c) * basis[r][c];
      for (std::size_t c = 0; c < p.n_channels; ++c) v[c] -= dot * p(q, c);
    }
    for (double x : v) total += x * x;
  }
  return std::sqrt(total);
}

// Largest |<row a, row b> - delta_ab| over the projector rows.
inline double orthonormality_error(const neuroboot::SpatialProjector& p) {
  double worst = 0.0;
  for (std::size_t a = 0; a < p.n_components; ++a) {
    for (std::size_t b = 0; b < p.n_components; ++b) {
      double dot = 0.0;
      for (std::size_t c = 0; c < p.n_channels; ++c) dot += p(a, c) * p(b, c);
      worst = std::max(worst, std::abs(dot - (a == b ? 1.0 : 0.0)));
    }
  }
  return worst;
}

// Paired t-test evaluated in 50-digit arithmetic: {t, two-sided p}.
inline std::pair<double, double> paired_t_oracle(const std::vector<double>& a,
                                                 const std::vector<double>& b) {
  using big = boost::multiprecision::cpp_bin_float_50;
  const std::size_t n = a.size();
  big mean = 0;
  for (std::size_t i = 0; i < n; ++i) mean += big(a[i]) - big(b[i]);
  mean /= n;
  big ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const big d = big(a[i]) - big(b[i]) - mean;
    ss += d * d;
  }
  const big sd = sqrt(ss / (n - 1));
  const big t = mean / (sd / sqrt(big(n)));
  const big df = n - 1;
  const big p = boost::math::ibeta(df / 2, big(0.5), df / (df + t * t));
  return {static_cast<double>(t), static_cast<double>(p)};
}

// Largest k with p_(k) <= kq/m, found by scanning every k.
inline std::vector<bool> bh_enumeration(const std::vector<double>& p, double q) {
  const std::size_t m = p.size();
  auto sorted = p;
  std::sort(sorted.begin(), sorted.end());
  double cut = -1.0;
  for (std::size_t k = m; k >= 1; --k) {
    if (sorted[k - 1] <= static_cast<double>(k) * q / static_cast<double>(m)) {
      cut = sorted[k - 1];
      break;
    }
  }
  std::vector<bool> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = p[i] <= cut;
  return out;
}

struct OracleCluster {
  std::size_t start;
  std::size_t end;
  double mass;
  double p;
};

inline std::vector<OracleCluster> supra_threshold_runs(const std::vector<double>& t, double thr) {
  std::vector<OracleCluster> out;
  for (std::size_t i = 0; i < t.size();) {
    const int sign = t[i] > thr ? 1 : (t[i] < -thr ? -1 : 0);
    if (sign == 0) {
      ++i;
      continue;
    }
    OracleCluster c{i, i, 0.0, 1.0};
    while (i < t.size() && (sign > 0 ? t[i] > thr : t[i] < -thr)) {
      c.mass += t[i];
      c.end = i++;
    }
    out.push_back(c);
  }
  return out;
}

// One-sample t of the differences d (subjects × time) with subject s negated
// when bit s of mask is set.
inline std::vector<double> sign_flipped_t(const std::vector<double>& d, std::size_t ns,
                                          std::size_t nt, std::uint64_t mask) {
  std::vector<double> t(nt);
  for (std::size_t j = 0; j < nt; ++j) {
    double m = 0.0;
    for (std::size_t s = 0; s < ns; ++s) m += ((mask >> s) & 1u ? -1.0 : 1.0) * d[s * nt + j];
    m /= static_cast<double>(ns);
    double ss = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
      const double x = ((mask >> s) & 1u ? -1.0 : 1.0) * d[s * nt + j] - m;
      ss += x * x;
    }
    t[j] = m / std::sqrt(ss / static_cast<double>(ns - 1) / static_cast<double>(ns));
  }
  return t;
}

// Cluster-mass test by enumerating all 2^ns sign flips of a - b.
inline std::vector<OracleCluster> exhaustive_cluster_oracle(const neuroboot::SubjectTimeMatrix& a,
                                                            const neuroboot::SubjectTimeMatrix& b,
                                                            double alpha_cluster) {
  const std::size_t ns = a.n_subjects;
  const std::size_t nt = a.n_times;
  std::vector<double> d(ns * nt);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a.values[i] - b.values[i];
  const double thr = boost::math::quantile(boost::math::students_t(static_cast<double>(ns - 1)),
                                           1.0 - alpha_cluster / 2.0);
  auto observed = supra_threshold_runs(sign_flipped_t(d, ns, nt, 0), thr);
  const std::uint64_t total = std::uint64_t{1} << ns;
  std::vector<double> null_max;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    double best = 0.0;
    for (const auto& c : supra_threshold_runs(sign_flipped_t(d, ns, nt, mask), thr)) {
      best = std::max(best, std::abs(c.mass));
    }
    null_max.push_back(best);
  }
  for (auto& c : observed) {
    const auto count = std::count_if(null_max.begin(), null_max.end(),
                                     [&](double m) { return m >= std::abs(c.mass); });
    c.p = static_cast<double>(count) / static_cast<double>(total);
  }
  return observed;
}

}  // namespace nbtest
