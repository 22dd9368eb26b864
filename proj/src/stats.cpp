#include "neuroboot/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace neuroboot {

namespace {

// Continued fraction for I_x(a, b), modified Lentz.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_front) * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - std::exp(log_front) * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw InvalidArgument("degrees of freedom must be > 0");
  if (std::isnan(t)) throw InvalidArgument("t is NaN");
  if (std::isinf(t)) return 0.0;
  const double x = df / (df + t * t);
  return std::min(1.0, incomplete_beta(0.5 * df, 0.5, x));
}

double student_t_cdf(double t, double df) {
  const double tail = 0.5 * student_t_two_sided_p(t, df);
  return t >= 0.0 ? 1.0 - tail : tail;
}

double student_t_critical(double alpha_two_sided, double df) {
  if (!(alpha_two_sided > 0.0 && alpha_two_sided < 1.0)) {
    throw InvalidArgument("alpha must be in (0, 1)");
  }
  double lo = 0.0;
  double hi = 1.0;
  while (student_t_two_sided_p(hi, df) > alpha_two_sided) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (student_t_two_sided_p(mid, df) > alpha_two_sided) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double mean(std::span<const double> x) {
  if (x.empty()) throw InvalidArgument("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double standard_error(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  const double n = static_cast<double>(x.size());
  return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

TTestResult paired_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("paired samples differ in length");
  if (a.size() < 2) throw InvalidArgument("paired t-test needs n >= 2");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) {
      throw InvalidArgument("paired samples contain non-finite values");
    }
    d[i] = a[i] - b[i];
  }
  const double m = mean(d);
  double ss = 0.0;
  for (double v : d) ss += (v - m) * (v - m);
  const double nn = static_cast<double>(n);
  const double sd = std::sqrt(ss / (nn - 1.0));
  if (!(sd > 0.0)) throw DegenerateSample("paired differences have zero variance");
  TTestResult r;
  r.mean_difference = m;
  r.t = m / (sd / std::sqrt(nn));
  r.df = nn - 1.0;
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

std::vector<bool> fdr_bh(std::span<const double> p_values, double q) {
  const std::size_t m = p_values.size();
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("p-values must lie in [0, 1]");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return p_values[x] < p_values[y]; });
  std::size_t cutoff = 0;
  for (std::size_t rank = 1; rank <= m; ++rank) {
    const double threshold = static_cast<double>(rank) * q / static_cast<double>(m);
    if (p_values[order[rank - 1]] <= threshold) cutoff = rank;
  }
  std::vector<bool> reject(m, false);
  for (std::size_t rank = 0; rank < cutoff; ++rank) reject[order[rank]] = true;
  return reject;
}

std::vector<Cluster> ClusterResult::significant(double alpha) const {
  std::vector<Cluster> out;
  for (const auto& c : clusters) {
    if (c.p < alpha) out.push_back(c);
  }
  return out;
}

namespace {

void check_pair(const SubjectTimeMatrix& a, const SubjectTimeMatrix& b) {
  if (a.n_subjects != b.n_subjects || a.n_times != b.n_times) {
    throw InvalidArgument("paired matrices differ in shape");
  }
  if (a.values.size() != a.n_subjects * a.n_times || b.values.size() != a.values.size()) {
    throw InvalidArgument("matrix values do not match its shape");
  }
  if (a.n_subjects < 2) throw InvalidArgument("need at least 2 subjects");
}

// t-values of sign-flipped differences. The sum of squares does not depend
// on the signs, so only the means are recomputed per permutation.
void flipped_t(const std::vector<double>& diff, const std::vector<double>& sumsq,
               std::size_t n_subjects, std::size_t n_times, std::span<const signed char> signs,
               std::vector<double>& t_out) {
  const double n = static_cast<double>(n_subjects);
  std::fill(t_out.begin(), t_out.end(), 0.0);
  for (std::size_t s = 0; s < n_subjects; ++s) {
    const double* row = &diff[s * n_times];
    if (signs[s] > 0) {
      for (std::size_t t = 0; t < n_times; ++t) t_out[t] += row[t];
    } else {
      for (std::size_t t = 0; t < n_times; ++t) t_out[t] -= row[t];
    }
  }
  for (std::size_t t = 0; t < n_times; ++t) {
    const double m = t_out[t] / n;
    const double var = std::max(0.0, (sumsq[t] - n * m * m) / (n - 1.0));
    const double sd = std::sqrt(var);
    if (sd > 0.0) {
      t_out[t] = m / (sd / std::sqrt(n));
    } else {
      t_out[t] = m == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), m);
    }
  }
}

double max_abs_mass(std::span<const double> t_values, double threshold) {
  double best = 0.0;
  double run = 0.0;
  int sign = 0;
  for (double t : t_values) {
    const int s = t > threshold ? 1 : (t < -threshold ? -1 : 0);
    if (s != 0 && s == sign) {
      run += t;
    } else {
      best = std::max(best, std::abs(run));
      run = s != 0 ? t : 0.0;
    }
    sign = s;
  }
  return std::max(best, std::abs(run));
}

}  // namespace

std::vector<double> paired_t_series(const SubjectTimeMatrix& a, const SubjectTimeMatrix& b) {
  check_pair(a, b);
  const std::size_t ns = a.n_subjects;
  const std::size_t nt = a.n_times;
  std::vector<double> diff(ns * nt);
  std::vector<double> sumsq(nt, 0.0);
  for (std::size_t k = 0; k < diff.size(); ++k) {
    diff[k] = a.values[k] - b.values[k];
    sumsq[k % nt] += diff[k] * diff[k];
  }
  std::vector<signed char> ones(ns, 1);
  std::vector<double> t(nt);
  flipped_t(diff, sumsq, ns, nt, ones, t);
  return t;
}

std::vector<Cluster> find_clusters(std::span<const double> t_values, double threshold) {
  std::vector<Cluster> out;
  int sign = 0;
  for (std::size_t i = 0; i < t_values.size(); ++i) {
    const double t = t_values[i];
    const int s = t > threshold ? 1 : (t < -threshold ? -1 : 0);
    if (s != 0 && s == sign) {
      out.back().end = i;
      out.back().mass += t;
    } else if (s != 0) {
      out.push_back(Cluster{i, i, t, 1.0});
    }
    sign = s;
  }
  return out;
}

ClusterResult cluster_permutation(const SubjectTimeMatrix& a, const SubjectTimeMatrix& b,
                                  const ClusterOptions& options) {
  check_pair(a, b);
  const std::size_t ns = a.n_subjects;
  const std::size_t nt = a.n_times;
  if (ns < 6) throw InvalidArgument("cluster permutation needs at least 6 subjects");
  const bool exhaustive = ns < 63 && (std::uint64_t{1} << ns) <= options.n_permutations;
  if (!exhaustive && options.n_permutations < 100) {
    throw InvalidArgument("cluster permutation needs at least 100 permutations");
  }

  std::vector<double> diff(ns * nt);
  std::vector<double> sumsq(nt, 0.0);
  for (std::size_t k = 0; k < diff.size(); ++k) {
    diff[k] = a.values[k] - b.values[k];
    sumsq[k % nt] += diff[k] * diff[k];
  }

  ClusterResult result;
  result.exhaustive = exhaustive;
  result.threshold = student_t_critical(options.alpha_cluster, static_cast<double>(ns - 1));
  std::vector<signed char> signs(ns, 1);
  result.t_values.resize(nt);
  flipped_t(diff, sumsq, ns, nt, signs, result.t_values);
  result.clusters = find_clusters(result.t_values, result.threshold);
  if (result.clusters.empty()) {
    result.n_permutations = exhaustive ? (std::size_t{1} << ns) : options.n_permutations;
    return result;
  }

  std::vector<double> null_max;
  std::vector<double> t(nt);
  if (exhaustive) {
    const std::uint64_t total = std::uint64_t{1} << ns;
    null_max.reserve(total);
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      for (std::size_t s = 0; s < ns; ++s) signs[s] = (mask >> s) & 1u ? -1 : 1;
      flipped_t(diff, sumsq, ns, nt, signs, t);
      null_max.push_back(max_abs_mass(t, result.threshold));
    }
  } else {
    null_max.reserve(options.n_permutations);
    for (std::size_t p = 0; p < options.n_permutations; ++p) {
      Rng rng(derive_seed(options.seed, p));
      for (std::size_t s = 0; s < ns; ++s) signs[s] = (rng.next_u64() >> 63) ? -1 : 1;
      flipped_t(diff, sumsq, ns, nt, signs, t);
      null_max.push_back(max_abs_mass(t, result.threshold));
    }
  }
  result.n_permutations = null_max.size();

  for (auto& c : result.clusters) {
    const double observed = std::abs(c.mass);
    const auto count = static_cast<double>(
        std::count_if(null_max.begin(), null_max.end(), [&](double m) { return m >= observed; }));
    c.p = exhaustive ? count / static_cast<double>(null_max.size())
                     : (1.0 + count) / (static_cast<double>(null_max.size()) + 1.0);
  }
  return result;
}

}  // namespace neuroboot
