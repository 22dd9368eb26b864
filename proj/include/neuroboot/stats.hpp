#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "neuroboot/core.hpp"
#include "neuroboot/rng.hpp"

namespace neuroboot {

class DegenerateSample : public Error {
 public:
  using Error::Error;
};

/// Regularised incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// Two-sided tail probability P(|T| >= |t|) of Student's t with df degrees of freedom.
double student_t_two_sided_p(double t, double df);

/// Student-t CDF.
double student_t_cdf(double t, double df);

/// Positive t with two-sided tail probability alpha.
double student_t_critical(double alpha_two_sided, double df);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  double mean_difference = 0.0;
};

/// Paired t-test of a − b. Throws InvalidArgument when lengths differ, n < 2
/// or values are non-finite, and DegenerateSample when the differences have
/// zero variance.
TTestResult paired_t(std::span<const double> a, std::span<const double> b);

/// Benjamini–Hochberg step-up: reject every rank up to the largest i with
/// p_(i) <= i·q/m.
std::vector<bool> fdr_bh(std::span<const double> p_values, double q);

/// Subjects × time matrix, row-major.
struct SubjectTimeMatrix {
  std::size_t n_subjects = 0;
  std::size_t n_times = 0;
  std::vector<double> values;

  double operator()(std::size_t s, std::size_t t) const { return values[s * n_times + t]; }
};

struct Cluster {
  /// Inclusive time indices.
  std::size_t start = 0;
  std::size_t end = 0;
  /// Sum of the t-values inside the cluster.
  double mass = 0.0;
  double p = 1.0;
};

struct ClusterOptions {
  double alpha_cluster = 0.05;
  std::size_t n_permutations = 1024;
  RngSeed seed{0};
};

struct ClusterResult {
  std::vector<Cluster> clusters;
  std::size_t n_permutations = 0;
  bool exhaustive = false;
  double threshold = 0.0;
  std::vector<double> t_values;

  std::vector<Cluster> significant(double alpha = 0.05) const;
};

/// Paired t-values of a − b at every time point; zero variance gives t = 0
/// for a zero mean and ±inf otherwise.
std::vector<double> paired_t_series(const SubjectTimeMatrix& a, const SubjectTimeMatrix& b);

/// Contiguous runs with t above +threshold or below −threshold.
std::vector<Cluster> find_clusters(std::span<const double> t_values, double threshold);

/// Cluster-mass permutation test with sign flips of per-subject differences.
/// Exhaustive over all 2^n flips when that is at most n_permutations, then
/// p = #{max |mass| >= |observed|} / 2^n; otherwise
/// p = (1 + #{max |mass| >= |observed|}) / (n_permutations + 1).
/// Needs >= 6 subjects and >= 100 permutations unless exhaustive.
ClusterResult cluster_permutation(const SubjectTimeMatrix& a, const SubjectTimeMatrix& b,
                                  const ClusterOptions& options = {});

double mean(std::span<const double> x);
/// Standard error of the mean with the n−1 sample standard deviation.
double standard_error(std::span<const double> x);

}  // namespace neuroboot
