#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "neuroboot/core.hpp"

namespace neuroboot {

/// Row-major n × d feature matrix.
struct FeatureMatrix {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> values;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols) : n(rows), d(cols), values(rows * cols, 0.0) {}

  std::span<const double> row(std::size_t i) const { return {values.data() + i * d, d}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * d, d}; }
};

struct SvmOptions {
  double hyper_c = 1.0;
  /// Stop once the maximal KKT violation of the dual drops below this.
  double tolerance = 1e-5;
  std::size_t max_iterations = 200000;
};

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  double hyper_c = 1.0;
  std::size_t iterations = 0;
  /// Primal objective ½‖w‖² + C·Σ hinge at the returned solution.
  double objective = 0.0;
  bool converged = false;

  double decision(std::span<const double> x) const;
  /// +1 when w·x + b >= 0, −1 otherwise.
  int predict(std::span<const double> x) const;
};

/// Soft-margin linear SVM with unregularised bias,
///   min ½‖w‖² + C Σ max(0, 1 − y_i (w·x_i + b)),
/// solved in the dual by SMO with second-order working-set selection.
/// Labels must be ±1 with both classes present.
LinearModel train_linear(const FeatureMatrix& x, std::span<const int> y,
                         const SvmOptions& options = {});

double primal_objective(const LinearModel& m, const FeatureMatrix& x, std::span<const int> y);

/// Fraction of rows whose prediction equals the label.
double accuracy(const LinearModel& m, const FeatureMatrix& x, std::span<const int> y);

}  // namespace neuroboot
