#include "neuroboot/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace neuroboot {

double LinearModel::decision(std::span<const double> x) const {
  double s = bias;
  for (std::size_t j = 0; j < weights.size(); ++j) s += weights[j] * x[j];
  return s;
}

int LinearModel::predict(std::span<const double> x) const { return decision(x) >= 0.0 ? 1 : -1; }

double primal_objective(const LinearModel& m, const FeatureMatrix& x, std::span<const int> y) {
  double reg = 0.0;
  for (double w : m.weights) reg += w * w;
  double loss = 0.0;
  for (std::size_t i = 0; i < x.n; ++i) {
    loss += std::max(0.0, 1.0 - y[i] * m.decision(x.row(i)));
  }
  return 0.5 * reg + m.hyper_c * loss;
}

double accuracy(const LinearModel& m, const FeatureMatrix& x, std::span<const int> y) {
  if (x.n == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < x.n; ++i) hits += m.predict(x.row(i)) == y[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(x.n);
}

LinearModel train_linear(const FeatureMatrix& x, std::span<const int> y,
                         const SvmOptions& options) {
  const std::size_t n = x.n;
  const std::size_t d = x.d;
  if (d < 1) throw InvalidArgument("feature dimension must be >= 1");
  if (y.size() != n) throw InvalidArgument("label count does not match feature rows");
  if (!(options.hyper_c > 0.0)) throw InvalidArgument("hyper_c must be > 0");
  bool has_pos = false;
  bool has_neg = false;
  for (int label : y) {
    if (label == 1) {
      has_pos = true;
    } else if (label == -1) {
      has_neg = true;
    } else {
      throw InvalidArgument("labels must be +1 or -1");
    }
  }
  if (!has_pos || !has_neg) throw InvalidArgument("training data must contain both classes");
  for (double v : x.values) {
    if (!std::isfinite(v)) throw InvalidArgument("features contain a non-finite value");
  }

  // Q_ij = y_i y_j <x_i, x_j>, kept dense; n is a few hundred at most.
  std::vector<double> q(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = x.row(i);
    for (std::size_t j = i; j < n; ++j) {
      const auto xj = x.row(j);
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) dot += xi[k] * xj[k];
      const double v = y[i] * y[j] * dot;
      q[i * n + j] = v;
      q[j * n + i] = v;
    }
  }

  const double c = options.hyper_c;
  constexpr double kTau = 1e-12;
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);
  auto upper = [&](std::size_t t) { return alpha[t] >= c; };
  auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  LinearModel model;
  model.hyper_c = c;
  std::size_t iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] == 1) {
        if (!upper(t) && -grad[t] >= gmax) {
          gmax = -grad[t];
          i = t;
        }
      } else if (!lower(t) && grad[t] >= gmax) {
        gmax = grad[t];
        i = t;
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    if (i < n) {
      const double* qi = &q[i * n];
      for (std::size_t t = 0; t < n; ++t) {
        if (y[t] == 1) {
          if (lower(t)) continue;
          const double gd = gmax + grad[t];
          gmax2 = std::max(gmax2, grad[t]);
          if (gd > 0.0) {
            double quad = q[i * n + i] + q[t * n + t] - 2.0 * y[i] * qi[t];
            if (quad <= 0.0) quad = kTau;
            const double obj = -(gd * gd) / quad;
            if (obj <= best) {
              best = obj;
              j = t;
            }
          }
        } else {
          if (upper(t)) continue;
          const double gd = gmax - grad[t];
          gmax2 = std::max(gmax2, -grad[t]);
          if (gd > 0.0) {
            double quad = q[i * n + i] + q[t * n + t] + 2.0 * y[i] * qi[t];
            if (quad <= 0.0) quad = kTau;
            const double obj = -(gd * gd) / quad;
            if (obj <= best) {
              best = obj;
              j = t;
            }
          }
        }
      }
    }
    if (i == n || j == n || gmax + gmax2 < options.tolerance) {
      model.converged = true;
      break;
    }

    const double* qi = &q[i * n];
    const double* qj = &q[j * n];
    const double old_i = alpha[i];
    const double old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = q[i * n + i] + q[j * n + j] + 2.0 * qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = q[i * n + i] + q[j * n + j] - 2.0 * qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double di = alpha[i] - old_i;
    const double dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) grad[t] += qi[t] * di + qj[t] * dj;
  }
  model.iterations = iter;

  // Bias from free vectors, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (upper(t)) {
      if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      sum_free += yg;
      ++n_free;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;

  model.weights.assign(d, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] == 0.0) continue;
    const auto xt = x.row(t);
    const double coef = alpha[t] * y[t];
    for (std::size_t k = 0; k < d; ++k) model.weights[k] += coef * xt[k];
  }
  model.bias = -rho;
  model.objective = primal_objective(model, x, y);
  return model;
}

}  // namespace neuroboot
