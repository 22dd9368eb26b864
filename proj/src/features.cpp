#include "neuroboot/features.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>

namespace neuroboot {

SpatialProjector fit_projector(std::span<const GroupErp> group_erps, std::size_t n_components,
                               std::string fitted_on) {
  if (group_erps.empty()) throw InvalidArgument("PCA needs at least one group ERP");
  const std::size_t n_ch = group_erps.front().erp.n_channels;
  if (n_components < 1 || n_components > n_ch) {
    throw InvalidArgument("n_components must be in [1, n_channels]");
  }
  std::size_t total = 0;
  for (const auto& g : group_erps) {
    if (g.erp.n_channels != n_ch) throw InvalidArgument("group ERPs differ in channel count");
    total += g.erp.n_samples;
  }
  if (total < n_components) {
    throw InvalidArgument("fewer time columns than requested components");
  }

  Eigen::MatrixXd x(n_ch, total);
  std::size_t col = 0;
  for (const auto& g : group_erps) {
    for (std::size_t s = 0; s < g.erp.n_samples; ++s, ++col) {
      for (std::size_t c = 0; c < n_ch; ++c) x(c, col) = g.erp(c, s);
    }
  }
  if (!x.allFinite()) throw InvalidArgument("group ERPs contain non-finite values");

  const Eigen::VectorXd means = x.rowwise().mean();
  x.colwise() -= means;
  const double denom = total > 1 ? static_cast<double>(total - 1) : 1.0;
  const Eigen::MatrixXd cov = (x * x.transpose()) / denom;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("eigendecomposition failed");

  const Eigen::VectorXd evals = solver.eigenvalues();
  Eigen::MatrixXd evecs = solver.eigenvectors();
  for (Eigen::Index j = 0; j < evecs.cols(); ++j) {
    Eigen::Index arg = 0;
    evecs.col(j).cwiseAbs().maxCoeff(&arg);
    if (evecs(arg, j) < 0.0) evecs.col(j) = -evecs.col(j);
  }

  const double trace = std::max(evals.sum(), 0.0);
  const double tie = 1e-12 * std::max(std::abs(evals.maxCoeff()), 1e-300);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(evals.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (std::abs(evals(a) - evals(b)) > tie) return evals(a) > evals(b);
    for (Eigen::Index c = 0; c < evecs.rows(); ++c) {
      if (evecs(c, a) != evecs(c, b)) return evecs(c, a) > evecs(c, b);
    }
    return a < b;
  });

  SpatialProjector p;
  p.n_components = n_components;
  p.n_channels = n_ch;
  p.components.resize(n_components * n_ch);
  p.channel_means.assign(means.data(), means.data() + n_ch);
  p.explained_variance_ratio.resize(n_components);
  for (std::size_t r = 0; r < n_components; ++r) {
    const Eigen::Index j = order[r];
    for (std::size_t c = 0; c < n_ch; ++c) p.components[r * n_ch + c] = evecs(static_cast<Eigen::Index>(c), j);
    const double lambda = std::max(evals(j), 0.0);
    p.explained_variance_ratio[r] = trace > 0.0 ? std::min(lambda / trace, 1.0) : 0.0;
  }
  p.fitted_on = std::move(fitted_on);
  return p;
}

std::vector<GroupErp> sentence_type_group_erps(std::span<const EpochSet> subjects) {
  if (subjects.empty()) throw InvalidArgument("group ERPs need at least one subject");
  GroupErp g1{"Type1", {}};
  GroupErp g2{"Type2", {}};
  for (const auto& s : subjects) {
    const ErpPair p = compute_erp(s);
    if (g1.erp.values.empty()) {
      g1.erp = ChannelMatrix{p.type1.n_channels, p.type1.n_samples,
                             std::vector<double>(p.type1.values.size(), 0.0)};
      g2.erp = g1.erp;
    }
    if (p.type1.values.size() != g1.erp.values.size()) {
      throw InvalidArgument("subjects differ in channel or sample count");
    }
    for (std::size_t k = 0; k < p.type1.values.size(); ++k) {
      g1.erp.values[k] += p.type1.values[k];
      g2.erp.values[k] += p.type2.values[k];
    }
  }
  const double n = static_cast<double>(subjects.size());
  for (double& v : g1.erp.values) v /= n;
  for (double& v : g2.erp.values) v /= n;
  return {std::move(g1), std::move(g2)};
}

Tensor3 project(const Tensor3& trials, const SpatialProjector& p) {
  if (trials.rows() != p.n_channels) {
    throw InvalidArgument("trial channel count " + std::to_string(trials.rows()) +
                          " does not match projector channel count " +
                          std::to_string(p.n_channels));
  }
  const std::size_t ns = trials.cols();
  Tensor3 out(trials.n(), p.n_components, ns);
  for (std::size_t i = 0; i < trials.n(); ++i) {
    for (std::size_t r = 0; r < p.n_components; ++r) {
      for (std::size_t c = 0; c < p.n_channels; ++c) {
        const double w = p(r, c);
        const double m = p.channel_means[c];
        for (std::size_t s = 0; s < ns; ++s) out(i, r, s) += w * (trials(i, c, s) - m);
      }
    }
  }
  return out;
}

Tensor3 project(const EpochSet& e, const SpatialProjector& p) { return project(e.data(), p); }

void to_json(nlohmann::json& j, const SpatialProjector& p) {
  j = nlohmann::json{{"n_components", p.n_components},
                     {"n_channels", p.n_channels},
                     {"components", p.components},
                     {"channel_means", p.channel_means},
                     {"explained_variance_ratio", p.explained_variance_ratio},
                     {"fitted_on", p.fitted_on}};
}

void from_json(const nlohmann::json& j, SpatialProjector& p) {
  j.at("n_components").get_to(p.n_components);
  j.at("n_channels").get_to(p.n_channels);
  j.at("components").get_to(p.components);
  j.at("channel_means").get_to(p.channel_means);
  j.at("explained_variance_ratio").get_to(p.explained_variance_ratio);
  j.at("fitted_on").get_to(p.fitted_on);
  if (p.components.size() != p.n_components * p.n_channels ||
      p.channel_means.size() != p.n_channels ||
      p.explained_variance_ratio.size() != p.n_components) {
    throw InvalidArgument("projector JSON has inconsistent dimensions");
  }
}

}  // namespace neuroboot
