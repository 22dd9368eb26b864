#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "neuroboot/core.hpp"
#include "neuroboot/metrics.hpp"

namespace neuroboot {

/// Top principal components of the channel covariance of concatenated
/// group ERPs. Rows of `components` are orthonormal spatial filters.
struct SpatialProjector {
  std::size_t n_components = 0;
  std::size_t n_channels = 0;
  /// n_components × n_channels, row-major.
  std::vector<double> components;
  /// Fit-time channel means, subtracted before projection.
  std::vector<double> channel_means;
  std::vector<double> explained_variance_ratio;
  std::string fitted_on;

  double operator()(std::size_t r, std::size_t c) const { return components[r * n_channels + c]; }
};

struct GroupErp {
  std::string group_id;
  ChannelMatrix erp;
};

/// Concatenates the group ERPs along time, centres each channel, and keeps
/// the leading eigenvectors of the channel covariance. Each component is
/// signed so its largest-magnitude entry is positive; equal eigenvalues are
/// ordered lexicographically by eigenvector. Throws InvalidArgument on
/// fewer time columns than components or non-finite input.
SpatialProjector fit_projector(std::span<const GroupErp> group_erps, std::size_t n_components,
                               std::string fitted_on = {});

/// Group ERPs of a training set: mean over trials per subject and sentence
/// type, then mean over subjects, one group per type.
std::vector<GroupErp> sentence_type_group_erps(std::span<const EpochSet> subjects);

/// n_trials × n_components × n_samples. Throws InvalidArgument when the
/// channel count differs from the projector's.
Tensor3 project(const Tensor3& trials, const SpatialProjector& p);
Tensor3 project(const EpochSet& e, const SpatialProjector& p);

void to_json(nlohmann::json& j, const SpatialProjector& p);
void from_json(const nlohmann::json& j, SpatialProjector& p);

}  // namespace neuroboot
