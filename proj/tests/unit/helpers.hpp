#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "neuroboot/core.hpp"
#include "neuroboot/rng.hpp"

namespace nbtest {

// Small epoch set with n_per_cell trials in each topic × type cell, filled
// with seeded Gaussian noise.
inline neuroboot::EpochSet noise_epochs(std::size_t n_per_cell, std::size_t channels,
                                        std::size_t samples, double fs = 100.0, double t0 = -0.2,
                                        std::uint64_t seed = 1, std::string id = "s") {
  neuroboot::Rng rng(neuroboot::RngSeed{seed});
  std::vector<neuroboot::TrialLabel> labels;
  neuroboot::Tensor3 data(4 * n_per_cell, channels, samples);
  for (std::uint8_t code = 0; code < 4; ++code) {
    for (std::size_t i = 0; i < n_per_cell; ++i) labels.push_back(neuroboot::label_from_code(code));
  }
  for (double& v : data.values()) v = rng.normal();
  return neuroboot::EpochSet(std::move(id), fs, t0, std::move(labels), std::move(data));
}

}  // namespace nbtest
