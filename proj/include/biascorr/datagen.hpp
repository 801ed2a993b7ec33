#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "biascorr/core.hpp"

namespace biascorr::datagen {

/// Ground truth for a synthetic dataset: standard normal features and
/// labels drawn from sigmoid(true_intercept + true_weights . x).
struct GenSpec {
  std::size_t n = 1;
  std::size_t feature_count = 0;
  double true_intercept = 0.0;
  std::vector<double> true_weights;
  std::uint64_t seed = 0;

  bool operator==(const GenSpec&) const = default;
};

/// Each row is drawn from counter-based streams keyed on (seed, row), so row
/// i is the same whatever n is.
Dataset generate(const GenSpec& spec);

/// Standard normal variate for (seed, stream, counter) via Box-Muller.
double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

}  // namespace biascorr::datagen
