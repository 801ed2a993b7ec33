#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "biascorr/core.hpp"

namespace biascorr::sampling {

/// Provenance of a downsampling run, kept so training can correct for it.
struct SamplingManifest {
  std::uint64_t seed = 0;
  SamplingSpec spec = SamplingSpec::constant({1.0, 1.0});
  std::size_t original_count = 0;
  std::size_t retained_count = 0;
  std::vector<std::size_t> retained_per_label;

  bool operator==(const SamplingManifest&) const = default;
};

struct DownsampleResult {
  Dataset data;
  SamplingManifest manifest;
};

/// Whether the instance with this ordinal survives sampling at `rate`.
/// Depends only on its arguments.
bool retains(std::uint64_t seed, std::uint64_t ordinal, double rate);

/// Keeps each row independently with probability s(x_n, y_n), keyed on the
/// row's position. Row order is preserved.
DownsampleResult downsample(const Dataset& data, const SamplingSpec& s,
                            std::uint64_t seed);

/// As above with caller-supplied ordinals, one per row. Shards of a larger
/// dataset given their global ordinals reproduce the whole-dataset decisions.
DownsampleResult downsample(const Dataset& data, const SamplingSpec& s,
                            std::uint64_t seed,
                            std::span<const std::uint64_t> ordinals);

}  // namespace biascorr::sampling
