#include "biascorr/sampling.hpp"

#include <string>

#include "biascorr/errors.hpp"
#include "biascorr/random.hpp"

namespace biascorr::sampling {

namespace {
constexpr std::uint64_t kRetentionStream = 0x73616d706c65ULL;  // "sample"
}  // namespace

bool retains(std::uint64_t seed, std::uint64_t ordinal, double rate) {
  return counter_uniform(seed, kRetentionStream, ordinal) < rate;
}

DownsampleResult downsample(const Dataset& data, const SamplingSpec& s,
                            std::uint64_t seed,
                            std::span<const std::uint64_t> ordinals) {
  if (ordinals.size() != data.size()) {
    throw DomainError("expected one ordinal per row");
  }
  if (s.label_count() != data.label_space().size()) {
    throw DomainError("sampling spec has " + std::to_string(s.label_count()) +
                      " labels, dataset has " +
                      std::to_string(data.label_space().size()));
  }
  DownsampleResult out{Dataset(data.feature_count(), data.label_space(), data.has_rates()),
                       SamplingManifest{seed, s, data.size(), 0,
                                        std::vector<std::size_t>(s.label_count(), 0)}};
  for (std::size_t n = 0; n < data.size(); ++n) {
    const LabeledInstance inst = data.instance(n);
    if (retains(seed, ordinals[n], s.rate(inst, inst.y))) {
      out.data.add(inst.x, inst.y, inst.rates);
      ++out.manifest.retained_per_label[inst.y];
    }
  }
  out.manifest.retained_count = out.data.size();
  return out;
}

DownsampleResult downsample(const Dataset& data, const SamplingSpec& s,
                            std::uint64_t seed) {
  std::vector<std::uint64_t> ordinals(data.size());
  for (std::size_t n = 0; n < ordinals.size(); ++n) ordinals[n] = n;
  return downsample(data, s, seed, ordinals);
}

}  // namespace biascorr::sampling
