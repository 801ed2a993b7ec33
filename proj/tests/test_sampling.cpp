#include <cmath>
#include <vector>

#include "biascorr/core.hpp"
#include "biascorr/errors.hpp"
#include "biascorr/sampling.hpp"
#include "doctest.h"

using namespace biascorr;
using namespace biascorr::sampling;

namespace {

Dataset labeled_rows(std::size_t zeros, std::size_t ones) {
  Dataset d(1);
  d.reserve(zeros + ones);
  for (std::size_t i = 0; i < zeros + ones; ++i) {
    d.add(std::vector<double>{static_cast<double>(i)}, i < zeros ? 0 : 1);
  }
  return d;
}

}  // namespace

TEST_CASE("certain inclusion and certain exclusion") {
  const Dataset d = labeled_rows(50, 50);
  auto all = downsample(d, SamplingSpec::constant({1.0, 1.0}), 1);
  CHECK(all.data == d);
  CHECK(all.manifest.retained_count == 100);
  auto none = downsample(d, SamplingSpec::constant({0.0, 0.0}), 1);
  CHECK(none.data.empty());
  CHECK(none.manifest.retained_count == 0);
  CHECK(none.manifest.original_count == 100);
}

TEST_CASE("lion-style imbalance keeps every positive and about a quarter of negatives") {
  const Dataset d = labeled_rows(400'000, 2'000);
  const auto result = downsample(d, SamplingSpec::constant({0.25, 1.0}), 2022);
  const double sigma = std::sqrt(400'000 * 0.25 * 0.75);
  CHECK(result.manifest.retained_per_label[1] == 2'000);
  CHECK(std::abs(static_cast<double>(result.manifest.retained_per_label[0]) - 100'000.0) <=
        4.0 * sigma);
  CHECK(result.manifest.retained_count ==
        result.manifest.retained_per_label[0] + result.manifest.retained_per_label[1]);
  CHECK(result.manifest.seed == 2022);
  CHECK(result.manifest.spec == SamplingSpec::constant({0.25, 1.0}));
}

TEST_CASE("order is preserved and output is deterministic") {
  const Dataset d = labeled_rows(1000, 1000);
  const auto spec = SamplingSpec::constant({0.3, 0.6});
  const auto a = downsample(d, spec, 5);
  const auto b = downsample(d, spec, 5);
  CHECK(a.data == b.data);
  CHECK(a.manifest == b.manifest);
  for (std::size_t i = 1; i < a.data.size(); ++i) {
    CHECK(a.data.features(i)[0] > a.data.features(i - 1)[0]);
  }
  CHECK_FALSE(downsample(d, spec, 6).data == a.data);
}

TEST_CASE("deleting a row leaves every other decision unchanged") {
  const Dataset d = labeled_rows(300, 300);
  const auto spec = SamplingSpec::constant({0.5, 0.5});
  const auto full = downsample(d, spec, 17);
  for (std::size_t removed : {0UL, 123UL, 599UL}) {
    Dataset smaller(1);
    std::vector<std::uint64_t> ordinals;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (i == removed) continue;
      smaller.add(d.features(i), d.label(i));
      ordinals.push_back(i);
    }
    const auto part = downsample(smaller, spec, 17, ordinals);
    // Rebuild the full result without the removed row and compare.
    Dataset expected(1);
    for (std::size_t i = 0; i < full.data.size(); ++i) {
      if (full.data.features(i)[0] == static_cast<double>(removed)) continue;
      expected.add(full.data.features(i), full.data.label(i));
    }
    CHECK(part.data == expected);
  }
}

TEST_CASE("shards with global ordinals reproduce the whole-dataset result") {
  const Dataset d = labeled_rows(500, 500);
  const auto spec = SamplingSpec::constant({0.2, 0.7});
  const auto whole = downsample(d, spec, 3);
  Dataset merged(1);
  for (std::size_t start : {0UL, 400UL, 700UL}) {
    const std::size_t stop = start == 0 ? 400 : (start == 400 ? 700 : 1000);
    Dataset shard(1);
    std::vector<std::uint64_t> ordinals;
    for (std::size_t i = start; i < stop; ++i) {
      shard.add(d.features(i), d.label(i));
      ordinals.push_back(i);
    }
    const auto part = downsample(shard, spec, 3, ordinals);
    for (std::size_t i = 0; i < part.data.size(); ++i) {
      merged.add(part.data.features(i), part.data.label(i));
    }
  }
  CHECK(merged == whole.data);
}

TEST_CASE("per-label retention frequency over many seeds") {
  const Dataset d = labeled_rows(2000, 2000);
  const auto spec = SamplingSpec::constant({0.1, 0.65});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = downsample(d, spec, seed).manifest;
    const double sd0 = std::sqrt(2000 * 0.1 * 0.9);
    const double sd1 = std::sqrt(2000 * 0.65 * 0.35);
    CHECK(std::abs(static_cast<double>(m.retained_per_label[0]) - 200.0) <= 4.0 * sd0);
    CHECK(std::abs(static_cast<double>(m.retained_per_label[1]) - 1300.0) <= 4.0 * sd1);
  }
}

TEST_CASE("per-instance rates") {
  Dataset d(1, LabelSpace::binary(), true);
  for (int i = 0; i < 1000; ++i) {
    // Even rows are always kept, odd rows never.
    const double rate = i % 2 == 0 ? 1.0 : 0.0;
    d.add(std::vector<double>{static_cast<double>(i)}, i % 3 == 0 ? 1 : 0,
          std::vector<double>{rate, rate});
  }
  const auto result = downsample(d, SamplingSpec::per_instance(2), 9);
  CHECK(result.data.size() == 500);
  CHECK(result.data.has_rates());
  for (std::size_t i = 0; i < result.data.size(); ++i) {
    CHECK(static_cast<int>(result.data.features(i)[0]) % 2 == 0);
  }
  Dataset bare(1);
  bare.add(std::vector<double>{0.0}, 0);
  CHECK_THROWS_AS(downsample(bare, SamplingSpec::per_instance(2), 1), DomainError);
}

TEST_CASE("retains is a pure threshold on one uniform") {
  for (std::uint64_t i = 0; i < 1000; ++i) {
    CHECK(retains(1, i, 1.0));
    CHECK_FALSE(retains(1, i, 0.0));
    if (retains(1, i, 0.3)) CHECK(retains(1, i, 0.31));
  }
}
