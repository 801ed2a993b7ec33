#include "biascorr/datagen.hpp"

#include <cmath>
#include <numbers>

#include "biascorr/errors.hpp"
#include "biascorr/logistic.hpp"
#include "biascorr/random.hpp"

namespace biascorr::datagen {

namespace {
constexpr std::uint64_t kLabelStream = 0x6c6162656cULL;  // "label"
}  // namespace

double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
  const double u1 = counter_uniform(seed, 2 * stream, counter);
  const double u2 = counter_uniform(seed, 2 * stream + 1, counter);
  return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Dataset generate(const GenSpec& spec) {
  if (spec.n < 1) throw DomainError("n must be at least 1");
  if (spec.true_weights.size() != spec.feature_count) {
    throw DomainError("true_weights length must equal feature_count");
  }
  Dataset data(spec.feature_count);
  data.reserve(spec.n);
  std::vector<double> x(spec.feature_count);
  for (std::size_t i = 0; i < spec.n; ++i) {
    double z = spec.true_intercept;
    for (std::size_t f = 0; f < spec.feature_count; ++f) {
      x[f] = counter_normal(spec.seed, f, i);
      z += spec.true_weights[f] * x[f];
    }
    const double p = logistic::target_prob_from_logit(z, 0.0);
    const Label y = counter_uniform(spec.seed, kLabelStream, i) < p ? 1 : 0;
    data.add(x, y);
  }
  return data;
}

}  // namespace biascorr::datagen
