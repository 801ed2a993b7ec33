#pragma once

// Random logistic problems shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <vector>

#include "biascorr/core.hpp"
#include "biascorr/logistic.hpp"
#include "oracles.hpp"

namespace fixtures {

using namespace biascorr;
using namespace biascorr::logistic;

struct Problem {
  Dataset data{1};
  std::vector<double> ratios;
  LogisticModel model;
  double lambda = 0.0;
};

// Random problem in the ranges the gradient contract is stated for.
inline Problem random_problem(Rng& rng) {
  static constexpr double kLambdas[] = {0.0, 0.1, 10.0};
  const auto features = 1 + static_cast<std::size_t>(rng.uniform() * 8.0);
  const auto rows = 1 + static_cast<std::size_t>(rng.uniform() * 64.0);
  Problem p{Dataset(features), {}, LogisticModel::zeros(features),
            kLambdas[static_cast<int>(rng.uniform() * 3.0)]};
  std::vector<double> x(features);
  for (std::size_t n = 0; n < rows; ++n) {
    for (double& v : x) v = rng.uniform(-2.0, 2.0);
    p.data.add(x, rng.uniform() < 0.5 ? 0 : 1);
    p.ratios.push_back(std::exp(rng.uniform(std::log(0.01), std::log(100.0))));
  }
  p.model.intercept = rng.uniform(-2.0, 2.0);
  for (double& w : p.model.weights) w = rng.uniform(-1.5, 1.5);
  return p;
}

// Loss as a function of the flattened parameters (c, w...) for one problem.
inline double loss_at(const Problem& p, const std::vector<double>& params) {
  LogisticModel m{params[0], std::vector<double>(params.begin() + 1, params.end())};
  double loss = 0.0;
  for (std::size_t n = 0; n < p.data.size(); ++n) {
    loss += instance_loss(m, p.data.features(n), p.data.label(n), p.ratios[n]);
  }
  double ww = 0.0;
  for (double w : m.weights) ww += w * w;
  return loss + 0.5 * p.lambda * ww;
}

inline std::vector<double> flatten(const LogisticModel& m) {
  std::vector<double> v{m.intercept};
  v.insert(v.end(), m.weights.begin(), m.weights.end());
  return v;
}

inline std::vector<double> flatten(const Gradient& g) {
  std::vector<double> v{g.intercept};
  v.insert(v.end(), g.weights.begin(), g.weights.end());
  return v;
}

inline SampleRatioView view_of(const Problem& p) {
  Dataset with_rates(p.data.feature_count(), LabelSpace::binary(), true);
  for (std::size_t n = 0; n < p.data.size(); ++n) {
    with_rates.add(p.data.features(n), p.data.label(n),
                   std::vector<double>{std::min(1.0, p.ratios[n]),
                                       std::min(1.0, 1.0 / p.ratios[n])});
  }
  return SampleRatioView(with_rates, SamplingSpec::per_instance(2));
}

// Exact gradient of the full -ln P form by forward-mode differentiation.
inline std::vector<double> dual_gradient_full_form(const Problem& p) {
  const auto params = flatten(p.model);
  std::vector<double> grad(params.size(), 0.0);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double total = 0.0;
    for (std::size_t n = 0; n < p.data.size(); ++n) {
      const auto x = p.data.features(n);
      oracle::Dual z(params[0], i == 0 ? 1.0 : 0.0);
      for (std::size_t f = 0; f < x.size(); ++f) {
        z = z + oracle::Dual(params[f + 1], i == f + 1 ? 1.0 : 0.0) * x[f];
      }
      total += neg_log_prob_from_logit(z, std::log(p.ratios[n]),
                                       static_cast<int>(p.data.label(n)))
                   .d;
    }
    if (i > 0) total += p.lambda * params[i];
    grad[i] = total;
  }
  return grad;
}


}  // namespace fixtures
