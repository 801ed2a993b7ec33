#include "biascorr/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "biascorr/errors.hpp"

namespace biascorr::logistic {

namespace {

void check_binary(const Dataset& data) {
  if (!data.label_space().is_binary()) {
    throw DomainError("logistic regression requires the binary label space {0, 1}");
  }
}

void check_shapes(const Dataset& data, const SampleRatioView& ratios,
                  const LogisticModel& m) {
  check_binary(data);
  if (m.weights.size() != data.feature_count()) {
    throw DomainError("model has " + std::to_string(m.weights.size()) +
                      " weights but the dataset has " +
                      std::to_string(data.feature_count()) + " features");
  }
  if (ratios.size() != data.size()) {
    throw DomainError("sample ratio view does not match the dataset size");
  }
}

void check_ratio(double ratio) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) {
    throw DomainError("sample ratio must be positive and finite, got " +
                      std::to_string(ratio));
  }
}

double regularizer(const LogisticModel& m, double lambda) {
  double ww = 0.0;
  for (double w : m.weights) ww += w * w;
  return 0.5 * lambda * ww;
}

}  // namespace

double LogisticModel::logit(std::span<const double> x) const {
  if (x.size() != weights.size()) {
    throw DomainError("feature vector has " + std::to_string(x.size()) +
                      " entries, model expects " + std::to_string(weights.size()));
  }
  double z = intercept;
  for (std::size_t f = 0; f < x.size(); ++f) z += weights[f] * x[f];
  return z;
}

double target_prob_from_logit(double z, double log_ratio) {
  const double u = z - log_ratio;
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

DiscretePredictor as_predictor(const LogisticModel& m) {
  return DiscretePredictor(2, [m](std::span<const double> x, Label y) {
    return y == 1 ? std::exp(m.logit(x)) : 1.0;
  });
}

double sample_ratio(std::span<const double> rates) {
  if (rates.size() != 2) throw DomainError("sample ratio needs exactly two rates");
  if (!(rates[0] >= 0.0 && rates[0] <= 1.0 && rates[1] >= 0.0 && rates[1] <= 1.0)) {
    throw DomainError("sampling rates must lie in [0, 1]");
  }
  if (rates[1] == 0.0) {
    throw DomainError("sample ratio undefined: label-1 sampling rate is zero");
  }
  return rates[0] / rates[1];
}

double sample_ratio(const SamplingSpec& s, const LabeledInstance& inst) {
  return sample_ratio(s.rates_for(inst));
}

SampleRatioView::SampleRatioView(const Dataset& data, const SamplingSpec& s) {
  check_binary(data);
  if (s.label_count() != 2) throw DomainError("sampling spec must be binary");
  ratios_.reserve(data.size());
  log_ratios_.reserve(data.size());
  for (std::size_t n = 0; n < data.size(); ++n) {
    std::span<const double> rates = s.rates_for(data.instance(n));
    double r = sample_ratio(rates);
    if (rates[0] == 0.0) {
      throw DomainError("row " + std::to_string(n) +
                        ": label-0 sampling rate is zero, cannot train");
    }
    ratios_.push_back(r);
    log_ratios_.push_back(std::log(r));
  }
}

SampleRatioView::SampleRatioView(std::size_t rows, double ratio)
    : ratios_(rows, ratio), log_ratios_(rows, 0.0) {
  check_ratio(ratio);
  std::fill(log_ratios_.begin(), log_ratios_.end(), std::log(ratio));
}

double target_prob(const LogisticModel& m, std::span<const double> x, double ratio) {
  check_ratio(ratio);
  return target_prob_from_logit(m.logit(x), std::log(ratio));
}

double instance_loss(const LogisticModel& m, std::span<const double> x, Label y,
                     double ratio) {
  check_ratio(ratio);
  if (y > 1) throw DomainError("label must be 0 or 1");
  return instance_loss_from_logit(m.logit(x), std::log(ratio), static_cast<int>(y));
}

double instance_neg_log_prob(const LogisticModel& m, std::span<const double> x,
                             Label y, double ratio) {
  check_ratio(ratio);
  if (y > 1) throw DomainError("label must be 0 or 1");
  return neg_log_prob_from_logit(m.logit(x), std::log(ratio), static_cast<int>(y));
}

double total_loss(const Dataset& data, const SampleRatioView& ratios,
                  const LogisticModel& m, double lambda) {
  check_shapes(data, ratios, m);
  double loss = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    loss += instance_loss_from_logit(m.logit(data.features(n)), ratios.log_ratio(n),
                                     static_cast<int>(data.label(n)));
  }
  return loss + regularizer(m, lambda);
}

double total_loss(const Dataset& data, const LogisticModel& m,
                  const SamplingSpec& s, double lambda) {
  return total_loss(data, SampleRatioView(data, s), m, lambda);
}

double Gradient::max_norm() const {
  double norm = std::abs(intercept);
  for (double w : weights) norm = std::max(norm, std::abs(w));
  return norm;
}

Gradient gradient(const Dataset& data, const SampleRatioView& ratios,
                  const LogisticModel& m, double lambda) {
  check_shapes(data, ratios, m);
  std::vector<double> residual(data.size());
  for (std::size_t n = 0; n < data.size(); ++n) {
    double p = target_prob_from_logit(m.logit(data.features(n)), ratios.log_ratio(n));
    residual[n] = p - static_cast<double>(data.label(n));
  }
  Gradient g{0.0, std::vector<double>(data.feature_count(), 0.0)};
  for (std::size_t n = 0; n < data.size(); ++n) {
    std::span<const double> x = data.features(n);
    g.intercept += residual[n];
    for (std::size_t f = 0; f < x.size(); ++f) g.weights[f] += x[f] * residual[n];
  }
  for (std::size_t f = 0; f < g.weights.size(); ++f) g.weights[f] += lambda * m.weights[f];
  return g;
}

Gradient gradient(const Dataset& data, const LogisticModel& m,
                  const SamplingSpec& s, double lambda) {
  return gradient(data, SampleRatioView(data, s), m, lambda);
}

Gradient gradient_expanded(const Dataset& data, const SampleRatioView& ratios,
                           const LogisticModel& m, double lambda) {
  check_shapes(data, ratios, m);
  Gradient g{0.0, std::vector<double>(data.feature_count(), 0.0)};
  for (std::size_t n = 0; n < data.size(); ++n) {
    std::span<const double> x = data.features(n);
    const double z = m.logit(x);
    const double log_ratio = ratios.log_ratio(n);
    // Both exponentials shifted by max(z, ln s_r).
    const double shift = std::max(z, log_ratio);
    const double ez = std::exp(z - shift);
    const double er = std::exp(log_ratio - shift);
    const double term = ez / (er + ez) - static_cast<double>(data.label(n));
    g.intercept += term;
    for (std::size_t f = 0; f < x.size(); ++f) g.weights[f] += x[f] * term;
  }
  for (std::size_t f = 0; f < g.weights.size(); ++f) g.weights[f] += lambda * m.weights[f];
  return g;
}

double predict(const LogisticModel& m, std::span<const double> x, double deploy_ratio) {
  return target_prob(m, x, deploy_ratio);
}

std::vector<CalibrationBin> calibration_table(const Dataset& data,
                                              const LogisticModel& m,
                                              std::size_t bins, double deploy_ratio) {
  check_binary(data);
  if (bins == 0) throw DomainError("calibration needs at least one bin");
  std::vector<CalibrationBin> table(bins);
  std::vector<double> predicted_sum(bins, 0.0);
  std::vector<double> positive(bins, 0.0);
  const double width = 1.0 / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    table[b].lower = static_cast<double>(b) * width;
    table[b].upper = static_cast<double>(b + 1) * width;
  }
  for (std::size_t n = 0; n < data.size(); ++n) {
    double p = predict(m, data.features(n), deploy_ratio);
    auto b = std::min(bins - 1, static_cast<std::size_t>(p * static_cast<double>(bins)));
    ++table[b].count;
    predicted_sum[b] += p;
    positive[b] += static_cast<double>(data.label(n));
  }
  for (std::size_t b = 0; b < bins; ++b) {
    if (table[b].count == 0) continue;
    const double c = static_cast<double>(table[b].count);
    table[b].mean_predicted = predicted_sum[b] / c;
    table[b].observed_rate = positive[b] / c;
  }
  return table;
}

double mean_nll(const Dataset& data, const LogisticModel& m, double deploy_ratio) {
  check_binary(data);
  if (data.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    total += instance_neg_log_prob(m, data.features(n), data.label(n), deploy_ratio);
  }
  return total / static_cast<double>(data.size());
}

}  // namespace biascorr::logistic
