#include "biascorr/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>

#include "biascorr/errors.hpp"

namespace biascorr {

namespace {

void check_rates(std::span<const double> rates, std::size_t label_count) {
  if (rates.size() != label_count) {
    throw DomainError("expected " + std::to_string(label_count) +
                      " sampling rates, got " + std::to_string(rates.size()));
  }
  for (std::size_t y = 0; y < rates.size(); ++y) {
    if (!(rates[y] >= 0.0 && rates[y] <= 1.0)) {
      throw DomainError("sampling rate for label " + std::to_string(y) +
                        " is outside [0, 1]: " + std::to_string(rates[y]));
    }
  }
}

// Draws candidate labels by inverse CDF over the unnormalized weights.
class CandidateSampler {
 public:
  explicit CandidateSampler(std::vector<double> weights)
      : cumulative_(std::move(weights)) {
    double acc = 0.0;
    for (double& w : cumulative_) {
      acc += w;
      w = acc;
    }
    total_ = acc;
    if (!(total_ > 0.0)) throw ZeroMassError("relative probabilities sum to zero");
    last_positive_ = 0;
    for (std::size_t y = 0; y < cumulative_.size(); ++y) {
      double prev = y == 0 ? 0.0 : cumulative_[y - 1];
      if (cumulative_[y] > prev) last_positive_ = y;
    }
  }

  Label operator()(Rng& rng) const {
    double target = rng.uniform() * total_;
    for (std::size_t y = 0; y < last_positive_; ++y) {
      if (target < cumulative_[y]) return y;
    }
    return last_positive_;
  }

 private:
  std::vector<double> cumulative_;
  double total_ = 0.0;
  Label last_positive_ = 0;
};

Label draw_accepted(const CandidateSampler& candidates,
                    std::span<const double> rates, Rng& rng,
                    std::uint64_t max_rejections) {
  for (std::uint64_t rejected = 0;; ++rejected) {
    if (rejected >= max_rejections) {
      throw RejectionLimitError("no candidate accepted after " +
                                std::to_string(max_rejections) +
                                " consecutive rejections");
    }
    Label candidate = candidates(rng);
    if (rng.uniform() < rates[candidate]) return candidate;
  }
}

}  // namespace

// LabelSpace ---------------------------------------------------------------

LabelSpace::LabelSpace(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.size() < 2) throw DomainError("a label space needs at least two labels");
  std::set<std::string> seen(names_.begin(), names_.end());
  if (seen.size() != names_.size()) throw DomainError("label names must be distinct");
}

LabelSpace LabelSpace::binary() { return LabelSpace({"0", "1"}); }

bool LabelSpace::is_binary() const noexcept {
  return names_.size() == 2 && names_[0] == "0" && names_[1] == "1";
}

// Dataset ------------------------------------------------------------------

Dataset::Dataset(std::size_t feature_count, LabelSpace labels, bool has_rates)
    : feature_count_(feature_count),
      label_space_(std::move(labels)),
      has_rates_(has_rates) {}

void Dataset::add(std::span<const double> x, Label y,
                  std::span<const double> rates) {
  const std::string row = "row " + std::to_string(size());
  if (x.size() != feature_count_) {
    throw DomainError(row + ": expected " + std::to_string(feature_count_) +
                      " features, got " + std::to_string(x.size()));
  }
  for (std::size_t f = 0; f < x.size(); ++f) {
    if (!std::isfinite(x[f])) {
      throw DomainError(row + ": feature " + std::to_string(f) + " is not finite");
    }
  }
  if (y >= label_space_.size()) {
    throw DomainError(row + ": label " + std::to_string(y) + " is outside the label space");
  }
  if (has_rates_) {
    check_rates(rates, label_space_.size());
  } else if (!rates.empty()) {
    throw DomainError(row + ": dataset has no sampling-rate columns");
  }
  features_.insert(features_.end(), x.begin(), x.end());
  labels_.push_back(y);
  rates_.insert(rates_.end(), rates.begin(), rates.end());
}

void Dataset::reserve(std::size_t rows) {
  features_.reserve(rows * feature_count_);
  labels_.reserve(rows);
  if (has_rates_) rates_.reserve(rows * label_space_.size());
}

std::span<const double> Dataset::features(std::size_t i) const {
  if (i >= size()) throw std::out_of_range("Dataset::features");
  return std::span<const double>(features_).subspan(i * feature_count_, feature_count_);
}

std::span<const double> Dataset::rates(std::size_t i) const {
  if (i >= size()) throw std::out_of_range("Dataset::rates");
  if (!has_rates_) return {};
  const std::size_t k = label_space_.size();
  return std::span<const double>(rates_).subspan(i * k, k);
}

// DiscretePredictor --------------------------------------------------------

DiscretePredictor::DiscretePredictor(std::size_t label_count, Function rel_prob)
    : label_count_(label_count), fn_(std::move(rel_prob)) {
  if (label_count_ < 2) throw DomainError("a predictor needs at least two labels");
  if (!fn_) throw DomainError("predictor function is empty");
}

DiscretePredictor DiscretePredictor::tabulated(std::vector<double> weights) {
  const std::size_t k = weights.size();
  return DiscretePredictor(k, [w = std::move(weights)](std::span<const double>, Label y) {
    return w[y];
  });
}

double DiscretePredictor::rel_prob(std::span<const double> x, Label y) const {
  if (y >= label_count_) throw DomainError("label " + std::to_string(y) + " out of range");
  double v = fn_(x, y);
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw DomainError("relative probability for label " + std::to_string(y) +
                      " is negative or not finite");
  }
  return v;
}

std::vector<double> DiscretePredictor::rel_probs(std::span<const double> x) const {
  std::vector<double> out(label_count_);
  for (Label y = 0; y < label_count_; ++y) out[y] = rel_prob(x, y);
  return out;
}

DiscretePredictor DiscretePredictor::scaled(double k) const {
  if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("scale must be positive and finite");
  return DiscretePredictor(label_count_, [fn = fn_, k](std::span<const double> x, Label y) {
    return k * fn(x, y);
  });
}

// SamplingSpec -------------------------------------------------------------

SamplingSpec SamplingSpec::constant(std::vector<double> rates) {
  if (rates.size() < 2) throw DomainError("a sampling spec needs at least two labels");
  check_rates(rates, rates.size());
  const std::size_t k = rates.size();
  return SamplingSpec(Mode::constant, k, std::move(rates));
}

SamplingSpec SamplingSpec::per_instance(std::size_t label_count) {
  if (label_count < 2) throw DomainError("a sampling spec needs at least two labels");
  return SamplingSpec(Mode::per_instance, label_count, {});
}

std::span<const double> SamplingSpec::rates_for(const LabeledInstance& inst) const {
  if (mode_ == Mode::constant) return rates_;
  if (inst.rates.size() != label_count_) {
    throw DomainError("per-instance sampling requires " + std::to_string(label_count_) +
                      " rate columns on every row");
  }
  return inst.rates;
}

// Operations ---------------------------------------------------------------

std::vector<double> normalize(const DiscretePredictor& pred, std::span<const double> x) {
  std::vector<double> p = pred.rel_probs(x);
  double total = 0.0;
  for (double v : p) total += v;
  if (!(total > 0.0)) throw ZeroMassError("relative probabilities sum to zero");
  for (double& v : p) v /= total;
  return p;
}

std::vector<double> corrected_distribution(const DiscretePredictor& pred,
                                           std::span<const double> rates,
                                           std::span<const double> x) {
  check_rates(rates, pred.label_count());
  std::vector<double> p = pred.rel_probs(x);
  double total = 0.0;
  for (std::size_t y = 0; y < p.size(); ++y) {
    p[y] *= rates[y];
    total += p[y];
  }
  if (!(total > 0.0)) {
    throw ZeroMassError("sampling removes all label mass at this input");
  }
  for (double& v : p) v /= total;
  return p;
}

double corrected_prob(const DiscretePredictor& pred, std::span<const double> rates,
                      std::span<const double> x, Label y) {
  if (y >= pred.label_count()) throw DomainError("label " + std::to_string(y) + " out of range");
  return corrected_distribution(pred, rates, x)[y];
}

double corrected_prob(const DiscretePredictor& pred, const SamplingSpec& s,
                      const LabeledInstance& inst, Label y) {
  return corrected_prob(pred, s.rates_for(inst), inst.x, y);
}

double corrected_nll(const Dataset& data, const DiscretePredictor& pred,
                     const SamplingSpec& s, double regularization) {
  if (data.label_space().size() != pred.label_count() ||
      s.label_count() != pred.label_count()) {
    throw DomainError("dataset, predictor and sampling spec disagree on label count");
  }
  double loss = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const LabeledInstance inst = data.instance(n);
    std::span<const double> rates = s.rates_for(inst);
    check_rates(rates, pred.label_count());
    if (rates[inst.y] == 0.0) {
      throw DomainError("row " + std::to_string(n) +
                        ": observed label has zero sampling rate");
    }
    std::vector<double> f = pred.rel_probs(inst.x);
    double mass = 0.0;
    for (std::size_t y = 0; y < f.size(); ++y) mass += f[y] * rates[y];
    if (!(mass > 0.0)) {
      throw ZeroMassError("row " + std::to_string(n) +
                          ": sampling removes all label mass");
    }
    if (f[inst.y] == 0.0) {
      throw DomainError("row " + std::to_string(n) +
                        ": observed label has zero relative probability");
    }
    loss += -std::log(f[inst.y]) - std::log(rates[inst.y]) + std::log(mass);
  }
  return loss + regularization;
}

Label generative_draw(const DiscretePredictor& pred, std::span<const double> rates,
                      std::span<const double> x, Rng& rng,
                      std::uint64_t max_rejections) {
  check_rates(rates, pred.label_count());
  CandidateSampler candidates(pred.rel_probs(x));
  return draw_accepted(candidates, rates, rng, max_rejections);
}

std::vector<MonteCarloEstimate> monte_carlo_corrected_distribution(
    const DiscretePredictor& pred, std::span<const double> rates,
    std::span<const double> x, std::uint64_t trials, Rng& rng,
    std::uint64_t max_rejections) {
  if (trials < 1) throw DomainError("trials must be at least 1");
  check_rates(rates, pred.label_count());
  CandidateSampler candidates(pred.rel_probs(x));
  std::vector<std::uint64_t> counts(pred.label_count(), 0);
  for (std::uint64_t t = 0; t < trials; ++t) {
    ++counts[draw_accepted(candidates, rates, rng, max_rejections)];
  }
  std::vector<MonteCarloEstimate> out;
  out.reserve(counts.size());
  const double n = static_cast<double>(trials);
  for (std::uint64_t c : counts) {
    double p = static_cast<double>(c) / n;
    out.push_back({p, std::sqrt(p * (1.0 - p) / n)});
  }
  return out;
}

MonteCarloEstimate monte_carlo_corrected_prob(
    const DiscretePredictor& pred, std::span<const double> rates,
    std::span<const double> x, Label y, std::uint64_t trials, Rng& rng,
    std::uint64_t max_rejections) {
  if (y >= pred.label_count()) throw DomainError("label " + std::to_string(y) + " out of range");
  return monte_carlo_corrected_distribution(pred, rates, x, trials, rng,
                                            max_rejections)[y];
}

}  // namespace biascorr
