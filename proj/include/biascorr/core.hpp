#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "biascorr/random.hpp"

namespace biascorr {

/// Labels are indices into a LabelSpace.
using Label = std::size_t;

/// Dense feature row. Owned vectors are used for construction; operations
/// take `std::span<const double>` views.
using FeatureVector = std::vector<double>;

/// Ordered finite set of label names (K >= 2, distinct).
class LabelSpace {
 public:
  explicit LabelSpace(std::vector<std::string> names);

  /// The binary space {"0", "1"} in that order.
  static LabelSpace binary();

  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(Label y) const { return names_.at(y); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  bool is_binary() const noexcept;

  bool operator==(const LabelSpace&) const = default;

 private:
  std::vector<std::string> names_;
};

/// Non-owning view of one row of a Dataset.
struct LabeledInstance {
  std::span<const double> x;
  Label y;
  /// Per-label inclusion rates for this row; empty when the dataset carries
  /// no rate columns.
  std::span<const double> rates;
};

/// Rows of (features, label, optional per-label rates) stored contiguously.
/// Every mutation validates the row, so a Dataset is always consistent with
/// its declared feature count and label space.
class Dataset {
 public:
  explicit Dataset(std::size_t feature_count,
                   LabelSpace labels = LabelSpace::binary(),
                   bool has_rates = false);

  /// Appends a row. `rates` must be empty unless the dataset carries rate
  /// columns, in which case it must hold one value in [0,1] per label.
  void add(std::span<const double> x, Label y,
           std::span<const double> rates = {});
  void reserve(std::size_t rows);

  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  std::size_t feature_count() const noexcept { return feature_count_; }
  const LabelSpace& label_space() const noexcept { return label_space_; }
  bool has_rates() const noexcept { return has_rates_; }

  std::span<const double> features(std::size_t i) const;
  Label label(std::size_t i) const { return labels_.at(i); }
  std::span<const double> rates(std::size_t i) const;
  LabeledInstance instance(std::size_t i) const {
    return {features(i), label(i), rates(i)};
  }

  bool operator==(const Dataset&) const = default;

 private:
  std::size_t feature_count_;
  LabelSpace label_space_;
  bool has_rates_;
  std::vector<double> features_;
  std::vector<Label> labels_;
  std::vector<double> rates_;
};

/// Relative (unnormalized) probability function over a finite label set.
class DiscretePredictor {
 public:
  using Function = std::function<double(std::span<const double>, Label)>;

  DiscretePredictor(std::size_t label_count, Function rel_prob);

  /// Predictor whose relative probabilities do not depend on the input.
  static DiscretePredictor tabulated(std::vector<double> weights);

  std::size_t label_count() const noexcept { return label_count_; }

  /// Throws DomainError for negative or non-finite values.
  double rel_prob(std::span<const double> x, Label y) const;
  std::vector<double> rel_probs(std::span<const double> x) const;

  /// Same predictor with every relative probability multiplied by `k` > 0.
  DiscretePredictor scaled(double k) const;

 private:
  std::size_t label_count_;
  Function fn_;
};

/// Per-instance inclusion probability s(x, y). Either one rate per label for
/// every instance, or rates read row by row from the dataset's columns.
class SamplingSpec {
 public:
  enum class Mode { constant, per_instance };

  static SamplingSpec constant(std::vector<double> rates);
  static SamplingSpec per_instance(std::size_t label_count);

  Mode mode() const noexcept { return mode_; }
  std::size_t label_count() const noexcept { return label_count_; }
  /// Empty in per-instance mode.
  std::span<const double> constant_rates() const noexcept { return rates_; }

  /// Rates applying to `inst`. Throws DomainError in per-instance mode when
  /// the row carries no rates.
  std::span<const double> rates_for(const LabeledInstance& inst) const;
  double rate(const LabeledInstance& inst, Label y) const {
    return rates_for(inst)[y];
  }

  bool operator==(const SamplingSpec&) const = default;

 private:
  SamplingSpec(Mode mode, std::size_t label_count, std::vector<double> rates)
      : mode_(mode), label_count_(label_count), rates_(std::move(rates)) {}

  Mode mode_;
  std::size_t label_count_;
  std::vector<double> rates_;
};

inline constexpr std::uint64_t kDefaultMaxRejections = 1'000'000;

/// f(x,.) divided by its sum over labels. Throws ZeroMassError when every
/// relative probability is zero.
std::vector<double> normalize(const DiscretePredictor& pred,
                              std::span<const double> x);

/// Label distribution of the sampled data at x:
///   f(x,y) s(x,y) / sum_y' f(x,y') s(x,y').
/// `rates` holds s(x,.) for every label.
std::vector<double> corrected_distribution(const DiscretePredictor& pred,
                                           std::span<const double> rates,
                                           std::span<const double> x);

double corrected_prob(const DiscretePredictor& pred,
                      std::span<const double> rates,
                      std::span<const double> x, Label y);

double corrected_prob(const DiscretePredictor& pred, const SamplingSpec& s,
                      const LabeledInstance& inst, Label y);

/// Bias-corrected negative log-likelihood
///   sum_n [ -ln f(x_n,y_n) - ln s(x_n,y_n) + ln sum_y f(x_n,y) s(x_n,y) ] + r
/// where `regularization` is the already-evaluated r(h).
double corrected_nll(const Dataset& data, const DiscretePredictor& pred,
                     const SamplingSpec& s, double regularization = 0.0);

/// One run of the propose-then-accept process: draw a candidate from the
/// normalized predictor, keep it with probability s(x, candidate), otherwise
/// propose again. Throws RejectionLimitError after `max_rejections`
/// consecutive rejections.
Label generative_draw(const DiscretePredictor& pred,
                      std::span<const double> rates,
                      std::span<const double> x, Rng& rng,
                      std::uint64_t max_rejections = kDefaultMaxRejections);

struct MonteCarloEstimate {
  double estimate;
  double standard_error;
};

/// Empirical frequency of `y` over `trials` generative draws, with binomial
/// standard error sqrt(p(1-p)/trials).
MonteCarloEstimate monte_carlo_corrected_prob(
    const DiscretePredictor& pred, std::span<const double> rates,
    std::span<const double> x, Label y, std::uint64_t trials, Rng& rng,
    std::uint64_t max_rejections = kDefaultMaxRejections);

/// Same as above for every label at once, from a single run of draws.
std::vector<MonteCarloEstimate> monte_carlo_corrected_distribution(
    const DiscretePredictor& pred, std::span<const double> rates,
    std::span<const double> x, std::uint64_t trials, Rng& rng,
    std::uint64_t max_rejections = kDefaultMaxRejections);

}  // namespace biascorr
