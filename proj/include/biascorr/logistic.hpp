#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "biascorr/core.hpp"

namespace biascorr::logistic {

/// Binary logistic hypothesis: logit z = intercept + weights . x.
struct LogisticModel {
  double intercept = 0.0;
  std::vector<double> weights;

  static LogisticModel zeros(std::size_t feature_count) {
    return {0.0, std::vector<double>(feature_count, 0.0)};
  }

  double logit(std::span<const double> x) const;

  bool operator==(const LogisticModel&) const = default;
};

/// ln(e^a + e^b) without overflow. Written generically so tests can
/// instantiate it with dual numbers.
template <class T>
T log_add_exp(const T& a, const T& b) {
  using std::abs;
  using std::exp;
  using std::log1p;
  const bool a_larger = !(a < b);
  const T& hi = a_larger ? a : b;
  return hi + log1p(exp(-abs(a - b)));
}

/// Simplified per-instance loss ln(s_r + e^z) - y z, given ln s_r.
template <class T>
T instance_loss_from_logit(const T& z, double log_ratio, int y) {
  return log_add_exp(z, T(log_ratio)) - static_cast<double>(y) * z;
}

/// Full -ln P(y | x, c, w, s): the simplified loss minus (1 - y) ln s_r.
template <class T>
T neg_log_prob_from_logit(const T& z, double log_ratio, int y) {
  return instance_loss_from_logit(z, log_ratio, y) -
         static_cast<double>(1 - y) * log_ratio;
}

/// e^z / (s_r + e^z) = sigmoid(z - ln s_r), evaluated without overflow.
double target_prob_from_logit(double z, double log_ratio);

/// Unnormalized relative probabilities f(x,0) = 1, f(x,1) = e^z as a
/// general-engine predictor. Overflows for z beyond ~709; use the logistic
/// functions directly for extreme logits.
DiscretePredictor as_predictor(const LogisticModel& m);

/// s(x,0) / s(x,1) for a binary rate pair. Throws DomainError when
/// s(x,1) = 0.
double sample_ratio(std::span<const double> rates);
double sample_ratio(const SamplingSpec& s, const LabeledInstance& inst);

/// Sample ratios materialized once per training row (they do not depend on
/// the parameters). Rejects rows where either rate is zero.
class SampleRatioView {
 public:
  SampleRatioView(const Dataset& data, const SamplingSpec& s);
  /// Same ratio for every row.
  SampleRatioView(std::size_t rows, double ratio);

  std::size_t size() const noexcept { return ratios_.size(); }
  double ratio(std::size_t n) const { return ratios_[n]; }
  double log_ratio(std::size_t n) const { return log_ratios_[n]; }

 private:
  std::vector<double> ratios_;
  std::vector<double> log_ratios_;
};

double target_prob(const LogisticModel& m, std::span<const double> x, double ratio);

/// ln(s_r + e^z) - y z.
double instance_loss(const LogisticModel& m, std::span<const double> x, Label y,
                     double ratio);

/// -ln P(y | x, c, w, s), which keeps the parameter-free (1 - y) ln s_r term.
double instance_neg_log_prob(const LogisticModel& m, std::span<const double> x,
                             Label y, double ratio);

/// Sum of instance losses plus lambda/2 |w|^2. The intercept is not
/// regularized.
double total_loss(const Dataset& data, const SampleRatioView& ratios,
                  const LogisticModel& m, double lambda);
double total_loss(const Dataset& data, const LogisticModel& m,
                  const SamplingSpec& s, double lambda);

struct Gradient {
  double intercept = 0.0;
  std::vector<double> weights;

  /// max(|d_c|, |d_w|_inf)
  double max_norm() const;
};

/// d/dc = sum_n (P_n - y_n),  d/dw_f = sum_n x_nf (P_n - y_n) + lambda w_f,
/// where the target probabilities P_n are computed first.
Gradient gradient(const Dataset& data, const SampleRatioView& ratios,
                  const LogisticModel& m, double lambda);
Gradient gradient(const Dataset& data, const LogisticModel& m,
                  const SamplingSpec& s, double lambda);

/// The same gradient written with e^z / (s_r + e^z) expanded inline in each
/// term instead of pre-computed probabilities.
Gradient gradient_expanded(const Dataset& data, const SampleRatioView& ratios,
                           const LogisticModel& m, double lambda);

/// Probability of y = 1 at deployment. With the default ratio 1 this is the
/// probability under the original, unsampled population.
double predict(const LogisticModel& m, std::span<const double> x,
               double deploy_ratio = 1.0);

// Training ------------------------------------------------------------------

struct TrainConfig {
  double lambda = 0.0;
  /// Fixed step size, or the largest trial step with backtracking.
  double learning_rate = 1.0;
  int max_iters = 10'000;
  /// Stop once the max-norm of the gradient falls below this.
  double grad_tol = 1e-8;
  bool backtracking = true;
};

struct TrainReport {
  LogisticModel model;
  /// Loss at the initial point followed by the loss after each step.
  std::vector<double> loss_trace;
  double final_grad_norm = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Gradient descent on total_loss from the all-zero model.
TrainReport train(const Dataset& data, const SamplingSpec& s,
                  const TrainConfig& config = {});
TrainReport train(const Dataset& data, const SampleRatioView& ratios,
                  const TrainConfig& config = {});

// Evaluation ----------------------------------------------------------------

struct CalibrationBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  double mean_predicted = 0.0;
  double observed_rate = 0.0;
};

/// Equal-width bins over predicted probability.
std::vector<CalibrationBin> calibration_table(const Dataset& data,
                                              const LogisticModel& m,
                                              std::size_t bins = 10,
                                              double deploy_ratio = 1.0);

/// Mean of -ln P(y_n | x_n) under predict(m, x, deploy_ratio).
double mean_nll(const Dataset& data, const LogisticModel& m,
                double deploy_ratio = 1.0);

}  // namespace biascorr::logistic
