#include <cmath>
#include <numeric>

#include "biascorr/errors.hpp"
#include "biascorr/logistic.hpp"

namespace biascorr::logistic {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 200;

double softplus(double u) {
  return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
}

// softplus(u + h) - softplus(u), accurate when h is small relative to u.
double softplus_change(double u, double h) {
  if (std::abs(h) < 1.0) {
    const double sig = target_prob_from_logit(u, 0.0);
    return std::log1p(sig * std::expm1(h));
  }
  return softplus(u + h) - softplus(u);
}

// L(m + t d) - L(m), summed term by term so the change stays resolvable
// long after it drops below the rounding error of L itself.
double loss_change(const Dataset& data, const SampleRatioView& ratios,
                   const LogisticModel& m, const Gradient& direction, double t,
                   double lambda) {
  double change = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    std::span<const double> x = data.features(n);
    double dz = direction.intercept;
    for (std::size_t f = 0; f < x.size(); ++f) dz += direction.weights[f] * x[f];
    const double h = t * dz;
    const double u = m.logit(x) - ratios.log_ratio(n);
    change += softplus_change(u, h) - static_cast<double>(data.label(n)) * h;
  }
  double wd = 0.0;
  double dd = 0.0;
  for (std::size_t f = 0; f < m.weights.size(); ++f) {
    wd += m.weights[f] * direction.weights[f];
    dd += direction.weights[f] * direction.weights[f];
  }
  return change + lambda * t * wd + 0.5 * lambda * t * t * dd;
}

void step(LogisticModel& m, const Gradient& direction, double t) {
  m.intercept += t * direction.intercept;
  for (std::size_t f = 0; f < m.weights.size(); ++f) {
    m.weights[f] += t * direction.weights[f];
  }
}

Gradient negate(Gradient g) {
  g.intercept = -g.intercept;
  for (double& w : g.weights) w = -w;
  return g;
}

double squared_norm(const Gradient& g) {
  return std::inner_product(g.weights.begin(), g.weights.end(), g.weights.begin(),
                            g.intercept * g.intercept);
}

}  // namespace

TrainReport train(const Dataset& data, const SamplingSpec& s, const TrainConfig& config) {
  return train(data, SampleRatioView(data, s), config);
}

TrainReport train(const Dataset& data, const SampleRatioView& ratios,
                  const TrainConfig& config) {
  if (!(config.lambda >= 0.0)) throw DomainError("lambda must be nonnegative");
  if (!(config.grad_tol > 0.0)) throw DomainError("grad_tol must be positive");
  if (!(config.learning_rate > 0.0)) throw DomainError("learning_rate must be positive");
  if (config.max_iters < 1) throw DomainError("max_iters must be positive");

  TrainReport report;
  report.model = LogisticModel::zeros(data.feature_count());
  LogisticModel& m = report.model;
  report.loss_trace.push_back(total_loss(data, ratios, m, config.lambda));

  Gradient g = gradient(data, ratios, m, config.lambda);
  double trial = config.learning_rate;

  while (true) {
    report.final_grad_norm = g.max_norm();
    if (report.final_grad_norm < config.grad_tol) {
      report.converged = true;
      break;
    }
    if (report.iterations >= config.max_iters) break;

    const Gradient direction = negate(g);
    double t = config.learning_rate;
    double change = 0.0;
    if (config.backtracking) {
      const double slope = -squared_norm(g);
      t = trial;
      bool accepted = false;
      for (int halvings = 0; halvings <= kMaxHalvings; ++halvings) {
        change = loss_change(data, ratios, m, direction, t, config.lambda);
        if (change <= kArmijo * t * slope) {
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      // No descent step is resolvable in double precision any more.
      if (!accepted) break;
      trial = std::min(config.learning_rate, 2.0 * t);
    } else {
      change = loss_change(data, ratios, m, direction, t, config.lambda);
    }

    step(m, direction, t);
    report.loss_trace.push_back(report.loss_trace.back() + change);
    ++report.iterations;
    g = gradient(data, ratios, m, config.lambda);
  }
  return report;
}

}  // namespace biascorr::logistic
