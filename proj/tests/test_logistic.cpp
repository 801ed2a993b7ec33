#include <algorithm>
#include <cmath>
#include <vector>

#include "biascorr/core.hpp"
#include "biascorr/errors.hpp"
#include "biascorr/logistic.hpp"
#include "doctest.h"
#include "logistic_fixtures.hpp"
#include "oracles.hpp"

using namespace biascorr;
using namespace biascorr::logistic;
using namespace fixtures;

TEST_CASE("sample_ratio") {
  CHECK(sample_ratio(std::vector<double>{0.25, 1.0}) == 0.25);
  CHECK(sample_ratio(std::vector<double>{0.3, 0.3}) == 1.0);
  CHECK(sample_ratio(std::vector<double>{0.1, 1.0}) == 0.1);
  CHECK_THROWS_AS(sample_ratio(std::vector<double>{0.5, 0.0}), DomainError);
  CHECK_THROWS_AS(sample_ratio(std::vector<double>{0.5, 1.5}), DomainError);

  Dataset d(1);
  d.add(std::vector<double>{0.0}, 0);
  CHECK_THROWS_AS(SampleRatioView(d, SamplingSpec::constant({0.0, 1.0})), DomainError);
  CHECK_THROWS_AS(SampleRatioView(d, SamplingSpec::constant({1.0, 0.0})), DomainError);
  SampleRatioView view(d, SamplingSpec::constant({0.25, 0.5}));
  CHECK(view.ratio(0) == 0.5);
  CHECK(view.log_ratio(0) == doctest::Approx(std::log(0.5)));
}

TEST_CASE("target_prob") {
  const auto zero = LogisticModel::zeros(2);
  const std::vector<double> x{0.3, -1.2};
  CHECK(target_prob(zero, x, 1.0) == 0.5);
  CHECK(target_prob(zero, x, 3.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS_AS(target_prob(zero, x, 0.0), DomainError);

  SUBCASE("ratio one is the plain sigmoid") {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
      LogisticModel m{rng.uniform(-5, 5), {rng.uniform(-3, 3), rng.uniform(-3, 3)}};
      const std::vector<double> xs{rng.uniform(-3, 3), rng.uniform(-3, 3)};
      const double z = m.intercept + m.weights[0] * xs[0] + m.weights[1] * xs[1];
      CHECK(target_prob(m, xs, 1.0) ==
            doctest::Approx(std::exp(z) / (1.0 + std::exp(z))).epsilon(1e-13));
    }
  }
  SUBCASE("extreme logits") {
    for (double z : {-800.0, -710.0, 710.0, 800.0}) {
      LogisticModel m{z, {}};
      for (double r : {1e-8, 1.0, 1e8}) {
        const double p = target_prob(m, {}, r);
        CHECK(std::isfinite(p));
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
      }
    }
    CHECK(target_prob(LogisticModel{800.0, {}}, {}, 1.0) == 1.0);
    CHECK(target_prob(LogisticModel{-800.0, {}}, {}, 1.0) == 0.0);
  }
  SUBCASE("constant ratio shifts the intercept by -ln s_r") {
    Rng rng(4);
    for (int i = 0; i < 100; ++i) {
      const double r = std::exp(rng.uniform(-5, 5));
      LogisticModel m{rng.uniform(-4, 4), {rng.uniform(-2, 2)}};
      LogisticModel shifted{m.intercept - std::log(r), m.weights};
      const std::vector<double> xs{rng.uniform(-3, 3)};
      CHECK(target_prob(m, xs, r) == doctest::Approx(predict(shifted, xs)).epsilon(1e-12));
    }
  }
}

TEST_CASE("instance_loss") {
  const auto zero = LogisticModel::zeros(1);
  const std::vector<double> x{0.7};
  CHECK(instance_loss(zero, x, 1, 1.0) == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(instance_loss(zero, x, 0, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  // ln(1 + e^-1000) underflows to zero in double precision.
  CHECK(instance_loss(LogisticModel{1000.0, {0.0}}, x, 1, 1.0) == 0.0);
  CHECK(instance_loss(LogisticModel{-1000.0, {0.0}}, x, 1, 1.0) == doctest::Approx(1000.0));
  CHECK(instance_loss(LogisticModel{1000.0, {0.0}}, x, 0, 1.0) == doctest::Approx(1000.0));
  CHECK_THROWS_AS(instance_loss(zero, x, 2, 1.0), DomainError);
}

TEST_CASE("total_loss") {
  const auto ones = SamplingSpec::constant({1.0, 1.0});
  SUBCASE("empty data") {
    CHECK(total_loss(Dataset(2), LogisticModel::zeros(2), ones, 1.0) == 0.0);
  }
  SUBCASE("one instance at the zero model") {
    for (Label y : {0, 1}) {
      Dataset d(1);
      d.add(std::vector<double>{2.5}, y);
      CHECK(total_loss(d, LogisticModel::zeros(1), ones, 3.0) ==
            doctest::Approx(std::log(2.0)).epsilon(1e-15));
    }
  }
  SUBCASE("regularizer only, intercept excluded") {
    CHECK(total_loss(Dataset(2), LogisticModel{7.0, {3.0, 4.0}}, ones, 2.0) == 25.0);
  }
  SUBCASE("non-binary labels are rejected") {
    Dataset d(1, LabelSpace({"a", "b", "c"}));
    CHECK_THROWS_AS(total_loss(d, LogisticModel::zeros(1), SamplingSpec::constant({1, 1}), 0.0),
                    DomainError);
  }
  SUBCASE("shape mismatch") {
    Dataset d(2);
    CHECK_THROWS_AS(total_loss(d, LogisticModel::zeros(3), ones, 0.0), DomainError);
  }
}

TEST_CASE("gradient worked examples") {
  SUBCASE("single instance at the zero model") {
    Dataset d(1);
    d.add(std::vector<double>{1.0}, 1);
    auto g = gradient(d, LogisticModel::zeros(1), SamplingSpec::constant({1.0, 1.0}), 0.0);
    CHECK(g.intercept == -0.5);
    CHECK(g.weights[0] == -0.5);
  }
  SUBCASE("perfect fit is stationary") {
    // Logits large enough that the target probabilities round to exactly 0 or 1.
    Dataset d(1);
    d.add(std::vector<double>{100.0}, 1);
    d.add(std::vector<double>{-100.0}, 0);
    d.add(std::vector<double>{80.0}, 1);
    LogisticModel m{0.0, {10.0}};
    SampleRatioView ratios(d.size(), 1.0);
    for (std::size_t n = 0; n < d.size(); ++n) {
      REQUIRE(target_prob(m, d.features(n), 1.0) == static_cast<double>(d.label(n)));
    }
    auto g = gradient(d, ratios, m, 0.0);
    CHECK(g.intercept == 0.0);
    CHECK(g.weights[0] == 0.0);
  }
}

TEST_CASE("property: analytic gradient matches central finite differences") {
  Rng rng(1234);
  for (int trial = 0; trial < 100; ++trial) {
    const Problem p = random_problem(rng);
    const auto analytic = flatten(gradient(p.data, view_of(p), p.model, p.lambda));
    const auto params = flatten(p.model);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double fd = oracle::central_difference(
          [&](const std::vector<double>& v) { return loss_at(p, v); }, params, i, 1e-6);
      const double diff = std::abs(analytic[i] - fd);
      const double scale = std::max(std::abs(analytic[i]), std::abs(fd));
      CHECK((diff <= 1e-8 || diff / scale < 1e-5));
    }
  }
}

TEST_CASE("property: the two published gradient forms agree") {
  Rng rng(55);
  for (int trial = 0; trial < 100; ++trial) {
    const Problem p = random_problem(rng);
    const auto view = view_of(p);
    const auto a = flatten(gradient(p.data, view, p.model, p.lambda));
    const auto b = flatten(gradient_expanded(p.data, view, p.model, p.lambda));
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(std::abs(a[i] - b[i]) <= 1e-12 * std::max(1.0, std::abs(a[i])));
    }
  }
}

TEST_CASE("property: full and simplified loss forms") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Problem p = random_problem(rng);
    for (std::size_t n = 0; n < p.data.size(); ++n) {
      const Label y = p.data.label(n);
      const double full = instance_neg_log_prob(p.model, p.data.features(n), y, p.ratios[n]);
      const double simple = instance_loss(p.model, p.data.features(n), y, p.ratios[n]);
      const double dropped = (1.0 - static_cast<double>(y)) * std::log(p.ratios[n]);
      CHECK(std::abs((simple - full) - dropped) <= 1e-10);
    }
    const auto exact = dual_gradient_full_form(p);
    const auto analytic = flatten(gradient(p.data, view_of(p), p.model, p.lambda));
    for (std::size_t i = 0; i < exact.size(); ++i) {
      CHECK(std::abs(exact[i] - analytic[i]) <= 1e-10 * std::max(1.0, std::abs(exact[i])));
    }
  }
}

TEST_CASE("property: logistic target probability equals the general engine") {
  Rng rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    LogisticModel m{rng.uniform(-5, 5), {rng.uniform(-3, 3), rng.uniform(-3, 3)}};
    const std::vector<double> x{rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const std::vector<double> rates{rng.uniform(0.01, 1.0), rng.uniform(0.01, 1.0)};
    const double general = corrected_prob(as_predictor(m), rates, x, 1);
    CHECK(std::abs(target_prob(m, x, sample_ratio(rates)) - general) <= 1e-12);
  }
}

TEST_CASE("property: loss and gradient stay finite at extreme logits and ratios") {
  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    Dataset d(1);
    std::vector<double> ratios;
    for (int n = 0; n < 10; ++n) {
      d.add(std::vector<double>{rng.uniform(-1, 1)}, n % 2);
      ratios.push_back(std::exp(rng.uniform(std::log(1e-8), std::log(1e8))));
    }
    // |c + w x| <= 500 for |x| <= 1.
    LogisticModel m{rng.uniform(-250, 250), {rng.uniform(-250, 250)}};
    Problem p{d, ratios, m, 1.0};
    const auto view = view_of(p);
    CHECK(std::isfinite(total_loss(d, view, m, 1.0)));
    const auto g = gradient(d, view, m, 1.0);
    CHECK(std::isfinite(g.intercept));
    CHECK(std::isfinite(g.weights[0]));
  }
}

TEST_CASE("loss and gradient reduce over any partition of the rows") {
  Rng rng(77);
  Dataset all(3);
  Dataset first(3);
  Dataset second(3);
  std::vector<double> x(3);
  for (int n = 0; n < 500; ++n) {
    for (double& v : x) v = rng.uniform(-2, 2);
    const Label y = rng.uniform() < 0.3 ? 1 : 0;
    all.add(x, y);
    (rng.uniform() < 0.5 ? first : second).add(x, y);
  }
  const auto s = SamplingSpec::constant({0.2, 0.9});
  LogisticModel m{0.4, {0.3, -0.2, 1.1}};
  const double whole = total_loss(all, m, s, 0.0);
  const double parts = total_loss(first, m, s, 0.0) + total_loss(second, m, s, 0.0);
  CHECK(std::abs(whole - parts) <= 1e-9 * std::abs(whole));
  const auto g = gradient(all, m, s, 0.0);
  const auto g1 = gradient(first, m, s, 0.0);
  const auto g2 = gradient(second, m, s, 0.0);
  CHECK(std::abs(g.intercept - (g1.intercept + g2.intercept)) <= 1e-9 * std::abs(g.intercept));
}

TEST_CASE("predict") {
  CHECK(predict(LogisticModel::zeros(2), std::vector<double>{4.0, -1.0}) == 0.5);
  LogisticModel m{-1.0, {0.5}};
  const std::vector<double> x{0.2};
  CHECK(predict(m, x, 0.1) == doctest::Approx(target_prob(m, x, 0.1)));
  CHECK(predict(m, x, 0.1) > predict(m, x));
}

TEST_CASE("train") {
  SUBCASE("empty dataset converges at the zero model") {
    auto report = train(Dataset(2), SamplingSpec::constant({1.0, 1.0}));
    CHECK(report.converged);
    CHECK(report.iterations == 0);
    CHECK(report.model == LogisticModel::zeros(2));
  }
  SUBCASE("config validation") {
    Dataset d(1);
    TrainConfig bad;
    bad.lambda = -1.0;
    CHECK_THROWS_AS(train(d, SamplingSpec::constant({1, 1}), bad), DomainError);
    bad = {};
    bad.grad_tol = 0.0;
    CHECK_THROWS_AS(train(d, SamplingSpec::constant({1, 1}), bad), DomainError);
  }
  SUBCASE("backtracking reaches the stationary point with a non-increasing trace") {
    Rng rng(31);
    Dataset d(3);
    std::vector<double> x(3);
    for (int n = 0; n < 2000; ++n) {
      for (double& v : x) v = rng.uniform(-2, 2);
      const double z = -0.5 + x[0] - 2.0 * x[1] + 0.3 * x[2];
      d.add(x, rng.uniform() < 1.0 / (1.0 + std::exp(-z)) ? 1 : 0);
    }
    TrainConfig config;
    config.lambda = 0.1;
    const auto s = SamplingSpec::constant({0.5, 1.0});
    auto report = train(d, s, config);
    CHECK(report.converged);
    CHECK(report.final_grad_norm < config.grad_tol);
    CHECK(report.loss_trace.size() == static_cast<std::size_t>(report.iterations) + 1);
    for (std::size_t i = 1; i < report.loss_trace.size(); ++i) {
      CHECK(report.loss_trace[i] <= report.loss_trace[i - 1]);
    }
    // The accumulated trace tracks the recomputed loss.
    CHECK(report.loss_trace.back() ==
          doctest::Approx(total_loss(d, report.model, s, config.lambda)).epsilon(1e-12));
    CHECK(gradient(d, report.model, s, config.lambda).max_norm() < config.grad_tol);

    SUBCASE("fixed step converges to the same point") {
      TrainConfig fixed = config;
      fixed.backtracking = false;
      fixed.learning_rate = 1e-3;
      fixed.max_iters = 20000;
      auto r2 = train(d, s, fixed);
      CHECK(r2.converged);
      CHECK(r2.model.intercept == doctest::Approx(report.model.intercept).epsilon(1e-7));
      for (std::size_t f = 0; f < 3; ++f) {
        CHECK(r2.model.weights[f] == doctest::Approx(report.model.weights[f]).epsilon(1e-7));
      }
    }
  }
  SUBCASE("iteration limit") {
    Dataset d(1);
    d.add(std::vector<double>{1.0}, 1);
    d.add(std::vector<double>{-1.0}, 1);
    d.add(std::vector<double>{0.5}, 0);
    TrainConfig config;
    config.max_iters = 2;
    auto report = train(d, SamplingSpec::constant({1.0, 1.0}), config);
    CHECK_FALSE(report.converged);
    CHECK(report.iterations == 2);
  }
  SUBCASE("zero label-0 rate is rejected") {
    Dataset d(1);
    d.add(std::vector<double>{1.0}, 1);
    CHECK_THROWS_AS(train(d, SamplingSpec::constant({0.0, 1.0})), DomainError);
  }
}

TEST_CASE("calibration_table and mean_nll") {
  Dataset d(1);
  d.add(std::vector<double>{0.0}, 1);
  d.add(std::vector<double>{0.0}, 0);
  d.add(std::vector<double>{10.0}, 1);
  const LogisticModel m{0.0, {1.0}};
  const auto table = calibration_table(d, m);
  REQUIRE(table.size() == 10);
  CHECK(table[5].count == 2);
  CHECK(table[5].mean_predicted == 0.5);
  CHECK(table[5].observed_rate == 0.5);
  CHECK(table[9].count == 1);
  CHECK(table[9].observed_rate == 1.0);
  std::size_t total = 0;
  for (const auto& b : table) total += b.count;
  CHECK(total == 3);
  CHECK(table[0].lower == 0.0);
  CHECK(table[9].upper == 1.0);

  Dataset zero_model_data(1);
  zero_model_data.add(std::vector<double>{3.0}, 0);
  zero_model_data.add(std::vector<double>{-3.0}, 1);
  CHECK(mean_nll(zero_model_data, LogisticModel::zeros(1)) == doctest::Approx(std::log(2.0)));
}
