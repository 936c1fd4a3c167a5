#include "doctest.h"

#include <cmath>
#include <vector>

#include "ragcheck/ppi.hpp"
#include "ragcheck/rng.hpp"

using namespace ragcheck;

namespace {

// Independent oracle: sweep the tuning objective on a fine grid and return
// the first minimiser. Ties resolve to the smallest lambda.
double grid_search_lambda(const PpiInputs& in, double step = 1e-4) {
  double best_lambda = 0.0;
  double best_var = ppi_tuning_variance(in, 0.0);
  for (double lambda = step; lambda <= 1.0 + step / 2; lambda += step) {
    const double l = std::min(lambda, 1.0);
    const double v = ppi_tuning_variance(in, l);
    if (v < best_var) {
      best_var = v;
      best_lambda = l;
    }
  }
  return best_lambda;
}

struct JointCells {
  double p11, p10, p01;  // p00 is the remainder
};

JointCells cells_from(double p, double q, double a) {
  const double p11 = (a - 1.0 + p + q) / 2.0;
  return {p11, p - p11, q - p11};
}

void draw_pair(Rng& rng, const JointCells& c, int& human, int& judge) {
  const double u = rng.uniform01();
  if (u < c.p11) {
    human = 1;
    judge = 1;
  } else if (u < c.p11 + c.p10) {
    human = 1;
    judge = 0;
  } else if (u < c.p11 + c.p10 + c.p01) {
    human = 0;
    judge = 1;
  } else {
    human = 0;
    judge = 0;
  }
}

PpiInputs draw_inputs(Rng& rng, const JointCells& c, double q, size_t n, size_t N) {
  PpiInputs in;
  in.judge_ctrl.resize(n);
  in.human_ctrl.resize(n);
  for (size_t j = 0; j < n; ++j) draw_pair(rng, c, in.human_ctrl[j], in.judge_ctrl[j]);
  in.judge_all.resize(N);
  for (size_t i = 0; i < N; ++i) in.judge_all[i] = rng.bernoulli(q) ? 1 : 0;
  return in;
}

}  // namespace

TEST_SUITE_BEGIN("ppi");

TEST_CASE("point estimate reductions") {
  PpiInputs in;
  in.judge_all = {1, 1, 0, 1};
  in.judge_ctrl = {1, 0};
  in.human_ctrl = {0, 0};

  SUBCASE("lambda 0 collapses to the human control mean, bit for bit") {
    CHECK(ppi_point(in, 0.0) == 0.0);
    in.human_ctrl = {1, 0};
    CHECK(ppi_point(in, 0.0) == 0.5);
    in.human_ctrl = {1, 1};
    CHECK(ppi_point(in, 0.0) == 1.0);
  }
  SUBCASE("judge == human on control cancels the correction at lambda 1") {
    in.human_ctrl = in.judge_ctrl;
    CHECK(ppi_point(in, 1.0) == 0.75);
  }
  SUBCASE("direct evaluation of the estimator") {
    // 0.75 - (0.5 - 0) = 0.25
    CHECK(ppi_point(in, 1.0) == doctest::Approx(0.25));
  }
}

TEST_CASE("power tuning closed form") {
  SUBCASE("independent labels give lambda 0") {
    // Constructed so the sample covariance is exactly zero.
    PpiInputs in;
    in.judge_all = {1, 0};
    in.judge_ctrl = {1, 1, 0, 0};
    in.human_ctrl = {1, 0, 1, 0};
    const PowerTuneResult t = power_tune_lambda(in);
    CHECK(t.lambda == 0.0);
    CHECK_FALSE(t.zero_judge_variance);
  }
  SUBCASE("identical control labels, n=2, N=8") {
    PpiInputs in;
    in.judge_all.assign(8, 1);
    in.judge_ctrl = {1, 0};
    in.human_ctrl = {1, 0};
    const PowerTuneResult t = power_tune_lambda(in);
    // Cov = Var, so the unclamped optimum is 1/(1 + 2/8) = 0.8.
    CHECK(t.lambda_unclamped == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(t.lambda == doctest::Approx(0.8));
    CHECK(std::fabs(grid_search_lambda(in) - t.lambda) < 1e-3);
  }
  SUBCASE("population quantities of the reference setting") {
    // p = q = 0.8, agreement 0.93: Cov = 0.765 - 0.64 = 0.125, var_f = 0.16.
    const PowerTuneResult t = power_tune_lambda(0.125, 0.16, 140, 3985);
    CHECK(t.lambda == doctest::Approx(0.755).epsilon(1e-3));
  }
  SUBCASE("zero judge variance forces lambda 0 with a diagnostic") {
    PpiInputs in;
    in.judge_all = {1, 1};
    in.judge_ctrl = {1, 1, 1};
    in.human_ctrl = {1, 0, 1};
    const PowerTuneResult t = power_tune_lambda(in);
    CHECK(t.lambda == 0.0);
    CHECK(t.zero_judge_variance);
  }
}

TEST_CASE("closed-form lambda matches grid search and dominates endpoints") {
  // 100 randomized inputs; the closed form must match the 1e-4 grid within
  // 1e-3 and never do worse than lambda = 0 or lambda = 1.
  Rng rng(20260808ULL);
  int checked = 0;
  while (checked < 100) {
    const double p = 0.1 + 0.8 * rng.uniform01();
    const double q = 0.1 + 0.8 * rng.uniform01();
    const double a_min = std::fabs(p - q) > 0 ? 1.0 - p - q + 2.0 * std::max(0.0, p + q - 1.0)
                                              : 1.0 - p - q;
    const double a_max = 1.0 - p - q + 2.0 * std::min(p, q);
    const double a = a_min + (a_max - a_min) * rng.uniform01();
    const JointCells cells = cells_from(p, q, a);
    const size_t n = 2 + rng.uniform_index(199);
    const size_t N = 1 + rng.uniform_index(500);
    const PpiInputs in = draw_inputs(rng, cells, q, n, N);

    const PowerTuneResult t = power_tune_lambda(in);
    const double oracle = grid_search_lambda(in);
    CHECK(std::fabs(t.lambda - oracle) < 1e-3);

    const double var_star = ppi_tuning_variance(in, t.lambda);
    const double var_0 = ppi_tuning_variance(in, 0.0);
    const double var_1 = ppi_tuning_variance(in, 1.0);
    CHECK(var_star <= std::min(var_0, var_1) + 1e-12);
    ++checked;
  }
}

TEST_CASE("interval reductions") {
  SUBCASE("judge == human on control, lambda 1: only the machine term remains") {
    PpiInputs in;
    in.judge_all = {1, 0, 1, 1, 0, 1, 1, 1};
    in.judge_ctrl = {1, 0, 1};
    in.human_ctrl = {1, 0, 1};
    const MetricEstimate est = ppi_interval(in, LambdaChoice::fixed(1.0));
    CHECK(est.theta_hat == mean(in.judge_all));
    // Sample variance of binary labels with mean m over N entries.
    const double m = 6.0 / 8.0;
    const double var_all = 8.0 * m * (1.0 - m) / 7.0;
    const double z = normal_quantile(0.975);
    CHECK(est.half_width == doctest::Approx(z * std::sqrt(var_all / 8.0)).epsilon(1e-12));
  }
  SUBCASE("lambda 0 reduces to the classical interval up to the variance convention") {
    PpiInputs in;
    in.judge_all = {0, 1, 0};
    in.judge_ctrl = {1, 0, 1, 0, 1, 1, 0, 1, 1, 1};
    in.human_ctrl = {1, 0, 1, 1, 0, 1, 0, 1, 1, 0};
    const MetricEstimate est = ppi_interval(in, LambdaChoice::fixed(0.0));
    const size_t n = in.human_ctrl.size();
    uint64_t s = 0;
    for (int y : in.human_ctrl) s += static_cast<uint64_t>(y);
    const MetricEstimate wald = wald_interval(s, n, 0.05);
    CHECK(est.theta_hat == doctest::Approx(wald.theta_hat));
    // (n-1) convention vs the Wald 1/n convention.
    const double scale = std::sqrt(static_cast<double>(n) / static_cast<double>(n - 1));
    CHECK(est.half_width == doctest::Approx(wald.half_width * scale).epsilon(1e-12));
  }
  SUBCASE("insufficient control sample") {
    PpiInputs in;
    in.judge_all = {1};
    in.judge_ctrl = {1};
    in.human_ctrl = {1};
    CHECK_THROWS_AS(ppi_interval(in), std::invalid_argument);
  }
  SUBCASE("non-binary labels rejected") {
    PpiInputs in;
    in.judge_all = {2};
    in.judge_ctrl = {1, 0};
    in.human_ctrl = {0, 1};
    CHECK_THROWS_AS(ppi_interval(in), std::invalid_argument);
  }
}

TEST_CASE("estimator is unbiased under resampling for fixed and tuned lambda") {
  // 10000 resamples from a fixed joint label distribution; the mean estimate
  // must sit within 3 Monte Carlo standard errors of the truth for each
  // lambda mode.
  const double p = 0.8, q = 0.8, a = 0.93;
  const JointCells cells = cells_from(p, q, a);
  const size_t n = 60, N = 300;
  const size_t trials = 10000;

  struct Acc {
    double sum = 0.0, sum2 = 0.0;
    void add(double x) {
      sum += x;
      sum2 += x * x;
    }
  };
  Acc acc_fixed0, acc_fixed05, acc_fixed1, acc_tuned;

  for (size_t t = 0; t < trials; ++t) {
    Rng rng(derive_seed(77001, t));
    const PpiInputs in = draw_inputs(rng, cells, q, n, N);
    acc_fixed0.add(ppi_point(in, 0.0));
    acc_fixed05.add(ppi_point(in, 0.5));
    acc_fixed1.add(ppi_point(in, 1.0));
    acc_tuned.add(ppi_point(in, power_tune_lambda(in).lambda));
  }
  auto check_unbiased = [&](const Acc& acc) {
    const double m = acc.sum / trials;
    const double var = acc.sum2 / trials - m * m;
    const double mc_se = std::sqrt(var / trials);
    CHECK(std::fabs(m - p) <= 3.0 * mc_se);
  };
  check_unbiased(acc_fixed0);
  check_unbiased(acc_fixed05);
  check_unbiased(acc_fixed1);
  check_unbiased(acc_tuned);
}

TEST_SUITE_END();
