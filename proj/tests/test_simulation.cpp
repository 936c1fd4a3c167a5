#include "doctest.h"

#include <cmath>

#include "ragcheck/simulation.hpp"

using namespace ragcheck;

TEST_SUITE_BEGIN("simulation");

TEST_CASE("cell probabilities reconstruct marginals and agreement") {
  Rng rng(31337);
  for (int i = 0; i < 200; ++i) {
    const double p = rng.uniform01();
    const double q = rng.uniform01();
    const auto [lo, hi] = JointLabelModel::feasible_agreement(p, q);
    const double a = lo + (hi - lo) * rng.uniform01();
    const JointLabelModel m = JointLabelModel::make(p, q, a);
    CHECK(m.p11 + m.p10 == doctest::Approx(p).epsilon(1e-12));
    CHECK(m.p11 + m.p01 == doctest::Approx(q).epsilon(1e-12));
    CHECK(m.p11 + m.p00 == doctest::Approx(a).epsilon(1e-12));
    CHECK(m.p11 + m.p10 + m.p01 + m.p00 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.p11 >= -1e-12);
    CHECK(m.p00 >= -1e-12);
    CHECK(m.p10 >= -1e-12);
    CHECK(m.p01 >= -1e-12);
  }
}

TEST_CASE("infeasible agreement names the feasible range") {
  CHECK_THROWS_WITH_AS(JointLabelModel::make(0.8, 0.8, 0.5),
                       doctest::Contains("feasible range"), std::invalid_argument);
  // For p = q = 0.8 the reachable agreement band is [0.6, 1.0].
  CHECK_NOTHROW(JointLabelModel::make(0.8, 0.8, 0.6));
  CHECK_NOTHROW(JointLabelModel::make(0.8, 0.8, 1.0));
}

TEST_CASE("analytic point reproduces the classical survey at random agreement") {
  // At a = a_rand the covariance vanishes, lambda* = 0 and the uncertainty is
  // the classical sqrt(p(1-p)/n) half width: 1.96 * sqrt(0.16/140) = 0.0663.
  const double a_rand = JointLabelModel::random_agreement(0.8, 0.8);
  CHECK(a_rand == doctest::Approx(0.68));
  const JointLabelModel m = JointLabelModel::make(0.8, 0.8, a_rand);
  CHECK(m.covariance() == doctest::Approx(0.0).epsilon(1e-15));
  const SweepPoint pt = analytic_point(m, 140, 3985, 0.05);
  CHECK(pt.lambda == 0.0);
  const double classical = 1.959963984540054 * std::sqrt(0.8 * 0.2 / 140.0);
  CHECK(pt.half_width == doctest::Approx(classical).epsilon(1e-12));
  CHECK(pt.half_width == doctest::Approx(0.0663).epsilon(0.01));
  CHECK(pt.n_effective == doctest::Approx(140.0).epsilon(1e-9));
}

TEST_CASE("analytic point at the reference setting: a = 0.93") {
  const JointLabelModel m = JointLabelModel::make(0.8, 0.8, 0.93);
  CHECK(m.covariance() == doctest::Approx(0.125));
  const SweepPoint pt = analytic_point(m, 140, 3985, 0.05);
  CHECK(pt.lambda == doctest::Approx(0.755).epsilon(1e-3));
  CHECK(pt.half_width > 0.038);
  CHECK(pt.half_width < 0.045);
  CHECK(pt.n_effective == doctest::Approx(341.0).epsilon(0.01));
  CHECK(pt.gain == doctest::Approx(341.0 / 140.0).epsilon(0.01));
}

TEST_CASE("perfect judge at lambda 1 leaves only the machine term") {
  const JointLabelModel m = JointLabelModel::make(0.8, 0.8, 1.0);
  const SweepPoint pt = analytic_point(m, 140, 3985, 0.05, LambdaChoice::fixed(1.0));
  // z * sqrt(q(1-q)/N) = 1.96 * sqrt(0.16/3985) = 0.012419
  const double oracle = 1.959963984540054 * std::sqrt(0.16 / 3985.0);
  CHECK(pt.half_width == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(pt.half_width == doctest::Approx(0.0124).epsilon(0.01));
  // The tuned lambda does at least as well.
  const SweepPoint tuned = analytic_point(m, 140, 3985, 0.05);
  CHECK(tuned.half_width <= pt.half_width + 1e-15);
}

TEST_CASE("half width is non-increasing and n_effective non-decreasing in agreement") {
  const SweepResult sweep =
      analytic_sweep(0.8, 0.8, 140, 3985, 0.05, default_agreement_grid(0.8, 0.8));
  REQUIRE(sweep.points.size() > 10);
  for (size_t i = 1; i < sweep.points.size(); ++i) {
    CHECK(sweep.points[i].half_width <= sweep.points[i - 1].half_width + 1e-12);
    CHECK(sweep.points[i].n_effective >= sweep.points[i - 1].n_effective - 1e-9);
  }
  // Grid starts at random agreement and ends at perfect agreement.
  CHECK(sweep.points.front().a == doctest::Approx(0.68));
  CHECK(sweep.points.back().a == doctest::Approx(1.0));
}

TEST_CASE("monte carlo matches the analytic value at the reference setting") {
  const JointLabelModel m = JointLabelModel::make(0.8, 0.8, 0.93);
  const SweepPoint pt = monte_carlo_point(m, 140, 3985, 0.05, 1000, derive_seed(5150, 93));
  REQUIRE(pt.mc_half_width.has_value());
  CHECK(std::fabs(*pt.mc_half_width - pt.half_width) < 0.005);
  REQUIRE(pt.coverage.has_value());
  CHECK(*pt.coverage >= 0.93);
}

TEST_CASE("perfect agreement makes the control residual vanish at lambda 1") {
  const JointLabelModel m = JointLabelModel::make(0.8, 0.8, 1.0);
  Rng rng(99);
  for (int t = 0; t < 50; ++t) {
    PpiInputs in;
    in.judge_ctrl.assign(30, 0);
    in.human_ctrl.assign(30, 0);
    for (size_t j = 0; j < 30; ++j) m.draw_pair(rng, in.human_ctrl[j], in.judge_ctrl[j]);
    in.judge_all.assign(50, 1);
    CHECK(in.judge_ctrl == in.human_ctrl);
    const MetricEstimate est = ppi_interval(in, LambdaChoice::fixed(1.0));
    // residual variance identically zero
    const double z = normal_quantile(0.975);
    const double var_all = sample_variance(std::span<const int>(in.judge_all));
    CHECK(est.half_width == doctest::Approx(z * std::sqrt(var_all / 50.0)).epsilon(1e-12));
  }
}

TEST_CASE("monte carlo converges at the 1/sqrt(trials) rate") {
  // Two independent big runs must agree within 3 sigma, where sigma comes
  // from the spread of independent small runs scaled by sqrt(trials ratio).
  // Against the analytic value only a fixed finite-n band applies: the MC
  // mean estimates E[half width], which carries an O(1/n) plug-in offset.
  const JointLabelModel m = JointLabelModel::make(0.8, 0.8, 0.85);
  const size_t n = 100, N = 900;
  const SweepPoint analytic = analytic_point(m, n, N, 0.05);

  std::vector<double> small_means;
  for (uint64_t s = 0; s < 8; ++s) {
    small_means.push_back(*monte_carlo_point(m, n, N, 0.05, 250, 1000 + s).mc_half_width);
  }
  const double sigma_250 = std::sqrt(sample_variance(std::span<const double>(small_means)));
  const SweepPoint big_a = monte_carlo_point(m, n, N, 0.05, 4000, 77);
  const SweepPoint big_b = monte_carlo_point(m, n, N, 0.05, 4000, 78);
  const double sigma_4000 = sigma_250 / 4.0;  // 16x the trials
  CHECK(std::fabs(*big_a.mc_half_width - *big_b.mc_half_width) <=
        3.0 * sigma_4000 * std::sqrt(2.0) + 1e-6);
  CHECK(std::fabs(*big_a.mc_half_width - analytic.half_width) < 0.005);
}

TEST_CASE("coverage holds across the agreement range") {
  for (double a : {0.70, 0.80, 0.93, 1.00}) {
    const JointLabelModel m = JointLabelModel::make(0.8, 0.8, a);
    const SweepPoint pt =
        monte_carlo_point(m, 140, 3985, 0.05, 400, derive_seed(5150, uint64_t(a * 100)));
    CHECK(*pt.coverage >= 0.93);
  }
}

TEST_SUITE_END();
