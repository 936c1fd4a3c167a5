/* Copyright 2026 The ragcheck Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ragcheck/ppi.hpp"
#include "ragcheck/rng.hpp"
#include "ragcheck/stats.hpp"

namespace ragcheck {

/**
 * Joint Bernoulli distribution of a (human, judge) label pair, parameterised
 * by the marginal rates p and q and the agreement rate a. The cell
 * probabilities follow from
 *
 *   p11 = (a - 1 + p + q) / 2,   p10 = p - p11,
 *   p01 = q - p11,               p00 = 1 - p - q + p11.
 *
 * Not every agreement level is reachable for given marginals: feasibility
 * requires max(0, p+q-1) <= p11 <= min(p, q).
 */
struct JointLabelModel {
  double p = 0.0;  // human marginal rate
  double q = 0.0;  // judge marginal rate
  double a = 0.0;  // agreement rate

  double p11 = 0.0, p10 = 0.0, p01 = 0.0, p00 = 0.0;

  static std::pair<double, double> feasible_agreement(double p, double q) {
    const double lo = 1.0 - p - q + 2.0 * std::max(0.0, p + q - 1.0);
    const double hi = 1.0 - p - q + 2.0 * std::min(p, q);
    return {lo, hi};
  }

  static double random_agreement(double p, double q) {
    return p * q + (1.0 - p) * (1.0 - q);
  }

  static JointLabelModel make(double p, double q, double a) {
    if (!(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0)) {
      throw std::invalid_argument("JointLabelModel: marginals must lie in [0, 1]");
    }
    const auto [lo, hi] = feasible_agreement(p, q);
    if (a < lo - 1e-12 || a > hi + 1e-12) {
      std::ostringstream msg;
      msg << "JointLabelModel: agreement " << a << " infeasible for p=" << p
          << ", q=" << q << "; feasible range is [" << lo << ", " << hi << "]";
      throw std::invalid_argument(msg.str());
    }
    JointLabelModel m;
    m.p = p;
    m.q = q;
    m.a = std::clamp(a, lo, hi);
    m.p11 = (m.a - 1.0 + p + q) / 2.0;
    m.p10 = p - m.p11;
    m.p01 = q - m.p11;
    m.p00 = 1.0 - p - q + m.p11;
    return m;
  }

  double covariance() const { return p11 - p * q; }
  double var_human() const { return p * (1.0 - p); }
  double var_judge() const { return q * (1.0 - q); }

  // One (human, judge) pair.
  void draw_pair(Rng& rng, int& human, int& judge) const {
    const double u = rng.uniform01();
    if (u < p11) {
      human = 1;
      judge = 1;
    } else if (u < p11 + p10) {
      human = 1;
      judge = 0;
    } else if (u < p11 + p10 + p01) {
      human = 0;
      judge = 1;
    } else {
      human = 0;
      judge = 0;
    }
  }
};

/// One agreement grid point of a sensitivity sweep.
struct SweepPoint {
  double a = 0.0;
  double lambda = 0.0;
  double half_width = 0.0;
  double n_effective = 0.0;
  double gain = 0.0;  // n_effective / n
  // Monte Carlo companions, present when trials were run.
  std::optional<double> mc_half_width;
  std::optional<double> mc_n_effective;
  std::optional<double> mc_gain;
  std::optional<double> coverage;
};

struct SweepResult {
  double p = 0.0, q = 0.0;
  size_t n = 0, N = 0;
  double alpha = 0.05;
  size_t trials = 0;  // 0 for a purely analytic sweep
  std::vector<SweepPoint> points;
};

/// Default grid: random agreement up to 1.0 in steps of 0.01. Values snap to
/// nine decimals so grid points print cleanly.
inline std::vector<double> default_agreement_grid(double p, double q, double step = 0.01) {
  const double start = JointLabelModel::random_agreement(p, q);
  const auto [lo, hi] = JointLabelModel::feasible_agreement(p, q);
  std::vector<double> grid;
  auto snap = [](double x) { return std::round(x * 1e9) / 1e9; };
  for (double a = std::max(start, lo); a < hi - 1e-12; a += step) grid.push_back(snap(a));
  grid.push_back(snap(hi));
  return grid;
}

/**
 * Analytic evaluation of one agreement level, using population second
 * moments (no sampling noise): var_Y = p(1-p), var_f = q(1-q),
 * Cov = p11 - pq. Lambda is power-tuned unless a fixed choice is given.
 */
inline SweepPoint analytic_point(const JointLabelModel& model, size_t n, size_t N,
                                 double alpha,
                                 LambdaChoice choice = LambdaChoice::tuned()) {
  if (n < 2 || N < 1) {
    throw std::invalid_argument("analytic_point: need n >= 2 and N >= 1");
  }
  const double var_f = model.var_judge();
  const double var_y = model.var_human();
  const double cov = model.covariance();

  double lambda;
  if (choice.mode == LambdaMode::power_tuned) {
    lambda = power_tune_lambda(cov, var_f, n, N).lambda;
  } else {
    lambda = choice.fixed_value;
  }
  const double var_resid = lambda * lambda * var_f - 2.0 * lambda * cov + var_y;
  const double se2 = lambda * lambda * var_f / static_cast<double>(N) +
                     var_resid / static_cast<double>(n);
  const double z = normal_quantile(1.0 - alpha / 2.0);

  SweepPoint pt;
  pt.a = model.a;
  pt.lambda = lambda;
  pt.half_width = z * std::sqrt(se2);
  pt.n_effective = se2 > 0.0 ? var_y / se2 : std::numeric_limits<double>::infinity();
  pt.gain = pt.n_effective / static_cast<double>(n);
  return pt;
}

inline SweepResult analytic_sweep(double p, double q, size_t n, size_t N, double alpha,
                                  const std::vector<double>& agreement_grid) {
  SweepResult result;
  result.p = p;
  result.q = q;
  result.n = n;
  result.N = N;
  result.alpha = alpha;
  for (double a : agreement_grid) {
    const JointLabelModel m = JointLabelModel::make(p, q, a);
    result.points.push_back(analytic_point(m, n, N, alpha));
  }
  return result;
}

/**
 * Monte Carlo evaluation: each trial draws n control pairs from the joint
 * model and N machine labels from the judge marginal, then runs the
 * power-tuned estimator pipeline exactly as production does. Reports the
 * mean half width, mean effective size, and empirical coverage of the true
 * rate p. Trial seeds derive from (seed, trial index), so the reduction is
 * schedule-independent.
 */
inline SweepPoint monte_carlo_point(const JointLabelModel& model, size_t n, size_t N,
                                    double alpha, size_t trials, uint64_t seed) {
  if (trials < 100) {
    throw std::invalid_argument("monte_carlo_point: need at least 100 trials");
  }
  SweepPoint pt = analytic_point(model, n, N, alpha);

  double sum_hw = 0.0, sum_neff = 0.0;
  size_t covered = 0;
  PpiInputs in;
  in.alpha = alpha;
  for (size_t t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, t));
    in.judge_ctrl.assign(n, 0);
    in.human_ctrl.assign(n, 0);
    for (size_t j = 0; j < n; ++j) model.draw_pair(rng, in.human_ctrl[j], in.judge_ctrl[j]);
    in.judge_all.assign(N, 0);
    for (size_t i = 0; i < N; ++i) in.judge_all[i] = rng.bernoulli(model.q) ? 1 : 0;

    const MetricEstimate est = ppi_interval(in, LambdaChoice::tuned());
    sum_hw += est.half_width;
    sum_neff += est.n_effective;
    if (est.ci_low <= model.p && model.p <= est.ci_high) ++covered;
  }
  pt.mc_half_width = sum_hw / static_cast<double>(trials);
  pt.mc_n_effective = sum_neff / static_cast<double>(trials);
  pt.mc_gain = *pt.mc_n_effective / static_cast<double>(n);
  pt.coverage = static_cast<double>(covered) / static_cast<double>(trials);
  return pt;
}

inline SweepResult monte_carlo_sweep(double p, double q, size_t n, size_t N, double alpha,
                                     const std::vector<double>& agreement_grid,
                                     size_t trials, uint64_t seed) {
  SweepResult result;
  result.p = p;
  result.q = q;
  result.n = n;
  result.N = N;
  result.alpha = alpha;
  result.trials = trials;
  for (size_t i = 0; i < agreement_grid.size(); ++i) {
    const JointLabelModel m = JointLabelModel::make(p, q, agreement_grid[i]);
    result.points.push_back(
        monte_carlo_point(m, n, N, alpha, trials, derive_seed(seed, 0x51500 + i)));
  }
  return result;
}

}  // namespace ragcheck
