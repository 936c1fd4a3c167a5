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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ragcheck/stats.hpp"

namespace ragcheck {

/**
 * Prediction-powered inference over binary labels.
 *
 * A small control sample of n units carries both a human label Y_j and a
 * machine label f(X_j); a further N units carry only the machine label
 * f(X~_i). The hybrid estimator uses the machine labels at scale and the
 * control residuals to debias them:
 *
 *   theta_hat = lambda * mean(f(X~)) - ( lambda * mean(f(X)) - mean(Y) )
 *
 * With the power-tuning weight lambda in [0, 1] the hybrid interval is never
 * wider than the plain survey interval on the control sample alone.
 */
struct PpiInputs {
  std::vector<int> judge_all;   // f(X~_i), length N (machine-only sample)
  std::vector<int> judge_ctrl;  // f(X_j), length n
  std::vector<int> human_ctrl;  // Y_j, length n
  double alpha = 0.05;

  size_t n() const { return human_ctrl.size(); }
  size_t N() const { return judge_all.size(); }

  void validate() const {
    if (judge_ctrl.size() != human_ctrl.size()) {
      throw std::invalid_argument("PpiInputs: control vectors differ in length");
    }
    if (n() < 2) {
      throw std::invalid_argument("PpiInputs: insufficient control sample (n >= 2 required)");
    }
    if (N() < 1) {
      throw std::invalid_argument("PpiInputs: machine-only sample must be non-empty");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
      throw std::invalid_argument("PpiInputs: alpha must lie in (0, 1)");
    }
    auto check_binary = [](const std::vector<int>& xs, const char* what) {
      for (int x : xs) {
        if (x != 0 && x != 1) {
          throw std::invalid_argument(std::string("PpiInputs: non-binary label in ") + what);
        }
      }
    };
    check_binary(judge_all, "judge_all");
    check_binary(judge_ctrl, "judge_ctrl");
    check_binary(human_ctrl, "human_ctrl");
  }
};

/// Point estimate for a fixed lambda.
inline double ppi_point(const PpiInputs& in, double lambda) {
  in.validate();
  return lambda * mean(in.judge_all) - (lambda * mean(in.judge_ctrl) - mean(in.human_ctrl));
}

struct PowerTuneResult {
  double lambda = 0.0;            // clamped to [0, 1]
  double lambda_unclamped = 0.0;  // raw optimum
  bool clamped = false;
  bool zero_judge_variance = false;
};

/**
 * Variance-minimising weight from population (or estimated) second moments.
 *
 * Minimising  Var(theta_hat(lambda)) = lambda^2 sigma_f^2 / N
 *                                    + Var(lambda f - Y) / n
 * with Var(lambda f - Y) = lambda^2 sigma_f^2 - 2 lambda Cov(f, Y) + sigma_Y^2
 * gives the stationary point
 *
 *   lambda* = Cov(f, Y) / ( sigma_f^2 * (1 + n/N) ),
 *
 * clamped to [0, 1].
 */
inline PowerTuneResult power_tune_lambda(double cov_fy, double var_f, size_t n, size_t N) {
  PowerTuneResult out;
  if (n < 2 || N < 1) {
    throw std::invalid_argument("power_tune_lambda: need n >= 2 and N >= 1");
  }
  if (var_f <= 0.0) {
    out.zero_judge_variance = true;
    out.lambda = 0.0;
    out.lambda_unclamped = 0.0;
    return out;
  }
  const double ratio = static_cast<double>(n) / static_cast<double>(N);
  out.lambda_unclamped = cov_fy / (var_f * (1.0 + ratio));
  out.lambda = std::clamp(out.lambda_unclamped, 0.0, 1.0);
  out.clamped = out.lambda != out.lambda_unclamped;
  return out;
}

/// Same tuning computed from the control sample itself.
inline PowerTuneResult power_tune_lambda(const PpiInputs& in) {
  in.validate();
  const double var_f = sample_variance(std::span<const int>(in.judge_ctrl));
  const double cov = sample_covariance(in.judge_ctrl, in.human_ctrl);
  return power_tune_lambda(cov, var_f, in.n(), in.N());
}

/**
 * The tuning objective: estimated Var(theta_hat(lambda)) with all second
 * moments taken from the control sample. This is the function the closed-form
 * lambda minimises; the grid-search oracle in the tests sweeps it directly.
 */
inline double ppi_tuning_variance(const PpiInputs& in, double lambda) {
  in.validate();
  const double var_f = sample_variance(std::span<const int>(in.judge_ctrl));
  std::vector<double> resid(in.n());
  for (size_t j = 0; j < in.n(); ++j) {
    resid[j] = lambda * static_cast<double>(in.judge_ctrl[j]) -
               static_cast<double>(in.human_ctrl[j]);
  }
  const double var_resid = sample_variance(std::span<const double>(resid));
  return lambda * lambda * var_f / static_cast<double>(in.N()) +
         var_resid / static_cast<double>(in.n());
}

enum class LambdaMode { fixed, power_tuned };

struct LambdaChoice {
  LambdaMode mode = LambdaMode::power_tuned;
  double fixed_value = 1.0;

  static LambdaChoice tuned() { return {LambdaMode::power_tuned, 1.0}; }
  static LambdaChoice fixed(double value) {
    if (!(value >= 0.0 && value <= 1.0)) {
      throw std::invalid_argument("LambdaChoice: fixed lambda must lie in [0, 1]");
    }
    return {LambdaMode::fixed, value};
  }
};

/**
 * Hybrid interval:
 *
 *   SE^2 = lambda^2 sigma_hat_f^2(judge_all) / N
 *        + sigma_hat^2(lambda f - Y | control) / n
 *   CI   = theta_hat +/- z_{1-alpha/2} * SE
 *
 * Variance estimates use the unbiased (n-1) convention. n_effective is the
 * size a plain human survey would need for the same uncertainty, using the
 * control-sample binomial variance p(1-p) as the survey numerator.
 */
inline MetricEstimate ppi_interval(const PpiInputs& in,
                                   LambdaChoice choice = LambdaChoice::tuned()) {
  in.validate();
  MetricEstimate est;
  est.method = EstimateMethod::ppi;
  est.n = in.n();
  est.N = in.N();

  double lambda;
  if (choice.mode == LambdaMode::power_tuned) {
    const PowerTuneResult tune = power_tune_lambda(in);
    lambda = tune.lambda;
    if (tune.zero_judge_variance) {
      est.diagnostics.push_back("zero_judge_variance: lambda forced to 0");
    } else if (tune.clamped) {
      est.diagnostics.push_back("lambda_clamped: unclamped optimum was " +
                                std::to_string(tune.lambda_unclamped));
    }
  } else {
    lambda = choice.fixed_value;
  }
  est.lambda = lambda;
  est.theta_hat = ppi_point(in, lambda);

  const double var_f_all = sample_variance(std::span<const int>(in.judge_all));
  if (in.N() < 2) {
    est.diagnostics.push_back("machine_sample_too_small: variance of judge_all taken as 0");
  }
  std::vector<double> resid(in.n());
  for (size_t j = 0; j < in.n(); ++j) {
    resid[j] = lambda * static_cast<double>(in.judge_ctrl[j]) -
               static_cast<double>(in.human_ctrl[j]);
  }
  const double var_resid = sample_variance(std::span<const double>(resid));
  const double se2 = lambda * lambda * var_f_all / static_cast<double>(in.N()) +
                     var_resid / static_cast<double>(in.n());
  const double z = normal_quantile(1.0 - in.alpha / 2.0);
  const double se = std::sqrt(se2);
  est.half_width = z * se;
  est.ci_low = est.theta_hat - est.half_width;
  est.ci_high = est.theta_hat + est.half_width;

  const double p_hat = mean(in.human_ctrl);
  if (p_hat == 0.0 || p_hat == 1.0) {
    est.diagnostics.push_back("degenerate_human_sample: p_hat(1-p_hat) is zero");
  }
  est.n_effective = se2 > 0.0 ? p_hat * (1.0 - p_hat) / se2
                              : std::numeric_limits<double>::infinity();
  return est;
}

}  // namespace ragcheck
