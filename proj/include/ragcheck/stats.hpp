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
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ragcheck {

/**
 * Quantile of the standard normal distribution (inverse CDF).
 *
 * Rational approximation AS 241 (Wichura, 1988), accurate to well below
 * 1e-9 over (0, 1). No special-function dependency.
 */
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("normal_quantile: p must lie in (0, 1)");
  }
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
               1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
               5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
              3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
            4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
            2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
            5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return (q < 0.0) ? -val : val;
}

inline double mean(std::span<const int> xs) {
  if (xs.empty()) throw std::invalid_argument("mean: empty sample");
  double s = 0.0;
  for (int x : xs) s += static_cast<double>(x);
  return s / static_cast<double>(xs.size());
}

// Unbiased sample variance (n-1 convention). Returns 0 for n < 2.
inline double sample_variance(std::span<const int> xs) {
  const size_t n = xs.size();
  if (n < 2) return 0.0;
  const double m = mean(xs);
  double s = 0.0;
  for (int x : xs) {
    const double d = static_cast<double>(x) - m;
    s += d * d;
  }
  return s / static_cast<double>(n - 1);
}

inline double sample_variance(std::span<const double> xs) {
  const size_t n = xs.size();
  if (n < 2) return 0.0;
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(n);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(n - 1);
}

// Unbiased sample covariance (n-1 convention). Returns 0 for n < 2.
inline double sample_covariance(std::span<const int> xs, std::span<const int> ys) {
  if (xs.size() != ys.size()) {
    throw std::invalid_argument("sample_covariance: length mismatch");
  }
  const size_t n = xs.size();
  if (n < 2) return 0.0;
  const double mx = mean(xs);
  const double my = mean(ys);
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    s += (static_cast<double>(xs[i]) - mx) * (static_cast<double>(ys[i]) - my);
  }
  return s / static_cast<double>(n - 1);
}

enum class EstimateMethod { classical_wald, ppi };

inline const char* to_string(EstimateMethod m) {
  return m == EstimateMethod::classical_wald ? "classical_wald" : "ppi";
}

/// Point estimate plus confidence interval and its bookkeeping.
struct MetricEstimate {
  EstimateMethod method = EstimateMethod::classical_wald;
  double theta_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double half_width = 0.0;
  double lambda = 0.0;
  size_t n = 0;           // control / survey sample size
  size_t N = 0;           // machine-labelled sample size (0 for classical)
  double n_effective = 0.0;
  std::vector<std::string> diagnostics;

  // Display helpers: the raw interval may poke outside [0, 1].
  double display_low() const { return std::max(0.0, ci_low); }
  double display_high() const { return std::min(1.0, ci_high); }
};

/**
 * Classical Wald interval for a binomial proportion:
 *   theta = s/t,  half width = z_{1-alpha/2} * sqrt(theta (1-theta) / t).
 *
 * The effective sample size of a plain survey is the survey size itself.
 */
inline MetricEstimate wald_interval(uint64_t successes, uint64_t trials, double alpha) {
  if (trials == 0) {
    throw std::invalid_argument("wald_interval: trials must be >= 1 (undefined estimate)");
  }
  if (successes > trials) {
    throw std::invalid_argument("wald_interval: successes exceed trials");
  }
  MetricEstimate est;
  est.method = EstimateMethod::classical_wald;
  est.n = trials;
  est.N = 0;
  est.lambda = 0.0;
  est.theta_hat = static_cast<double>(successes) / static_cast<double>(trials);
  const double z = normal_quantile(1.0 - alpha / 2.0);
  est.half_width =
      z * std::sqrt(est.theta_hat * (1.0 - est.theta_hat) / static_cast<double>(trials));
  est.ci_low = est.theta_hat - est.half_width;
  est.ci_high = est.theta_hat + est.half_width;
  est.n_effective = static_cast<double>(trials);
  if (successes == 0 || successes == trials) {
    est.diagnostics.push_back("degenerate_sample: all labels equal, Wald width is zero");
  }
  return est;
}

/// Human/judge agreement on the control sample, with the independent-Bernoulli
/// baseline that a worthless judge would already reach by chance.
struct AgreementReport {
  double observed_agreement = 0.0;
  double random_agreement = 0.0;
  double p_human = 0.0;
  double p_judge = 0.0;
  size_t n_ctrl = 0;
};

inline AgreementReport agreement(std::span<const int> judge_ctrl,
                                 std::span<const int> human_ctrl) {
  if (judge_ctrl.size() != human_ctrl.size()) {
    throw std::invalid_argument("agreement: control vectors differ in length");
  }
  if (judge_ctrl.empty()) {
    throw std::invalid_argument("agreement: empty control sample");
  }
  AgreementReport rep;
  rep.n_ctrl = judge_ctrl.size();
  size_t matches = 0;
  for (size_t i = 0; i < judge_ctrl.size(); ++i) {
    if (judge_ctrl[i] == human_ctrl[i]) ++matches;
  }
  rep.observed_agreement = static_cast<double>(matches) / static_cast<double>(rep.n_ctrl);
  rep.p_human = mean(human_ctrl);
  rep.p_judge = mean(judge_ctrl);
  rep.random_agreement =
      rep.p_human * rep.p_judge + (1.0 - rep.p_human) * (1.0 - rep.p_judge);
  return rep;
}

}  // namespace ragcheck
