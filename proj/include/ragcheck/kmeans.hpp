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
#include <limits>
#include <stdexcept>
#include <vector>

#include "ragcheck/rng.hpp"

namespace ragcheck {

struct KMeansOptions {
  size_t max_iterations = 300;
  // L2-normalise inputs first: Euclidean k-means on unit vectors approximates
  // the cosine geometry of text embeddings. Switch off for raw coordinates.
  bool normalize = true;
};

struct KMeansResult {
  std::vector<size_t> assignment;            // point index -> cluster
  std::vector<std::vector<double>> centroids;
  double inertia = 0.0;                       // sum of squared distances
  size_t iterations = 0;
  std::vector<double> inertia_trace;          // one entry per Lloyd iteration
};

namespace detail {

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline void l2_normalize(std::vector<double>& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
}

}  // namespace detail

/**
 * Lloyd's algorithm with k-means++ seeding. Deterministic under a fixed seed:
 * every random draw goes through the project Rng, distance ties resolve to
 * the lowest index, and empty clusters re-seed at the point currently
 * farthest from its own centroid. Stops when assignments are stable or after
 * max_iterations. The inertia trace is checked to be non-increasing.
 */
inline KMeansResult kmeans(const std::vector<std::vector<double>>& input, size_t k,
                           uint64_t seed, const KMeansOptions& opts = {}) {
  const size_t n = input.size();
  if (k == 0) throw std::invalid_argument("kmeans: k must be >= 1");
  if (k > n) throw std::invalid_argument("kmeans: k exceeds the number of points");
  for (const auto& v : input) {
    if (v.size() != input.front().size()) {
      throw std::invalid_argument("kmeans: inconsistent vector dimensions");
    }
  }

  std::vector<std::vector<double>> points = input;
  if (opts.normalize) {
    for (auto& v : points) detail::l2_normalize(v);
  }

  Rng rng(seed);
  KMeansResult result;
  result.centroids.reserve(k);

  // k-means++: first centroid uniform, then proportional to squared distance
  // from the nearest chosen centroid.
  std::vector<double> dist2(n, std::numeric_limits<double>::infinity());
  std::vector<bool> is_centroid(n, false);
  {
    const size_t first = rng.uniform_index(n);
    result.centroids.push_back(points[first]);
    is_centroid[first] = true;
  }
  while (result.centroids.size() < k) {
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double d = detail::squared_distance(points[i], result.centroids.back());
      if (d < dist2[i]) dist2[i] = d;
      total += dist2[i];
    }
    size_t chosen = n;
    if (total > 0.0) {
      const double target = rng.uniform01() * total;
      double acc = 0.0;
      for (size_t i = 0; i < n; ++i) {
        acc += dist2[i];
        if (acc >= target) {
          chosen = i;
          break;
        }
      }
      if (chosen == n) chosen = n - 1;
    } else {
      // All remaining mass is on duplicates; take the first free point.
      for (size_t i = 0; i < n; ++i) {
        if (!is_centroid[i]) {
          chosen = i;
          break;
        }
      }
      if (chosen == n) chosen = 0;
    }
    is_centroid[chosen] = true;
    result.centroids.push_back(points[chosen]);
  }

  result.assignment.assign(n, 0);
  std::vector<size_t> counts(k, 0);

  for (size_t iter = 0; iter < opts.max_iterations; ++iter) {
    // Assignment step; ties go to the lowest cluster index.
    bool changed = iter == 0;
    for (size_t i = 0; i < n; ++i) {
      size_t best = 0;
      double best_d = detail::squared_distance(points[i], result.centroids[0]);
      for (size_t c = 1; c < k; ++c) {
        const double d = detail::squared_distance(points[i], result.centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (result.assignment[i] != best) {
        result.assignment[i] = best;
        changed = true;
      }
    }

    // Re-seed empty clusters at the point farthest from its own centroid.
    counts.assign(k, 0);
    for (size_t i = 0; i < n; ++i) ++counts[result.assignment[i]];
    for (size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      size_t farthest = n;
      double farthest_d = 0.0;
      for (size_t i = 0; i < n; ++i) {
        if (counts[result.assignment[i]] <= 1) continue;  // do not empty another
        const double d =
            detail::squared_distance(points[i], result.centroids[result.assignment[i]]);
        if (d > farthest_d) {
          farthest_d = d;
          farthest = i;
        }
      }
      if (farthest == n || farthest_d == 0.0) continue;  // nothing to gain
      --counts[result.assignment[farthest]];
      result.centroids[c] = points[farthest];
      result.assignment[farthest] = c;
      counts[c] = 1;
      changed = true;
    }

    // Update step: centroids move to the mean of their members.
    std::vector<std::vector<double>> sums(k, std::vector<double>(points.front().size(), 0.0));
    counts.assign(k, 0);
    for (size_t i = 0; i < n; ++i) {
      const size_t c = result.assignment[i];
      ++counts[c];
      for (size_t d = 0; d < points[i].size(); ++d) sums[c][d] += points[i][d];
    }
    for (size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (double& s : sums[c]) s /= static_cast<double>(counts[c]);
      result.centroids[c] = std::move(sums[c]);
    }

    double inertia = 0.0;
    for (size_t i = 0; i < n; ++i) {
      inertia += detail::squared_distance(points[i], result.centroids[result.assignment[i]]);
    }
    if (!result.inertia_trace.empty()) {
      const double prev = result.inertia_trace.back();
      if (inertia > prev + 1e-9 * (1.0 + prev)) {
        throw std::logic_error("kmeans: inertia increased across an iteration");
      }
    }
    result.inertia_trace.push_back(inertia);
    result.inertia = inertia;
    result.iterations = iter + 1;
    if (!changed) break;
  }
  return result;
}

}  // namespace ragcheck
