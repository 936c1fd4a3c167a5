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
#include <cstdint>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragcheck/corpus.hpp"
#include "ragcheck/io.hpp"
#include "ragcheck/kmeans.hpp"
#include "ragcheck/rng.hpp"

namespace ragcheck {

struct ClusterPlan {
  std::vector<double> centroid;
  std::vector<std::string> members;   // unit ids, stratum order
  std::vector<std::string> selected;  // subset of members
};

struct StratumPlan {
  StratumKey key;
  size_t budget = 0;  // the stratum's slice of the global budget
  size_t cluster_count = 0;
  std::vector<ClusterPlan> clusters;
};

struct SamplingPlan {
  uint64_t seed = 0;
  size_t budget = 0;
  size_t per_cluster = 0;
  UnitKind unit_kind = UnitKind::answer;
  GroupBy group_by = GroupBy::theme;
  std::vector<StratumPlan> strata;

  size_t selected_count() const {
    size_t total = 0;
    for (const StratumPlan& s : strata) {
      for (const ClusterPlan& c : s.clusters) total += c.selected.size();
    }
    return total;
  }

  json to_json() const {
    json strata_json = json::array();
    for (const StratumPlan& s : strata) {
      json clusters = json::array();
      for (const ClusterPlan& c : s.clusters) {
        clusters.push_back({{"centroid", c.centroid},
                            {"members", c.members},
                            {"selected", c.selected}});
      }
      json key = {{"unit_kind", to_string(s.key.kind)},
                  {"theme", to_string(s.key.theme)}};
      if (s.key.difficulty) key["difficulty"] = to_string(*s.key.difficulty);
      strata_json.push_back({{"stratum", key},
                             {"budget", s.budget},
                             {"cluster_count", s.cluster_count},
                             {"clusters", clusters}});
    }
    return {{"seed", seed},
            {"budget", budget},
            {"per_cluster", per_cluster},
            {"unit_kind", to_string(unit_kind)},
            {"group_by", group_by == GroupBy::theme ? "theme" : "theme_difficulty"},
            {"strata", strata_json}};
  }

  /// Worklist rows for the human-annotation workflow.
  std::string worklist_csv(const Corpus& corpus) const {
    std::string out = csv_row({"unit_id", "unit_kind", "theme", "difficulty",
                               "stratum", "cluster", "text"});
    for (const StratumPlan& s : strata) {
      for (size_t c = 0; c < s.clusters.size(); ++c) {
        for (const std::string& id : s.clusters[c].selected) {
          std::string text, difficulty;
          Theme theme = s.key.theme;
          if (unit_kind == UnitKind::answer) {
            const Answer* a = corpus.answer_by_id(id);
            text = a->text;
            difficulty = to_string(corpus.question_of_answer(*a).difficulty);
          } else {
            const Sentence* sent = corpus.sentence_by_id(id);
            text = sent->text;
            difficulty = to_string(corpus.question_of_sentence(*sent).difficulty);
          }
          out += csv_row({id, to_string(unit_kind), to_string(theme), difficulty,
                          s.key.label(), std::to_string(c), text});
        }
      }
    }
    return out;
  }
};

struct SamplerOptions {
  size_t budget = 0;
  size_t per_cluster = 3;
  uint64_t seed = 0;
  UnitKind unit_kind = UnitKind::sentence;
  GroupBy group_by = GroupBy::theme;
  KMeansOptions kmeans;
  // Per-stratum budget overrides keyed by StratumKey::label(); strata not
  // listed share the remaining budget proportionally.
  std::map<std::string, size_t> budget_override;
};

namespace detail {

// Largest-remainder apportionment of `total` across `sizes`.
inline std::vector<size_t> largest_remainder(const std::vector<size_t>& sizes,
                                             size_t total) {
  const size_t universe = std::accumulate(sizes.begin(), sizes.end(), size_t{0});
  std::vector<size_t> shares(sizes.size(), 0);
  if (universe == 0 || total == 0) return shares;
  std::vector<std::pair<double, size_t>> remainders;  // (-fraction, index)
  size_t assigned = 0;
  for (size_t i = 0; i < sizes.size(); ++i) {
    const double exact = static_cast<double>(total) * static_cast<double>(sizes[i]) /
                         static_cast<double>(universe);
    shares[i] = static_cast<size_t>(exact);
    assigned += shares[i];
    remainders.push_back({-(exact - static_cast<double>(shares[i])), i});
  }
  std::stable_sort(remainders.begin(), remainders.end());
  for (size_t r = 0; assigned < total && r < remainders.size(); ++r) {
    ++shares[remainders[r].second];
    ++assigned;
  }
  return shares;
}

}  // namespace detail

/**
 * Budget-driven stratified sampling: per stratum, cluster the unit embeddings
 * with k-means (K = max(1, floor(stratum budget / m))) and draw m units
 * uniformly without replacement from each cluster. Fully reproducible from
 * (corpus, embeddings, budget, m, seed).
 */
inline SamplingPlan plan_sample(const Corpus& corpus, const SamplerOptions& opts) {
  if (opts.budget < opts.per_cluster) {
    throw std::invalid_argument("plan_sample: budget must be at least m");
  }
  if (opts.per_cluster == 0) {
    throw std::invalid_argument("plan_sample: m must be >= 1");
  }

  // Strata of the requested kind, in deterministic key order.
  std::vector<Stratum> strata;
  for (Stratum& s : corpus.strata(opts.group_by)) {
    if (s.key.kind == opts.unit_kind) strata.push_back(std::move(s));
  }

  // Every unit in scope needs an embedding.
  std::vector<std::string> missing;
  for (const Stratum& s : strata) {
    for (const std::string& id : s.unit_ids) {
      if (corpus.embedding_of(id) == nullptr) missing.push_back(id);
    }
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "plan_sample: " << missing.size() << " unit(s) lack embeddings:";
    for (size_t i = 0; i < missing.size() && i < 20; ++i) msg << " " << missing[i];
    if (missing.size() > 20) msg << " ...";
    throw std::invalid_argument(msg.str());
  }

  // Split the budget: overrides first, remainder proportional to size.
  std::vector<size_t> budgets(strata.size(), 0);
  size_t override_total = 0;
  std::vector<size_t> free_sizes;
  std::vector<size_t> free_index;
  for (size_t i = 0; i < strata.size(); ++i) {
    auto it = opts.budget_override.find(strata[i].key.label());
    if (it != opts.budget_override.end()) {
      budgets[i] = it->second;
      override_total += it->second;
    } else {
      free_index.push_back(i);
      free_sizes.push_back(strata[i].unit_ids.size());
    }
  }
  if (override_total > opts.budget) {
    throw std::invalid_argument("plan_sample: budget overrides exceed the global budget");
  }
  const std::vector<size_t> shares =
      detail::largest_remainder(free_sizes, opts.budget - override_total);
  for (size_t j = 0; j < free_index.size(); ++j) budgets[free_index[j]] = shares[j];

  SamplingPlan plan;
  plan.seed = opts.seed;
  plan.budget = opts.budget;
  plan.per_cluster = opts.per_cluster;
  plan.unit_kind = opts.unit_kind;
  plan.group_by = opts.group_by;

  for (size_t si = 0; si < strata.size(); ++si) {
    const Stratum& stratum = strata[si];
    const size_t stratum_budget = budgets[si];
    if (stratum_budget == 0 || stratum.unit_ids.empty()) continue;

    StratumPlan sp;
    sp.key = stratum.key;
    sp.budget = stratum_budget;

    const size_t m = opts.per_cluster;
    size_t k = std::max<size_t>(1, stratum_budget / m);
    k = std::min(k, stratum.unit_ids.size());
    sp.cluster_count = k;
    // When the stratum budget cannot fund a single full cluster draw, the
    // one cluster's take is capped by the budget itself.
    const size_t take_cap = stratum_budget < m ? stratum_budget : m;

    std::vector<std::vector<double>> vectors;
    vectors.reserve(stratum.unit_ids.size());
    for (const std::string& id : stratum.unit_ids) {
      vectors.push_back(*corpus.embedding_of(id));
    }
    const KMeansResult km =
        kmeans(vectors, k, derive_seed(opts.seed, 0xA110C000ULL + si), opts.kmeans);

    sp.clusters.resize(k);
    for (size_t c = 0; c < k; ++c) sp.clusters[c].centroid = km.centroids[c];
    for (size_t i = 0; i < stratum.unit_ids.size(); ++i) {
      sp.clusters[km.assignment[i]].members.push_back(stratum.unit_ids[i]);
    }
    for (size_t c = 0; c < k; ++c) {
      Rng rng(derive_seed(opts.seed, (0x5E1EC7ULL << 20) ^ (si << 10) ^ c));
      const size_t take = std::min(take_cap, sp.clusters[c].members.size());
      sp.clusters[c].selected = rng.sample_without_replacement(sp.clusters[c].members, take);
    }
    plan.strata.push_back(std::move(sp));
  }
  return plan;
}

}  // namespace ragcheck
