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
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragcheck/corpus.hpp"
#include "ragcheck/io.hpp"
#include "ragcheck/ppi.hpp"
#include "ragcheck/simulation.hpp"
#include "ragcheck/stats.hpp"
#include "ragcheck/text_metrics.hpp"

namespace ragcheck {

inline json estimate_to_json(const MetricEstimate& e) {
  return {{"method", to_string(e.method)},
          {"theta_hat", e.theta_hat},
          {"ci_low", e.ci_low},
          {"ci_high", e.ci_high},
          {"display_ci_low", e.display_low()},
          {"display_ci_high", e.display_high()},
          {"half_width", e.half_width},
          {"lambda", e.lambda},
          {"n", e.n},
          {"N", e.N},
          {"n_effective", e.n_effective},
          {"diagnostics", e.diagnostics}};
}

// ---------------------------------------------------------------------------
// Annotation-backed estimates (the three-estimator tables)

struct ThemeEstimate {
  Theme theme = Theme::finance;
  size_t n_ctrl = 0;        // units with both human and judge labels
  size_t n_judge_only = 0;  // units with only a judge label
  MetricEstimate human;     // plain survey on the human control labels
  MetricEstimate judge;     // plain survey on every judge label
  MetricEstimate ppi;       // the hybrid estimator
  AgreementReport agreement;
};

struct MetricTable {
  MetricKind metric = MetricKind::relevance;
  std::vector<ThemeEstimate> rows;
};

struct EstimateOptions {
  double alpha = 0.05;
  LambdaChoice lambda = LambdaChoice::tuned();
  std::vector<MetricKind> metrics = {MetricKind::relevance, MetricKind::veracity};
  std::vector<Theme> themes = {Theme::finance, Theme::it, Theme::rh};
  // Drop units whose answer is not in French before estimating.
  bool french_only = false;
  LanguageDetector detector;
  CitationOptions citations;
};

namespace detail {

inline Theme theme_of_unit(const Corpus& corpus, MetricKind metric,
                           const std::string& unit_id) {
  if (metric == MetricKind::relevance) {
    return corpus.question_of_answer(*corpus.answer_by_id(unit_id)).theme;
  }
  return corpus.question_of_sentence(*corpus.sentence_by_id(unit_id)).theme;
}

inline const Answer& answer_of_unit(const Corpus& corpus, MetricKind metric,
                                    const std::string& unit_id) {
  if (metric == MetricKind::relevance) return *corpus.answer_by_id(unit_id);
  return *corpus.answer_by_id(corpus.sentence_by_id(unit_id)->answer_id);
}

}  // namespace detail

/**
 * Per-theme estimation for one annotation-backed metric. The control sample
 * is the set of units holding a human label; each of those must also hold a
 * judge label. Judge-only units feed the machine side of the hybrid
 * estimator; the judge survey column pools every judge label.
 */
inline MetricTable estimate_metric(const Corpus& corpus, MetricKind metric,
                                   const EstimateOptions& opts) {
  MetricTable table;
  table.metric = metric;

  const UnitKind kind =
      metric == MetricKind::relevance ? UnitKind::answer : UnitKind::sentence;

  // Unit ids of this metric's kind, in corpus order.
  std::vector<std::string> unit_ids;
  if (kind == UnitKind::answer) {
    for (const Answer& a : corpus.answers()) unit_ids.push_back(a.id);
  } else {
    for (const Sentence& s : corpus.sentences()) unit_ids.push_back(s.id);
  }

  for (Theme theme : opts.themes) {
    std::vector<int> human_ctrl, judge_ctrl, judge_only;
    std::vector<std::string> missing_judge;
    uint64_t judge_ones = 0, judge_total = 0;

    for (const std::string& id : unit_ids) {
      if (detail::theme_of_unit(corpus, metric, id) != theme) continue;
      if (opts.french_only) {
        const Answer& a = detail::answer_of_unit(corpus, metric, id);
        if (answer_language(a, opts.detector, opts.citations) != Language::fr) continue;
      }
      const Annotation* human = corpus.annotation_for(id, metric, AnnotatorKind::human);
      const Annotation* judge = corpus.annotation_for(id, metric, AnnotatorKind::judge);
      if (judge != nullptr) {
        ++judge_total;
        judge_ones += static_cast<uint64_t>(judge->label);
      }
      if (human != nullptr) {
        if (judge == nullptr) {
          missing_judge.push_back(id);
          continue;
        }
        human_ctrl.push_back(human->label);
        judge_ctrl.push_back(judge->label);
      } else if (judge != nullptr) {
        judge_only.push_back(judge->label);
      }
    }

    if (!missing_judge.empty()) {
      std::ostringstream msg;
      msg << "estimate: " << missing_judge.size() << " control unit(s) lack a judge "
          << "annotation for " << to_string(metric) << "/" << to_string(theme) << ":";
      for (size_t i = 0; i < missing_judge.size() && i < 20; ++i) {
        msg << " " << missing_judge[i];
      }
      if (missing_judge.size() > 20) msg << " ...";
      throw std::invalid_argument(msg.str());
    }
    if (human_ctrl.empty() && judge_total == 0) continue;  // nothing to report

    ThemeEstimate row;
    row.theme = theme;
    row.n_ctrl = human_ctrl.size();
    row.n_judge_only = judge_only.size();

    if (!human_ctrl.empty()) {
      uint64_t ones = 0;
      for (int y : human_ctrl) ones += static_cast<uint64_t>(y);
      row.human = wald_interval(ones, human_ctrl.size(), opts.alpha);
    }
    if (judge_total > 0) {
      row.judge = wald_interval(judge_ones, judge_total, opts.alpha);
    }
    if (human_ctrl.size() >= 2 && !judge_only.empty()) {
      PpiInputs inputs;
      inputs.judge_all = judge_only;
      inputs.judge_ctrl = judge_ctrl;
      inputs.human_ctrl = human_ctrl;
      inputs.alpha = opts.alpha;
      row.ppi = ppi_interval(inputs, opts.lambda);
      row.agreement = agreement(judge_ctrl, human_ctrl);
    } else if (!human_ctrl.empty()) {
      row.agreement = agreement(judge_ctrl, human_ctrl);
      row.ppi.diagnostics.push_back("ppi_skipped: needs n >= 2 and judge-only units");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

// ---------------------------------------------------------------------------
// The assembled report

struct EvaluationReport {
  json config_snapshot;
  std::vector<AutoMetricReport> auto_metrics;  // optional
  std::vector<MetricTable> annotated;          // optional
  std::optional<SweepResult> simulation;       // optional

  json to_json() const {
    json doc;
    doc["config"] = config_snapshot.is_null() ? json::object() : config_snapshot;

    json auto_json = json::array();
    for (const AutoMetricReport& r : auto_metrics) {
      json row = {{"unit_kind", to_string(r.stratum.kind)},
                  {"theme", to_string(r.stratum.theme)},
                  {"metric", to_string(r.metric)},
                  {"numerator", r.numerator},
                  {"denominator", r.denominator},
                  {"rate", r.rate},
                  {"ci_low", r.ci_low},
                  {"ci_high", r.ci_high}};
      row["difficulty"] =
          r.stratum.difficulty ? json(to_string(*r.stratum.difficulty)) : json();
      auto_json.push_back(std::move(row));
    }
    doc["auto_metrics"] = std::move(auto_json);

    json annotated_json = json::array();
    for (const MetricTable& table : annotated) {
      json rows = json::array();
      for (const ThemeEstimate& row : table.rows) {
        rows.push_back({{"theme", to_string(row.theme)},
                        {"n", row.n_ctrl},
                        {"N", row.n_judge_only},
                        {"agreement",
                         {{"observed", row.agreement.observed_agreement},
                          {"random", row.agreement.random_agreement},
                          {"p_human", row.agreement.p_human},
                          {"p_judge", row.agreement.p_judge},
                          {"n_ctrl", row.agreement.n_ctrl}}},
                        {"human", estimate_to_json(row.human)},
                        {"judge", estimate_to_json(row.judge)},
                        {"ppi", estimate_to_json(row.ppi)}});
      }
      annotated_json.push_back({{"metric", to_string(table.metric)}, {"rows", rows}});
    }
    doc["annotated"] = std::move(annotated_json);

    if (simulation) {
      json points = json::array();
      for (const SweepPoint& p : simulation->points) {
        json pt = {{"a", p.a},
                   {"lambda", p.lambda},
                   {"half_width", p.half_width},
                   {"n_effective", p.n_effective},
                   {"gain", p.gain}};
        if (p.coverage) pt["coverage"] = *p.coverage;
        if (p.mc_half_width) pt["mc_half_width"] = *p.mc_half_width;
        if (p.mc_n_effective) pt["mc_n_effective"] = *p.mc_n_effective;
        points.push_back(std::move(pt));
      }
      doc["simulation"] = {{"p", simulation->p},       {"q", simulation->q},
                           {"n", simulation->n},       {"N", simulation->N},
                           {"alpha", simulation->alpha}, {"trials", simulation->trials},
                           {"points", points}};
    }
    return doc;
  }

  /// One row per stratum x metric (the automated-rates figure data).
  std::string auto_metrics_csv() const {
    std::string out = csv_row({"unit_kind", "theme", "difficulty", "metric",
                               "numerator", "denominator", "rate", "ci_low", "ci_high"});
    for (const AutoMetricReport& r : auto_metrics) {
      out += csv_row({to_string(r.stratum.kind), to_string(r.stratum.theme),
                      r.stratum.difficulty ? to_string(*r.stratum.difficulty) : "",
                      to_string(r.metric), std::to_string(r.numerator),
                      std::to_string(r.denominator), format_double(r.rate),
                      format_double(r.ci_low), format_double(r.ci_high)});
    }
    return out;
  }

  /// One row per metric x theme x estimator (the three-bars figure data).
  std::string estimates_csv() const {
    std::string out = csv_row({"metric", "theme", "method", "theta_hat", "ci_low",
                               "ci_high", "half_width", "lambda", "n", "N",
                               "n_effective"});
    for (const MetricTable& table : annotated) {
      for (const ThemeEstimate& row : table.rows) {
        auto emit = [&](const char* method, const MetricEstimate& e) {
          out += csv_row({to_string(table.metric), to_string(row.theme), method,
                          format_double(e.theta_hat), format_double(e.display_low()),
                          format_double(e.display_high()), format_double(e.half_width),
                          format_double(e.lambda), std::to_string(e.n),
                          std::to_string(e.N), format_double(e.n_effective)});
        };
        emit("human", row.human);
        emit("judge", row.judge);
        emit("ppi", row.ppi);
      }
    }
    return out;
  }

  /// One row per metric x theme (the agreement-tables data).
  std::string agreement_csv() const {
    std::string out = csv_row({"metric", "theme", "random_agreement",
                               "observed_agreement", "n_human", "n_effective",
                               "N_judge"});
    for (const MetricTable& table : annotated) {
      for (const ThemeEstimate& row : table.rows) {
        out += csv_row({to_string(table.metric), to_string(row.theme),
                        format_double(row.agreement.random_agreement),
                        format_double(row.agreement.observed_agreement),
                        std::to_string(row.n_ctrl), format_double(row.ppi.n_effective),
                        std::to_string(row.n_judge_only)});
      }
    }
    return out;
  }
};

/// Sweep CSV: one row per agreement point, directly plottable.
inline std::string simulation_csv(const SweepResult& sweep) {
  std::string out = csv_row({"a", "lambda", "half_width", "n_eff", "gain", "coverage",
                             "mc_half_width", "mc_n_eff", "mc_gain"});
  auto opt = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  for (const SweepPoint& p : sweep.points) {
    out += csv_row({format_double(p.a), format_double(p.lambda),
                    format_double(p.half_width), format_double(p.n_effective),
                    format_double(p.gain), opt(p.coverage), opt(p.mc_half_width),
                    opt(p.mc_n_effective), opt(p.mc_gain)});
  }
  return out;
}

}  // namespace ragcheck
