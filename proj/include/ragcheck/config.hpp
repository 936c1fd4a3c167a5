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

#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "ragcheck/corpus.hpp"
#include "ragcheck/text_util.hpp"

namespace ragcheck {

/**
 * Run configuration. Sourced from a `key = value` file ('#' comments),
 * overridden by environment variables for secrets, then by CLI flags.
 * Recognised keys mirror the member names, e.g.
 *
 *   dataset.questions = data/questions.jsonl
 *   alpha = 0.05
 *   endpoint.url = http://127.0.0.1:8080
 *   endpoint.model = gpt-4o-2024-08-06
 */
struct RunConfig {
  CorpusPaths dataset;
  std::string sources_path;      // source texts for the veracity judge
  std::string adapter_path;      // field-name adapter JSON
  std::string abstentions_path;  // abstention phrase list
  std::string few_shot_path;     // few-shot slot overrides

  double alpha = 0.05;
  uint64_t seed = 0;
  size_t budget = 0;
  size_t per_cluster = 3;
  std::string unit_kind = "sentence";
  std::string group_by = "theme";
  bool french_only = false;
  std::optional<double> fixed_lambda;  // power-tuned when absent

  std::string endpoint_url;
  std::string endpoint_path = "/v1/chat/completions";
  std::string api_key;
  std::string model = "gpt-4o-2024-08-06";
  double temperature = 0.0;
  size_t max_attempts = 4;
  size_t parallelism = 4;
  size_t batch_size = 1;
  bool lenient_parsing = false;

  std::string out_dir = "out";

  static RunConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    RunConfig cfg;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const size_t hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      const std::string_view stripped = trim(line);
      if (stripped.empty()) continue;
      const size_t eq = stripped.find('=');
      if (eq == std::string_view::npos) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": expected 'key = value'");
      }
      const std::string key{trim(stripped.substr(0, eq))};
      const std::string value{trim(stripped.substr(eq + 1))};
      cfg.set(key, value, path + ":" + std::to_string(lineno));
    }
    cfg.apply_env();
    return cfg;
  }

  void set(const std::string& key, const std::string& value, const std::string& where) {
    auto as_size = [&]() -> size_t { return std::stoull(value); };
    auto as_bool = [&]() {
      if (value == "true" || value == "1") return true;
      if (value == "false" || value == "0") return false;
      throw std::runtime_error(where + ": boolean expected for " + key);
    };
    try {
      if (key == "dataset.questions") dataset.questions = value;
      else if (key == "dataset.answers") dataset.answers = value;
      else if (key == "dataset.sentences") dataset.sentences = value;
      else if (key == "dataset.annotations") dataset.annotations = value;
      else if (key == "dataset.embeddings") dataset.embeddings = value;
      else if (key == "dataset.sources") sources_path = value;
      else if (key == "dataset.adapter") adapter_path = value;
      else if (key == "abstentions") abstentions_path = value;
      else if (key == "few_shot") few_shot_path = value;
      else if (key == "alpha") alpha = std::stod(value);
      else if (key == "seed") seed = std::stoull(value);
      else if (key == "budget") budget = as_size();
      else if (key == "per_cluster") per_cluster = as_size();
      else if (key == "unit_kind") unit_kind = value;
      else if (key == "group_by") group_by = value;
      else if (key == "french_only") french_only = as_bool();
      else if (key == "lambda") fixed_lambda = std::stod(value);
      else if (key == "endpoint.url") endpoint_url = value;
      else if (key == "endpoint.path") endpoint_path = value;
      else if (key == "endpoint.api_key") api_key = value;
      else if (key == "endpoint.model") model = value;
      else if (key == "endpoint.temperature") temperature = std::stod(value);
      else if (key == "endpoint.max_attempts") max_attempts = as_size();
      else if (key == "endpoint.parallelism") parallelism = as_size();
      else if (key == "endpoint.batch_size") batch_size = as_size();
      else if (key == "endpoint.lenient_parsing") lenient_parsing = as_bool();
      else if (key == "out_dir") out_dir = value;
      else throw std::runtime_error(where + ": unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw std::runtime_error(where + ": bad value for " + key);
    }
  }

  // Secrets and endpoint location may come from the environment.
  void apply_env() {
    if (const char* v = std::getenv("RAGCHECK_API_KEY")) api_key = v;
    if (const char* v = std::getenv("RAGCHECK_ENDPOINT")) endpoint_url = v;
    if (const char* v = std::getenv("RAGCHECK_MODEL")) model = v;
  }

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) {
      throw std::runtime_error("config: alpha must lie in (0, 1)");
    }
    if (fixed_lambda && !(*fixed_lambda >= 0.0 && *fixed_lambda <= 1.0)) {
      throw std::runtime_error("config: lambda must lie in [0, 1]");
    }
    if (unit_kind != "answer" && unit_kind != "sentence") {
      throw std::runtime_error("config: unit_kind must be 'answer' or 'sentence'");
    }
    if (group_by != "theme" && group_by != "theme_difficulty") {
      throw std::runtime_error("config: group_by must be 'theme' or 'theme_difficulty'");
    }
    if (per_cluster == 0) {
      throw std::runtime_error("config: per_cluster must be >= 1");
    }
  }

  /// Snapshot embedded in every report; the API key is redacted to presence.
  json to_json() const {
    return {
        {"dataset",
         {{"questions", dataset.questions},
          {"answers", dataset.answers},
          {"sentences", dataset.sentences},
          {"annotations", dataset.annotations},
          {"embeddings", dataset.embeddings},
          {"sources", sources_path},
          {"adapter", adapter_path}}},
        {"abstentions", abstentions_path},
        {"alpha", alpha},
        {"seed", seed},
        {"budget", budget},
        {"per_cluster", per_cluster},
        {"unit_kind", unit_kind},
        {"group_by", group_by},
        {"french_only", french_only},
        {"lambda", fixed_lambda ? json(*fixed_lambda) : json("power_tuned")},
        {"endpoint",
         {{"url", endpoint_url},
          {"path", endpoint_path},
          {"api_key_set", !api_key.empty()},
          {"model", model},
          {"temperature", temperature},
          {"max_attempts", max_attempts},
          {"parallelism", parallelism},
          {"batch_size", batch_size},
          {"lenient_parsing", lenient_parsing}}},
        {"out_dir", out_dir},
    };
  }
};

}  // namespace ragcheck
