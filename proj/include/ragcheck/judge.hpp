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

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ragcheck/corpus.hpp"
#include "ragcheck/text_util.hpp"

namespace ragcheck {

// ---------------------------------------------------------------------------
// Prompt templates
//
// French instruction prompts with named {placeholder} slots. The veracity
// prompt receives the cited sources, the surrounding paragraph and the
// sentence(s) to grade; the relevance prompt receives the question/answer
// pair. Both demand a bare JSON object whose "verdicts" key holds one verdict
// per graded unit.

struct PromptTemplate {
  MetricKind metric = MetricKind::veracity;
  std::string text;

  static PromptTemplate default_veracity() {
    PromptTemplate t;
    t.metric = MetricKind::veracity;
    t.text =
        "Rôle :\n"
        "Votre mission est d'analyser la véracité des phrases fournies par "
        "rapport à des documents de référence. Dès qu'une "
        "information d'une phrase n'est pas déductible des sources, la phrase "
        "entière doit être classée comme non déductible.\n"
        "\n"
        "Les données fournies sont :\n"
        "- Sources : les documents de référence.\n"
        "- Paragraphe : le paragraphe qui contextualise chaque phrase.\n"
        "- Phrases : les phrases dont le caractère déductible doit être "
        "évalué.\n"
        "\n"
        "Instructions d'évaluation :\n"
        "1. Lire les sources en entier.\n"
        "2. Lire le paragraphe en entier.\n"
        "3. Lire les phrases en entier.\n"
        "4. Pour chaque phrase, raisonner pas à pas sur le caractère "
        "déductible des informations de la phrase par rapport aux sources.\n"
        "5. Si les informations de la phrase sont insuffisantes ou ambiguës, "
        "utiliser des connaissances générales pour déterminer si elles "
        "sont réellement déductibles des sources.\n"
        "6. En déduire une évaluation finale pour chaque phrase.\n"
        "\n"
        "Chaque évaluation est un label :\n"
        "- 0 : Au moins une information n'est pas déductible des sources.\n"
        "- 1 : Toutes les informations sont déductibles des sources.\n"
        "\n"
        "Format des réponses :\n"
        "Renvoyer uniquement un JSON de la structure suivante :\n"
        "{json_schema}\n"
        "\n"
        "Important : le contenu renvoyé doit être un JSON strictement "
        "valide, sans texte supplémentaire, sans explication ni commentaire, "
        "directement parsable, la clé « verdicts » contenant une liste "
        "d'objets JSON.\n"
        "\n"
        "Exemples :\n"
        "\n"
        "Exemple de sources :\n"
        "{example_sources}\n"
        "\n"
        "Exemple de paragraphe :\n"
        "{example_paragraph}\n"
        "\n"
        "Exemple de phrases :\n"
        "{example_statements}\n"
        "\n"
        "Exemple de réponse au format JSON :\n"
        "{example_output}\n"
        "\n"
        "Voici les données :\n"
        "\n"
        "Sources :\n"
        "{sources}\n"
        "\n"
        "Paragraphe :\n"
        "{paragraphe}\n"
        "\n"
        "Phrases :\n"
        "{phrases}\n"
        "\n"
        "JSON :";
    return t;
  }

  static PromptTemplate default_relevance() {
    PromptTemplate t;
    t.metric = MetricKind::relevance;
    t.text =
        "Rôle :\n"
        "Votre mission est d'évaluer la pertinence d'une réponse par "
        "rapport à une question posée. Une réponse est pertinente si "
        "elle répond à la question posée et n'introduit pas "
        "d'éléments hors sujet. Il ne s'agit pas d'évaluer la "
        "véracité de la réponse, ni son objectivité.\n"
        "\n"
        "Les données fournies sont :\n"
        "- Question : la question posée.\n"
        "- Réponse : la réponse à évaluer.\n"
        "\n"
        "Instructions d'évaluation :\n"
        "1. Lire attentivement la question.\n"
        "2. Lire attentivement la réponse.\n"
        "3. Raisonner pas à pas sur le caractère pertinent des "
        "informations de la réponse.\n"
        "4. En déduire une évaluation finale.\n"
        "\n"
        "Chaque évaluation est un label :\n"
        "- 0 : La réponse est partiellement pertinente et contient au moins un "
        "hors sujet.\n"
        "- 1 : La réponse est totalement pertinente.\n"
        "\n"
        "Format des réponses :\n"
        "Renvoyer uniquement un JSON de la structure suivante :\n"
        "{json_schema}\n"
        "\n"
        "Important : le contenu renvoyé doit être un JSON strictement "
        "valide, sans texte supplémentaire, sans explication ni commentaire, "
        "directement parsable, la clé « verdicts » contenant une liste "
        "d'objets JSON.\n"
        "\n"
        "Exemples :\n"
        "\n"
        "Exemple de question :\n"
        "{example_question}\n"
        "\n"
        "Exemple de réponse :\n"
        "{example_answer}\n"
        "\n"
        "Exemple de réponse au format JSON :\n"
        "{example_output}\n"
        "\n"
        "Voici les données :\n"
        "\n"
        "Question :\n"
        "{question}\n"
        "\n"
        "Réponse :\n"
        "{réponse}\n"
        "\n"
        "JSON :";
    return t;
  }

  static PromptTemplate from_file(MetricKind metric, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open prompt template: " + path);
    PromptTemplate t;
    t.metric = metric;
    t.text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    return t;
  }
};

/// Few-shot slot contents and the JSON schema block. The built-in defaults
/// are generic stand-ins; deployments edit them via a JSON file with the
/// same keys.
struct FewShotSlots {
  std::map<std::string, std::string> values;

  static FewShotSlots defaults() {
    FewShotSlots s;
    s.values["json_schema"] =
        "{\"verdicts\": [{\"id\": \"<identifiant>\", \"label\": 0 ou 1}]}";
    s.values["example_sources"] =
        "Source 1a2b3c :\nLe contrat de maintenance a été signé en 2015 "
        "pour une durée de trois ans.";
    s.values["example_paragraph"] =
        "Le contrat de maintenance a été signé en 2015 [^1a2b3c^]. Il "
        "couvre trois années.";
    s.values["example_statements"] =
        "s1 : Le contrat de maintenance a été signé en 2015 [^1a2b3c^].";
    s.values["example_output"] = "{\"verdicts\": [{\"id\": \"s1\", \"label\": 1}]}";
    s.values["example_question"] =
        "Quelle est la durée du contrat de maintenance ?";
    s.values["example_answer"] =
        "Le contrat de maintenance couvre trois années [^1a2b3c^].";
    return s;
  }

  static FewShotSlots from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open few-shot slots: " + path);
    FewShotSlots s = defaults();
    const json j = json::parse(in);
    for (const auto& [key, value] : j.items()) {
      s.values[key] = value.get<std::string>();
    }
    return s;
  }
};

/// Substitute {name} tokens. Throws when the template names a placeholder the
/// value map does not fill; rendering is byte-stable for fixed inputs.
inline std::string render_template(const std::string& template_text,
                                   const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(template_text.size());
  size_t i = 0;
  while (i < template_text.size()) {
    const char c = template_text[i];
    if (c != '{') {
      out.push_back(c);
      ++i;
      continue;
    }
    const size_t close = template_text.find('}', i + 1);
    if (close == std::string::npos) {
      throw std::invalid_argument("render_template: unbalanced '{' in template");
    }
    const std::string name = template_text.substr(i + 1, close - i - 1);
    const auto it = values.find(name);
    if (it == values.end()) {
      throw std::invalid_argument("render_template: unfilled placeholder {" + name + "}");
    }
    out += it->second;
    i = close + 1;
  }
  return out;
}

/// Source-id -> source-text side table consumed by the veracity prompt.
struct SourceTable {
  std::map<std::string, std::string> texts;

  static SourceTable from_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sources file: " + path);
    SourceTable table;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      json obj;
      try {
        obj = json::parse(line);
      } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
      }
      table.texts[obj.at("source_id").get<std::string>()] =
          obj.at("text").get<std::string>();
    }
    return table;
  }

  const std::string* find(const std::string& id) const {
    auto it = texts.find(id);
    return it == texts.end() ? nullptr : &it->second;
  }
};

/// Veracity prompt for a batch of sentences sharing one paragraph. Every
/// cited source must have a text in the table.
inline std::string render_veracity_prompt(const PromptTemplate& tmpl,
                                          const std::vector<const Sentence*>& batch,
                                          const std::string& paragraph,
                                          const SourceTable& sources,
                                          const FewShotSlots& slots) {
  std::set<std::string> source_ids;
  for (const Sentence* s : batch) {
    for (const std::string& id : s->cited_source_ids) source_ids.insert(id);
  }
  std::string sources_block;
  for (const std::string& id : source_ids) {
    const std::string* text = sources.find(id);
    if (text == nullptr) {
      throw std::invalid_argument("render_veracity_prompt: no text for source '" + id +
                                  "'");
    }
    if (!sources_block.empty()) sources_block += "\n\n";
    sources_block += "Source " + id + " :\n" + *text;
  }
  std::string phrases_block;
  for (const Sentence* s : batch) {
    if (!phrases_block.empty()) phrases_block += "\n";
    phrases_block += s->id + " : " + s->text;
  }
  std::map<std::string, std::string> values = slots.values;
  values["sources"] = sources_block;
  values["paragraphe"] = paragraph;
  values["phrases"] = phrases_block;
  return render_template(tmpl.text, values);
}

inline std::string render_relevance_prompt(const PromptTemplate& tmpl,
                                           const std::string& question,
                                           const std::string& answer,
                                           const FewShotSlots& slots) {
  std::map<std::string, std::string> values = slots.values;
  values["question"] = question;
  values["réponse"] = answer;
  return render_template(tmpl.text, values);
}

// ---------------------------------------------------------------------------
// Verdict parsing

enum class VerdictErrorKind {
  invalid_json,
  missing_verdicts,
  not_array,
  count_mismatch,
  id_mismatch,
  element_shape,
  label_domain,
};

inline const char* to_string(VerdictErrorKind k) {
  switch (k) {
    case VerdictErrorKind::invalid_json: return "invalid_json";
    case VerdictErrorKind::missing_verdicts: return "missing_verdicts";
    case VerdictErrorKind::not_array: return "not_array";
    case VerdictErrorKind::count_mismatch: return "count_mismatch";
    case VerdictErrorKind::id_mismatch: return "id_mismatch";
    case VerdictErrorKind::element_shape: return "element_shape";
    default: return "label_domain";
  }
}

class VerdictError : public std::runtime_error {
public:
  VerdictError(VerdictErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}
  VerdictErrorKind kind() const { return kind_; }

private:
  VerdictErrorKind kind_;
};

struct JudgeVerdict {
  std::string unit_id;
  int label = 0;
  std::string raw_response;
  std::string model_id;
  double temperature = 0.0;
};

enum class ParseLeniency { strict, strip_fences };

namespace detail {

// Accept exactly the literals 0 / 1, as JSON integers or strings.
inline std::optional<int> coerce_label(const json& v) {
  if (v.is_number_integer()) {
    const auto x = v.get<int64_t>();
    if (x == 0 || x == 1) return static_cast<int>(x);
    return std::nullopt;
  }
  if (v.is_string()) {
    const std::string& s = v.get_ref<const std::string&>();
    if (s == "0") return 0;
    if (s == "1") return 1;
  }
  return std::nullopt;
}

inline std::string strip_markdown_fences(const std::string& raw) {
  std::string_view s = trim(raw);
  if (s.substr(0, 3) != "```") return std::string(s);
  const size_t first_newline = s.find('\n');
  if (first_newline == std::string_view::npos) return std::string(s);
  s.remove_prefix(first_newline + 1);
  const size_t closing = s.rfind("```");
  if (closing != std::string_view::npos) s = s.substr(0, closing);
  return std::string(trim(s));
}

}  // namespace detail

/**
 * Strict parse of a judge response: a bare JSON object whose "verdicts" array
 * holds exactly one verdict per expected unit. Verdicts either all carry an
 * "id" (matched as a set against the expected ids) or none do (positional).
 * Labels are accepted only as literal 0/1, numeric or string. Any deviation
 * throws a VerdictError with a distinct kind so the unit can be retried.
 */
inline std::vector<JudgeVerdict> parse_verdicts(
    const std::string& raw, const std::vector<std::string>& expected_unit_ids,
    ParseLeniency leniency = ParseLeniency::strict) {
  const std::string body =
      leniency == ParseLeniency::strip_fences ? detail::strip_markdown_fences(raw) : raw;
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw VerdictError(VerdictErrorKind::invalid_json, e.what());
  }
  // Round-trip sanity: the re-serialised document must parse back to an
  // equal structure.
  if (json::parse(doc.dump()) != doc) {
    throw VerdictError(VerdictErrorKind::invalid_json, "round-trip mismatch");
  }
  if (!doc.is_object() || !doc.contains("verdicts")) {
    throw VerdictError(VerdictErrorKind::missing_verdicts,
                       "top level must be an object with a 'verdicts' key");
  }
  const json& verdicts = doc["verdicts"];
  if (!verdicts.is_array()) {
    throw VerdictError(VerdictErrorKind::not_array, "'verdicts' must be an array");
  }
  if (verdicts.size() != expected_unit_ids.size()) {
    throw VerdictError(VerdictErrorKind::count_mismatch,
                       "expected " + std::to_string(expected_unit_ids.size()) +
                           " verdict(s), got " + std::to_string(verdicts.size()));
  }

  size_t with_id = 0;
  for (const json& v : verdicts) {
    if (!v.is_object() || !v.contains("label")) {
      throw VerdictError(VerdictErrorKind::element_shape,
                         "each verdict must be an object with a 'label'");
    }
    if (v.contains("id")) ++with_id;
  }
  if (with_id != 0 && with_id != verdicts.size()) {
    throw VerdictError(VerdictErrorKind::element_shape,
                       "verdicts mix id-carrying and bare elements");
  }

  std::vector<JudgeVerdict> out;
  out.reserve(expected_unit_ids.size());
  if (with_id == 0) {
    for (size_t i = 0; i < verdicts.size(); ++i) {
      const std::optional<int> label = detail::coerce_label(verdicts[i]["label"]);
      if (!label) {
        throw VerdictError(VerdictErrorKind::label_domain,
                           "label must be the literal 0 or 1");
      }
      out.push_back({expected_unit_ids[i], *label, raw, "", 0.0});
    }
    return out;
  }

  std::map<std::string, int> by_id;
  for (const json& v : verdicts) {
    if (!v["id"].is_string()) {
      throw VerdictError(VerdictErrorKind::element_shape, "'id' must be a string");
    }
    const std::string id = v["id"].get<std::string>();
    const std::optional<int> label = detail::coerce_label(v["label"]);
    if (!label) {
      throw VerdictError(VerdictErrorKind::label_domain,
                         "label must be the literal 0 or 1");
    }
    if (!by_id.emplace(id, *label).second) {
      throw VerdictError(VerdictErrorKind::id_mismatch, "duplicate verdict id '" + id + "'");
    }
  }
  for (const std::string& id : expected_unit_ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw VerdictError(VerdictErrorKind::id_mismatch, "missing verdict for '" + id + "'");
    }
    out.push_back({id, it->second, raw, "", 0.0});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Backends

struct BackendRequest {
  std::vector<std::string> unit_ids;
  std::string prompt;
  std::string model;
  double temperature = 0.0;
};

struct BackendReply {
  std::string content;
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

struct BackendFailure {
  std::string message;
  bool retriable = true;
};

using BackendResult = std::variant<BackendReply, BackendFailure>;

class JudgeBackend {
public:
  virtual ~JudgeBackend() = default;
  virtual BackendResult complete(const BackendRequest& request) = 0;
};

/**
 * Deterministic in-process backend for offline runs and tests. Labels come
 * from a configurable function of the unit id; failures can be injected per
 * unit, either a number of transient failures before success or a permanent
 * refusal. Token counts are synthesised from the prompt size.
 */
class MockJudgeBackend : public JudgeBackend {
public:
  std::function<int(const std::string&)> label_fn = [](const std::string&) { return 1; };
  std::function<size_t(const std::string&)> transient_failures_fn =
      [](const std::string&) { return size_t{0}; };
  std::function<bool(const std::string&)> permanent_failure_fn =
      [](const std::string&) { return false; };
  // When set, replaces the response body wholesale (malformed-output tests).
  std::function<std::optional<std::string>(const std::string&)> raw_override_fn =
      [](const std::string&) { return std::nullopt; };

  BackendResult complete(const BackendRequest& request) override {
    const std::string key = request.unit_ids.empty() ? "" : request.unit_ids.front();
    {
      std::lock_guard<std::mutex> lock(mutex_);
      const size_t seen = attempts_[key]++;
      if (permanent_failure_fn(key)) {
        return BackendFailure{"permanent backend refusal", false};
      }
      if (seen < transient_failures_fn(key)) {
        return BackendFailure{"transient backend error", true};
      }
    }
    if (const auto raw = raw_override_fn(key)) {
      return BackendReply{*raw, static_cast<long>(request.prompt.size() / 4), 8};
    }
    json verdicts = json::array();
    for (const std::string& id : request.unit_ids) {
      verdicts.push_back({{"id", id}, {"label", label_fn(id)}});
    }
    const json doc = {{"verdicts", verdicts}};
    return BackendReply{doc.dump(), static_cast<long>(request.prompt.size() / 4),
                        static_cast<long>(8 * request.unit_ids.size())};
  }

  size_t attempts_for(const std::string& unit_id) {
    std::lock_guard<std::mutex> lock(mutex_);
    return attempts_[unit_id];
  }

private:
  std::mutex mutex_;
  std::map<std::string, size_t> attempts_;
};

// ---------------------------------------------------------------------------
// Retry policy

struct RetryPolicy {
  size_t max_attempts = 4;
  double base_delay_ms = 250.0;
  double multiplier = 2.0;
  double max_delay_ms = 8000.0;
  // Injectable for tests; the default really sleeps.
  std::function<void(double)> sleeper = [](double ms) {
    std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
  };

  double delay_for_attempt(size_t attempt) const {  // attempt is 1-based
    double d = base_delay_ms;
    for (size_t i = 1; i < attempt; ++i) d *= multiplier;
    return std::min(d, max_delay_ms);
  }
};

// ---------------------------------------------------------------------------
// Corpus-scale annotation

struct UnitOutcome {
  std::string unit_id;
  bool ok = false;
  int label = 0;
  size_t attempts = 0;
  std::string error;        // last error for failed units
  std::string prompt_hash;  // fnv1a64 of the rendered prompt
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

struct RunManifest {
  std::string model_id;
  double temperature = 0.0;
  MetricKind metric = MetricKind::veracity;
  std::string template_hash;
  std::vector<UnitOutcome> outcomes;  // unit scope order

  size_t ok_count() const {
    size_t n = 0;
    for (const auto& o : outcomes) n += o.ok ? 1 : 0;
    return n;
  }
  size_t failed_count() const { return outcomes.size() - ok_count(); }

  std::string to_jsonl() const {
    std::string out;
    const json header = {{"record", "run"},
                         {"model_id", model_id},
                         {"temperature", temperature},
                         {"metric", to_string(metric)},
                         {"template_hash", template_hash},
                         {"units", outcomes.size()},
                         {"ok", ok_count()},
                         {"failed", failed_count()}};
    out += header.dump();
    out += "\n";
    for (const UnitOutcome& o : outcomes) {
      json j = {{"record", "unit"},
                {"unit_id", o.unit_id},
                {"outcome", o.ok ? "ok" : "failed"},
                {"attempts", o.attempts},
                {"prompt_hash", o.prompt_hash},
                {"prompt_tokens", o.prompt_tokens},
                {"completion_tokens", o.completion_tokens}};
      if (o.ok) j["label"] = o.label;
      if (!o.error.empty()) j["error"] = o.error;
      out += j.dump();
      out += "\n";
    }
    return out;
  }
};

struct AnnotateOptions {
  MetricKind metric = MetricKind::veracity;
  std::string model_id = "mock";
  double temperature = 0.0;
  RetryPolicy retry;
  size_t parallelism = 4;
  size_t batch_size = 1;  // sentences per veracity request
  ParseLeniency leniency = ParseLeniency::strict;
  std::string provenance = "judge-run";
  PromptTemplate veracity_template = PromptTemplate::default_veracity();
  PromptTemplate relevance_template = PromptTemplate::default_relevance();
  FewShotSlots slots = FewShotSlots::defaults();
  SourceTable sources;  // required for veracity
};

struct AnnotateResult {
  std::vector<Annotation> records;
  RunManifest manifest;
};

namespace detail {

struct JudgeChunk {
  std::vector<std::string> unit_ids;
  std::string prompt;        // empty when rendering failed
  std::string render_error;  // non-empty when rendering failed
};

}  // namespace detail

/**
 * Run the judge over every in-scope unit of the corpus: all answers for
 * relevance, all sentences with at least one cited source for veracity.
 * Transport and parse failures retry with exponential backoff; a unit that
 * still fails is recorded as a terminal failure, never dropped. The manifest
 * carries one entry per unit in deterministic scope order regardless of the
 * fan-out schedule.
 */
inline AnnotateResult annotate_corpus(const Corpus& corpus, JudgeBackend& backend,
                                      const AnnotateOptions& opts) {
  // Build request chunks in deterministic corpus order.
  std::vector<detail::JudgeChunk> chunks;
  if (opts.metric == MetricKind::relevance) {
    for (const Answer& a : corpus.answers()) {
      detail::JudgeChunk chunk;
      chunk.unit_ids = {a.id};
      try {
        chunk.prompt = render_relevance_prompt(
            opts.relevance_template, corpus.question_of_answer(a).text, a.text, opts.slots);
      } catch (const std::exception& e) {
        chunk.render_error = e.what();
      }
      chunks.push_back(std::move(chunk));
    }
  } else {
    const size_t batch = std::max<size_t>(1, opts.batch_size);
    for (const Answer& a : corpus.answers()) {
      std::vector<const Sentence*> cited;
      for (const Sentence* s : corpus.sentences_of(a.id)) {
        if (!s->cited_source_ids.empty()) cited.push_back(s);
      }
      for (size_t start = 0; start < cited.size(); start += batch) {
        const size_t stop = std::min(cited.size(), start + batch);
        const std::vector<const Sentence*> group(cited.begin() + start,
                                                 cited.begin() + stop);
        detail::JudgeChunk chunk;
        for (const Sentence* s : group) chunk.unit_ids.push_back(s->id);
        try {
          chunk.prompt = render_veracity_prompt(opts.veracity_template, group, a.text,
                                                opts.sources, opts.slots);
        } catch (const std::exception& e) {
          chunk.render_error = e.what();
        }
        chunks.push_back(std::move(chunk));
      }
    }
  }

  struct ChunkOutcome {
    bool ok = false;
    size_t attempts = 0;
    std::string error;
    std::vector<JudgeVerdict> verdicts;
    long prompt_tokens = 0;
    long completion_tokens = 0;
  };
  std::vector<ChunkOutcome> results(chunks.size());

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const size_t idx = next.fetch_add(1);
      if (idx >= chunks.size()) return;
      const detail::JudgeChunk& chunk = chunks[idx];
      ChunkOutcome& outcome = results[idx];
      if (!chunk.render_error.empty()) {
        outcome.error = "render: " + chunk.render_error;
        continue;  // terminal, no attempts
      }
      BackendRequest request{chunk.unit_ids, chunk.prompt, opts.model_id,
                             opts.temperature};
      for (size_t attempt = 1; attempt <= opts.retry.max_attempts; ++attempt) {
        outcome.attempts = attempt;
        const BackendResult result = backend.complete(request);
        if (const auto* failure = std::get_if<BackendFailure>(&result)) {
          outcome.error = failure->message;
          if (!failure->retriable) break;
        } else {
          const auto& reply = std::get<BackendReply>(result);
          outcome.prompt_tokens = reply.prompt_tokens;
          outcome.completion_tokens = reply.completion_tokens;
          try {
            outcome.verdicts =
                parse_verdicts(reply.content, chunk.unit_ids, opts.leniency);
            outcome.ok = true;
            outcome.error.clear();
            break;
          } catch (const VerdictError& e) {
            outcome.error = e.what();  // parse errors retry like transport ones
          }
        }
        if (attempt < opts.retry.max_attempts) {
          opts.retry.sleeper(opts.retry.delay_for_attempt(attempt));
        }
      }
    }
  };

  const size_t width = std::max<size_t>(1, std::min(opts.parallelism, chunks.size()));
  std::vector<std::thread> threads;
  threads.reserve(width);
  for (size_t w = 0; w < width; ++w) threads.emplace_back(worker);
  for (std::thread& t : threads) t.join();

  AnnotateResult out;
  out.manifest.model_id = opts.model_id;
  out.manifest.temperature = opts.temperature;
  out.manifest.metric = opts.metric;
  const PromptTemplate& tmpl = opts.metric == MetricKind::relevance
                                   ? opts.relevance_template
                                   : opts.veracity_template;
  out.manifest.template_hash = to_hex(fnv1a64(tmpl.text));

  for (size_t idx = 0; idx < chunks.size(); ++idx) {
    const detail::JudgeChunk& chunk = chunks[idx];
    const ChunkOutcome& res = results[idx];
    const std::string prompt_hash =
        chunk.prompt.empty() ? "" : to_hex(fnv1a64(chunk.prompt));
    for (size_t u = 0; u < chunk.unit_ids.size(); ++u) {
      UnitOutcome unit;
      unit.unit_id = chunk.unit_ids[u];
      unit.attempts = res.attempts;
      unit.prompt_hash = prompt_hash;
      unit.prompt_tokens = res.prompt_tokens;
      unit.completion_tokens = res.completion_tokens;
      if (res.ok) {
        unit.ok = true;
        unit.label = res.verdicts[u].label;
        Annotation record;
        record.unit_id = unit.unit_id;
        record.unit_kind = opts.metric == MetricKind::relevance ? UnitKind::answer
                                                                : UnitKind::sentence;
        record.metric = opts.metric;
        record.annotator = AnnotatorKind::judge;
        record.label = unit.label;
        record.provenance = opts.provenance;
        record.raw = {{"unit_id", record.unit_id},
                      {"unit_kind", to_string(record.unit_kind)},
                      {"metric", to_string(record.metric)},
                      {"annotator", "judge"},
                      {"label", record.label},
                      {"provenance", record.provenance},
                      {"model_id", opts.model_id},
                      {"temperature", opts.temperature}};
        out.records.push_back(std::move(record));
      } else {
        unit.error = res.error;
      }
      out.manifest.outcomes.push_back(std::move(unit));
    }
  }
  return out;
}

}  // namespace ragcheck
