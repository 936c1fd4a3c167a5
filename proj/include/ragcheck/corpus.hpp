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
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "ragcheck/text_util.hpp"

namespace ragcheck {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Closed vocabularies

enum class Theme { finance, rh, it };
enum class Difficulty { simple, intermediaire, difficile, inapproprie };
enum class Language { fr, en, other };
enum class UnitKind { answer, sentence };
enum class MetricKind { relevance, veracity };
enum class AnnotatorKind { human, judge };

inline const char* to_string(Theme t) {
  switch (t) {
    case Theme::finance: return "Finance";
    case Theme::rh: return "RH";
    default: return "IT";
  }
}
inline const char* to_string(Difficulty d) {
  switch (d) {
    case Difficulty::simple: return "Simple";
    case Difficulty::intermediaire: return "Intermediaire";
    case Difficulty::difficile: return "Difficile";
    default: return "Inapproprie";
  }
}
inline const char* to_string(Language l) {
  switch (l) {
    case Language::fr: return "fr";
    case Language::en: return "en";
    default: return "other";
  }
}
inline const char* to_string(UnitKind k) {
  return k == UnitKind::answer ? "answer" : "sentence";
}
inline const char* to_string(MetricKind m) {
  return m == MetricKind::relevance ? "relevance" : "veracity";
}
inline const char* to_string(AnnotatorKind a) {
  return a == AnnotatorKind::human ? "human" : "judge";
}

inline std::optional<Theme> parse_theme(std::string_view s) {
  if (s == "Finance") return Theme::finance;
  if (s == "RH") return Theme::rh;
  if (s == "IT") return Theme::it;
  return std::nullopt;
}
inline std::optional<Difficulty> parse_difficulty(std::string_view s) {
  // Accented spellings are accepted as aliases of the canonical forms.
  if (s == "Simple") return Difficulty::simple;
  if (s == "Intermediaire" || s == "Intermédiaire") return Difficulty::intermediaire;
  if (s == "Difficile") return Difficulty::difficile;
  if (s == "Inapproprie" || s == "Inapproprié") return Difficulty::inapproprie;
  return std::nullopt;
}
inline std::optional<Language> parse_language(std::string_view s) {
  if (s == "fr") return Language::fr;
  if (s == "en") return Language::en;
  if (s == "other") return Language::other;
  return std::nullopt;
}
inline std::optional<UnitKind> parse_unit_kind(std::string_view s) {
  if (s == "answer") return UnitKind::answer;
  if (s == "sentence") return UnitKind::sentence;
  return std::nullopt;
}
inline std::optional<MetricKind> parse_metric(std::string_view s) {
  if (s == "relevance") return MetricKind::relevance;
  if (s == "veracity") return MetricKind::veracity;
  return std::nullopt;
}
inline std::optional<AnnotatorKind> parse_annotator(std::string_view s) {
  if (s == "human") return AnnotatorKind::human;
  if (s == "judge") return AnnotatorKind::judge;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Records. Every record keeps the original JSON object so that unknown
// fields survive a round trip untouched.

struct Question {
  std::string id;
  Theme theme = Theme::finance;
  Difficulty difficulty = Difficulty::simple;
  std::string text;
  json raw;
};

struct Answer {
  std::string id;
  std::string question_id;
  int repetition_index = 0;
  std::string text;
  std::vector<std::string> retrieved_source_ids;  // sorted, deduplicated
  std::optional<Language> language;               // precomputed override
  json raw;
};

struct Sentence {
  std::string id;
  std::string answer_id;
  int index = 0;
  std::string text;
  std::vector<std::string> cited_source_ids;  // sorted, deduplicated
  json raw;
};

struct Annotation {
  std::string unit_id;
  UnitKind unit_kind = UnitKind::answer;
  MetricKind metric = MetricKind::relevance;
  AnnotatorKind annotator = AnnotatorKind::human;
  int label = 0;
  std::string provenance;
  json raw;
};

struct EmbeddingRecord {
  std::string unit_id;
  std::vector<double> vector;
  json raw;
};

// ---------------------------------------------------------------------------
// Load-time diagnostics

enum class IssueKind {
  io_error,
  malformed_line,
  duplicate_id,
  dangling_reference,
  enum_violation,
  invariant_violation,
};

inline const char* to_string(IssueKind k) {
  switch (k) {
    case IssueKind::io_error: return "io_error";
    case IssueKind::malformed_line: return "malformed_line";
    case IssueKind::duplicate_id: return "duplicate_id";
    case IssueKind::dangling_reference: return "dangling_reference";
    case IssueKind::enum_violation: return "enum_violation";
    default: return "invariant_violation";
  }
}

struct Issue {
  IssueKind kind;
  std::string file;
  size_t line = 0;  // 1-based; 0 when not tied to a line
  std::string message;

  std::string format() const {
    std::ostringstream os;
    os << to_string(kind) << ": " << file;
    if (line > 0) os << ":" << line;
    os << ": " << message;
    return os.str();
  }
};

class CorpusLoadError : public std::runtime_error {
public:
  explicit CorpusLoadError(std::vector<Issue> issues)
      : std::runtime_error(summarise(issues)), issues_(std::move(issues)) {}

  const std::vector<Issue>& issues() const { return issues_; }

private:
  static std::string summarise(const std::vector<Issue>& issues) {
    std::ostringstream os;
    os << issues.size() << " issue(s) while loading corpus";
    for (size_t i = 0; i < issues.size() && i < 5; ++i) os << "\n  " << issues[i].format();
    if (issues.size() > 5) os << "\n  ...";
    return os.str();
  }
  std::vector<Issue> issues_;
};

// ---------------------------------------------------------------------------
// Ingestion configuration

struct CorpusPaths {
  std::string questions;
  std::string answers;
  std::string sentences;
  std::string annotations;
  std::string embeddings;
};

/**
 * Field-name adapter for datasets whose JSONL keys differ from the canonical
 * schema. Maps (file kind, canonical field) -> actual key in the file.
 * Loaded from a JSON file shaped like
 *   { "questions": { "question_id": "id" }, "answers": { ... } }
 */
struct FieldAdapter {
  std::map<std::string, std::map<std::string, std::string>> mapping;

  static FieldAdapter from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open adapter file: " + path);
    FieldAdapter a;
    const json j = json::parse(in);
    for (const auto& [file_kind, fields] : j.items()) {
      for (const auto& [canonical, actual] : fields.items()) {
        a.mapping[file_kind][canonical] = actual.get<std::string>();
      }
    }
    return a;
  }

  const json* find(const json& obj, const std::string& file_kind,
                   const std::string& canonical) const {
    auto by_file = mapping.find(file_kind);
    if (by_file != mapping.end()) {
      auto alias = by_file->second.find(canonical);
      if (alias != by_file->second.end()) {
        auto it = obj.find(alias->second);
        if (it != obj.end()) return &*it;
      }
    }
    auto it = obj.find(canonical);
    if (it != obj.end()) return &*it;
    return nullptr;
  }
};

struct LoadOptions {
  // Source-id grammar; six lowercase hex chars unless a deployment overrides.
  size_t source_id_length = 6;
  FieldAdapter adapter;

  bool valid_source_id(std::string_view id) const {
    if (id.size() != source_id_length) return false;
    for (char c : id) {
      if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
    }
    return true;
  }
};

// ---------------------------------------------------------------------------
// Strata

struct StratumKey {
  UnitKind kind = UnitKind::answer;
  Theme theme = Theme::finance;
  std::optional<Difficulty> difficulty;  // empty when grouped by theme only

  std::string label() const {
    std::string out = to_string(kind);
    out += "/";
    out += to_string(theme);
    if (difficulty) {
      out += "/";
      out += to_string(*difficulty);
    }
    return out;
  }

  friend bool operator==(const StratumKey&, const StratumKey&) = default;
  friend auto operator<=>(const StratumKey& a, const StratumKey& b) {
    if (auto c = a.kind <=> b.kind; c != 0) return c;
    if (auto c = a.theme <=> b.theme; c != 0) return c;
    const int da = a.difficulty ? static_cast<int>(*a.difficulty) : -1;
    const int db = b.difficulty ? static_cast<int>(*b.difficulty) : -1;
    return da <=> db;
  }
};

struct Stratum {
  StratumKey key;
  std::vector<std::string> unit_ids;  // file order
};

enum class GroupBy { theme, theme_difficulty };

// ---------------------------------------------------------------------------
// The corpus: immutable after a successful load, safe for concurrent reads.

class Corpus {
public:
  static Corpus load(const CorpusPaths& paths, const LoadOptions& options = {});

  const std::vector<Question>& questions() const { return questions_; }
  const std::vector<Answer>& answers() const { return answers_; }
  const std::vector<Sentence>& sentences() const { return sentences_; }
  const std::vector<Annotation>& annotations() const { return annotations_; }
  const std::vector<EmbeddingRecord>& embeddings() const { return embeddings_; }

  const Question* question_by_id(std::string_view id) const {
    auto it = question_index_.find(std::string(id));
    return it == question_index_.end() ? nullptr : &questions_[it->second];
  }
  const Answer* answer_by_id(std::string_view id) const {
    auto it = answer_index_.find(std::string(id));
    return it == answer_index_.end() ? nullptr : &answers_[it->second];
  }
  const Sentence* sentence_by_id(std::string_view id) const {
    auto it = sentence_index_.find(std::string(id));
    return it == sentence_index_.end() ? nullptr : &sentences_[it->second];
  }
  const std::vector<double>* embedding_of(std::string_view unit_id) const {
    auto it = embedding_index_.find(std::string(unit_id));
    return it == embedding_index_.end() ? nullptr : &embeddings_[it->second].vector;
  }

  /// Sentences of an answer, ordered by index.
  std::vector<const Sentence*> sentences_of(std::string_view answer_id) const {
    std::vector<const Sentence*> out;
    auto it = sentences_of_answer_.find(std::string(answer_id));
    if (it == sentences_of_answer_.end()) return out;
    out.reserve(it->second.size());
    for (size_t idx : it->second) out.push_back(&sentences_[idx]);
    return out;
  }

  const Question& question_of_answer(const Answer& a) const {
    return *question_by_id(a.question_id);
  }
  const Question& question_of_sentence(const Sentence& s) const {
    return question_of_answer(*answer_by_id(s.answer_id));
  }

  const Annotation* annotation_for(std::string_view unit_id, MetricKind metric,
                                   AnnotatorKind annotator) const {
    auto it = annotation_index_.find(annotation_key(unit_id, metric, annotator));
    return it == annotation_index_.end() ? nullptr : &annotations_[it->second];
  }

  /// Partition of all units of both kinds into strata.
  std::vector<Stratum> strata(GroupBy level = GroupBy::theme_difficulty) const {
    std::map<StratumKey, std::vector<std::string>> buckets;
    for (const Answer& a : answers_) {
      const Question& q = question_of_answer(a);
      StratumKey key{UnitKind::answer, q.theme, std::nullopt};
      if (level == GroupBy::theme_difficulty) key.difficulty = q.difficulty;
      buckets[key].push_back(a.id);
    }
    for (const Sentence& s : sentences_) {
      const Question& q = question_of_sentence(s);
      StratumKey key{UnitKind::sentence, q.theme, std::nullopt};
      if (level == GroupBy::theme_difficulty) key.difficulty = q.difficulty;
      buckets[key].push_back(s.id);
    }
    std::vector<Stratum> out;
    out.reserve(buckets.size());
    for (auto& [key, ids] : buckets) out.push_back({key, std::move(ids)});
    return out;
  }

  /// Question counts per (theme, difficulty), the strata table of the corpus.
  std::map<std::pair<Theme, Difficulty>, size_t> question_strata_counts() const {
    std::map<std::pair<Theme, Difficulty>, size_t> counts;
    for (const Question& q : questions_) ++counts[{q.theme, q.difficulty}];
    return counts;
  }

  size_t embedding_dimension() const { return embedding_dimension_; }

  /// Serialise back to JSONL. Unknown fields round-trip untouched since each
  /// record dumps its original object.
  void save(const CorpusPaths& paths) const;

private:
  static std::string annotation_key(std::string_view unit_id, MetricKind metric,
                                    AnnotatorKind annotator) {
    std::string k(unit_id);
    k += '\x1f';
    k += to_string(metric);
    k += '\x1f';
    k += to_string(annotator);
    return k;
  }

  std::vector<Question> questions_;
  std::vector<Answer> answers_;
  std::vector<Sentence> sentences_;
  std::vector<Annotation> annotations_;
  std::vector<EmbeddingRecord> embeddings_;

  std::unordered_map<std::string, size_t> question_index_;
  std::unordered_map<std::string, size_t> answer_index_;
  std::unordered_map<std::string, size_t> sentence_index_;
  std::unordered_map<std::string, size_t> embedding_index_;
  std::unordered_map<std::string, std::vector<size_t>> sentences_of_answer_;
  std::unordered_map<std::string, size_t> annotation_index_;
  size_t embedding_dimension_ = 0;

  friend class CorpusLoader;
};

// ---------------------------------------------------------------------------
// Loader

class CorpusLoader {
public:
  explicit CorpusLoader(const LoadOptions& options) : options_(options) {}

  Corpus run(const CorpusPaths& paths) {
    Corpus c;
    parse_file(paths.questions, "questions", [&](const json& obj, size_t line) {
      read_question(c, obj, paths.questions, line);
    });
    parse_file(paths.answers, "answers", [&](const json& obj, size_t line) {
      read_answer(c, obj, paths.answers, line);
    });
    parse_file(paths.sentences, "sentences", [&](const json& obj, size_t line) {
      read_sentence(c, obj, paths.sentences, line);
    });
    parse_file(paths.annotations, "annotations", [&](const json& obj, size_t line) {
      read_annotation(c, obj, paths.annotations, line);
    });
    parse_file(paths.embeddings, "embeddings", [&](const json& obj, size_t line) {
      read_embedding(c, obj, paths.embeddings, line);
    });
    cross_validate(c, paths);
    if (!issues_.empty()) throw CorpusLoadError(std::move(issues_));
    return c;
  }

private:
  template <typename Fn>
  void parse_file(const std::string& path, const char* kind, Fn&& per_object) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) {
      issues_.push_back({IssueKind::io_error, path, 0, "cannot open file"});
      return;
    }
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      json obj;
      try {
        obj = json::parse(line);
      } catch (const json::parse_error& e) {
        issues_.push_back({IssueKind::malformed_line, path, lineno, e.what()});
        continue;
      }
      if (!obj.is_object()) {
        issues_.push_back(
            {IssueKind::malformed_line, path, lineno, "expected a JSON object"});
        continue;
      }
      (void)kind;
      per_object(obj, lineno);
    }
  }

  const json* field(const json& obj, const char* file_kind, const char* canonical) {
    return options_.adapter.find(obj, file_kind, canonical);
  }

  std::optional<std::string> req_string(const json& obj, const char* file_kind,
                                        const char* name, const std::string& file,
                                        size_t line) {
    const json* v = field(obj, file_kind, name);
    if (v == nullptr || !v->is_string()) {
      issues_.push_back({IssueKind::invariant_violation, file, line,
                         std::string("missing or non-string field '") + name + "'"});
      return std::nullopt;
    }
    return v->get<std::string>();
  }

  std::optional<int> req_int(const json& obj, const char* file_kind, const char* name,
                             const std::string& file, size_t line) {
    const json* v = field(obj, file_kind, name);
    if (v != nullptr && v->is_number_integer()) return v->get<int>();
    if (v != nullptr && v->is_string()) {
      // Spreadsheet exports often stringify integers.
      try {
        size_t pos = 0;
        const int parsed = std::stoi(v->get<std::string>(), &pos);
        if (pos == v->get<std::string>().size()) return parsed;
      } catch (...) {
      }
    }
    issues_.push_back({IssueKind::invariant_violation, file, line,
                       std::string("missing or non-integer field '") + name + "'"});
    return std::nullopt;
  }

  std::vector<std::string> id_set(const json& obj, const char* file_kind,
                                  const char* name, const std::string& file,
                                  size_t line) {
    std::vector<std::string> out;
    const json* v = field(obj, file_kind, name);
    if (v == nullptr) return out;
    if (!v->is_array()) {
      issues_.push_back({IssueKind::invariant_violation, file, line,
                         std::string("field '") + name + "' must be an array"});
      return out;
    }
    for (const json& el : *v) {
      if (!el.is_string()) {
        issues_.push_back({IssueKind::invariant_violation, file, line,
                           std::string("field '") + name + "' must hold strings"});
        continue;
      }
      const std::string id = el.get<std::string>();
      if (!options_.valid_source_id(id)) {
        issues_.push_back({IssueKind::enum_violation, file, line,
                           "source id '" + id + "' does not match the " +
                               std::to_string(options_.source_id_length) +
                               "-char lowercase-hex format"});
        continue;
      }
      out.push_back(id);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  void read_question(Corpus& c, const json& obj, const std::string& file, size_t line) {
    auto id = req_string(obj, "questions", "question_id", file, line);
    auto theme_s = req_string(obj, "questions", "theme", file, line);
    auto diff_s = req_string(obj, "questions", "difficulty", file, line);
    auto text = req_string(obj, "questions", "text", file, line);
    if (!id || !theme_s || !diff_s || !text) return;
    Question q;
    q.id = *id;
    q.text = *text;
    q.raw = obj;
    if (auto t = parse_theme(*theme_s)) {
      q.theme = *t;
    } else {
      issues_.push_back(
          {IssueKind::enum_violation, file, line, "unknown theme '" + *theme_s + "'"});
      return;
    }
    if (auto d = parse_difficulty(*diff_s)) {
      q.difficulty = *d;
    } else {
      issues_.push_back({IssueKind::enum_violation, file, line,
                         "unknown difficulty '" + *diff_s + "'"});
      return;
    }
    if (q.text.empty()) {
      issues_.push_back(
          {IssueKind::invariant_violation, file, line, "question text is empty"});
      return;
    }
    if (!c.question_index_.emplace(q.id, c.questions_.size()).second) {
      issues_.push_back(
          {IssueKind::duplicate_id, file, line, "duplicate question_id '" + q.id + "'"});
      return;
    }
    c.questions_.push_back(std::move(q));
  }

  void read_answer(Corpus& c, const json& obj, const std::string& file, size_t line) {
    auto id = req_string(obj, "answers", "answer_id", file, line);
    auto qid = req_string(obj, "answers", "question_id", file, line);
    auto rep = req_int(obj, "answers", "repetition_index", file, line);
    auto text = req_string(obj, "answers", "text", file, line);
    if (!id || !qid || !rep || !text) return;
    Answer a;
    a.id = *id;
    a.question_id = *qid;
    a.repetition_index = *rep;
    a.text = *text;
    a.raw = obj;
    a.retrieved_source_ids = id_set(obj, "answers", "retrieved_source_ids", file, line);
    if (const json* lang = field(obj, "answers", "language");
        lang != nullptr && !lang->is_null()) {
      if (!lang->is_string()) {
        issues_.push_back(
            {IssueKind::invariant_violation, file, line, "language must be a string"});
      } else if (auto l = parse_language(lang->get<std::string>())) {
        a.language = *l;
      } else {
        issues_.push_back({IssueKind::enum_violation, file, line,
                           "unknown language '" + lang->get<std::string>() + "'"});
      }
    }
    if (a.repetition_index < 0) {
      issues_.push_back(
          {IssueKind::invariant_violation, file, line, "repetition_index must be >= 0"});
      return;
    }
    if (!c.answer_index_.emplace(a.id, c.answers_.size()).second) {
      issues_.push_back(
          {IssueKind::duplicate_id, file, line, "duplicate answer_id '" + a.id + "'"});
      return;
    }
    c.answers_.push_back(std::move(a));
  }

  void read_sentence(Corpus& c, const json& obj, const std::string& file, size_t line) {
    auto id = req_string(obj, "sentences", "sentence_id", file, line);
    auto aid = req_string(obj, "sentences", "answer_id", file, line);
    auto index = req_int(obj, "sentences", "index", file, line);
    auto text = req_string(obj, "sentences", "text", file, line);
    if (!id || !aid || !index || !text) return;
    Sentence s;
    s.id = *id;
    s.answer_id = *aid;
    s.index = *index;
    s.text = *text;
    s.raw = obj;
    s.cited_source_ids = id_set(obj, "sentences", "cited_source_ids", file, line);
    if (s.index < 0) {
      issues_.push_back(
          {IssueKind::invariant_violation, file, line, "sentence index must be >= 0"});
      return;
    }
    if (!c.sentence_index_.emplace(s.id, c.sentences_.size()).second) {
      issues_.push_back(
          {IssueKind::duplicate_id, file, line, "duplicate sentence_id '" + s.id + "'"});
      return;
    }
    c.sentences_of_answer_[s.answer_id].push_back(c.sentences_.size());
    c.sentences_.push_back(std::move(s));
  }

  void read_annotation(Corpus& c, const json& obj, const std::string& file, size_t line) {
    auto unit_id = req_string(obj, "annotations", "unit_id", file, line);
    auto kind_s = req_string(obj, "annotations", "unit_kind", file, line);
    auto metric_s = req_string(obj, "annotations", "metric", file, line);
    auto annot_s = req_string(obj, "annotations", "annotator", file, line);
    auto label = req_int(obj, "annotations", "label", file, line);
    if (!unit_id || !kind_s || !metric_s || !annot_s || !label) return;
    Annotation a;
    a.unit_id = *unit_id;
    a.label = *label;
    a.raw = obj;
    if (const json* prov = field(obj, "annotations", "provenance");
        prov != nullptr && prov->is_string()) {
      a.provenance = prov->get<std::string>();
    }
    auto kind = parse_unit_kind(*kind_s);
    auto metric = parse_metric(*metric_s);
    auto annot = parse_annotator(*annot_s);
    if (!kind || !metric || !annot) {
      issues_.push_back({IssueKind::enum_violation, file, line,
                         "unknown unit_kind/metric/annotator value"});
      return;
    }
    a.unit_kind = *kind;
    a.metric = *metric;
    a.annotator = *annot;
    if (a.label != 0 && a.label != 1) {
      issues_.push_back(
          {IssueKind::enum_violation, file, line, "label must be 0 or 1"});
      return;
    }
    if ((a.metric == MetricKind::relevance) != (a.unit_kind == UnitKind::answer)) {
      issues_.push_back({IssueKind::invariant_violation, file, line,
                         "relevance pairs with answers, veracity with sentences"});
      return;
    }
    const std::string key = Corpus::annotation_key(a.unit_id, a.metric, a.annotator);
    if (!c.annotation_index_.emplace(key, c.annotations_.size()).second) {
      issues_.push_back({IssueKind::duplicate_id, file, line,
                         "duplicate annotation for unit '" + a.unit_id + "' (" +
                             to_string(a.metric) + ", " + to_string(a.annotator) + ")"});
      return;
    }
    c.annotations_.push_back(std::move(a));
  }

  void read_embedding(Corpus& c, const json& obj, const std::string& file, size_t line) {
    auto unit_id = req_string(obj, "embeddings", "unit_id", file, line);
    if (!unit_id) return;
    const json* vec = field(obj, "embeddings", "vector");
    if (vec == nullptr || !vec->is_array() || vec->empty()) {
      issues_.push_back({IssueKind::invariant_violation, file, line,
                         "missing or empty field 'vector'"});
      return;
    }
    EmbeddingRecord e;
    e.unit_id = *unit_id;
    e.raw = obj;
    e.vector.reserve(vec->size());
    for (const json& x : *vec) {
      if (!x.is_number() || !std::isfinite(x.get<double>())) {
        issues_.push_back({IssueKind::invariant_violation, file, line,
                           "embedding vector must hold finite numbers"});
        return;
      }
      e.vector.push_back(x.get<double>());
    }
    if (c.embedding_dimension_ == 0) {
      c.embedding_dimension_ = e.vector.size();
    } else if (e.vector.size() != c.embedding_dimension_) {
      issues_.push_back({IssueKind::invariant_violation, file, line,
                         "embedding dimension " + std::to_string(e.vector.size()) +
                             " differs from " + std::to_string(c.embedding_dimension_)});
      return;
    }
    if (!c.embedding_index_.emplace(e.unit_id, c.embeddings_.size()).second) {
      issues_.push_back({IssueKind::duplicate_id, file, line,
                         "duplicate embedding for unit '" + e.unit_id + "'"});
      return;
    }
    c.embeddings_.push_back(std::move(e));
  }

  void cross_validate(Corpus& c, const CorpusPaths& paths) {
    // Dangling references.
    for (const Answer& a : c.answers_) {
      if (c.question_index_.find(a.question_id) == c.question_index_.end()) {
        issues_.push_back({IssueKind::dangling_reference, paths.answers, 0,
                           "answer '" + a.id + "' references unknown question_id '" +
                               a.question_id + "'"});
      }
    }
    for (const Sentence& s : c.sentences_) {
      if (c.answer_index_.find(s.answer_id) == c.answer_index_.end()) {
        issues_.push_back({IssueKind::dangling_reference, paths.sentences, 0,
                           "sentence '" + s.id + "' references unknown answer_id '" +
                               s.answer_id + "'"});
      }
    }
    for (const Annotation& a : c.annotations_) {
      const bool found = a.unit_kind == UnitKind::answer
                             ? c.answer_index_.count(a.unit_id) > 0
                             : c.sentence_index_.count(a.unit_id) > 0;
      if (!found) {
        issues_.push_back({IssueKind::dangling_reference, paths.annotations, 0,
                           "annotation references unknown " +
                               std::string(to_string(a.unit_kind)) + " '" + a.unit_id +
                               "'"});
      }
    }
    for (const EmbeddingRecord& e : c.embeddings_) {
      if (c.answer_index_.count(e.unit_id) == 0 &&
          c.sentence_index_.count(e.unit_id) == 0) {
        issues_.push_back({IssueKind::dangling_reference, paths.embeddings, 0,
                           "embedding references unknown unit '" + e.unit_id + "'"});
      }
    }

    // (question_id, repetition_index) unique.
    std::set<std::pair<std::string, int>> seen_rep;
    for (const Answer& a : c.answers_) {
      if (!seen_rep.emplace(a.question_id, a.repetition_index).second) {
        issues_.push_back({IssueKind::duplicate_id, paths.answers, 0,
                           "duplicate (question_id, repetition_index) = ('" +
                               a.question_id + "', " +
                               std::to_string(a.repetition_index) + ")"});
      }
    }

    // Per answer: sentence indices contiguous from 0 and concatenation equal
    // to the answer text modulo whitespace.
    for (auto& [answer_id, idxs] : c.sentences_of_answer_) {
      std::sort(idxs.begin(), idxs.end(), [&](size_t l, size_t r) {
        return c.sentences_[l].index < c.sentences_[r].index;
      });
      bool contiguous = true;
      for (size_t i = 0; i < idxs.size(); ++i) {
        if (c.sentences_[idxs[i]].index != static_cast<int>(i)) {
          contiguous = false;
          break;
        }
      }
      if (!contiguous) {
        issues_.push_back({IssueKind::invariant_violation, paths.sentences, 0,
                           "sentence indices of answer '" + answer_id +
                               "' are not contiguous from 0"});
        continue;
      }
      const Answer* answer = nullptr;
      if (auto it = c.answer_index_.find(answer_id); it != c.answer_index_.end()) {
        answer = &c.answers_[it->second];
      }
      if (answer != nullptr) {
        std::string joined;
        for (size_t idx : idxs) joined += c.sentences_[idx].text;
        if (strip_whitespace(joined) != strip_whitespace(answer->text)) {
          issues_.push_back({IssueKind::invariant_violation, paths.sentences, 0,
                             "sentences of answer '" + answer_id +
                                 "' do not reassemble the answer text"});
        }
      }
    }
  }

  LoadOptions options_;
  std::vector<Issue> issues_;
};

inline Corpus Corpus::load(const CorpusPaths& paths, const LoadOptions& options) {
  CorpusLoader loader(options);
  return loader.run(paths);
}

inline void Corpus::save(const CorpusPaths& paths) const {
  auto dump_all = [](const std::string& path, const auto& records) {
    if (path.empty()) return;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    for (const auto& r : records) out << r.raw.dump() << "\n";
  };
  dump_all(paths.questions, questions_);
  dump_all(paths.answers, answers_);
  dump_all(paths.sentences, sentences_);
  dump_all(paths.annotations, annotations_);
  dump_all(paths.embeddings, embeddings_);
}

}  // namespace ragcheck
