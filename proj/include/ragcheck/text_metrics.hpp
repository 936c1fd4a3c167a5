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
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ragcheck/corpus.hpp"
#include "ragcheck/stats.hpp"
#include "ragcheck/text_util.hpp"

namespace ragcheck {

// ---------------------------------------------------------------------------
// Citation markers
//
// A citation is the exact pattern  [^xxxxxx^]  with a fixed-length lowercase
// hex id. Near misses (uppercase, wrong length) are deliberately not matched;
// a model that corrupts an id into prose cannot be told apart from prose.

struct CitationMarker {
  std::string raw;        // the full matched substring
  std::string source_id;  // the hex id inside
  size_t begin = 0;       // byte offsets into the scanned text
  size_t end = 0;
};

struct CitationOptions {
  size_t id_length = 6;
};

inline bool is_lower_hex(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
}

inline std::vector<CitationMarker> extract_citations(std::string_view text,
                                                     const CitationOptions& opts = {}) {
  std::vector<CitationMarker> out;
  const size_t id_len = opts.id_length;
  const size_t marker_len = id_len + 4;  // [^ id ^]
  if (text.size() < marker_len) return out;
  for (size_t i = 0; i + marker_len <= text.size(); ++i) {
    if (text[i] != '[' || text[i + 1] != '^') continue;
    bool hex_ok = true;
    for (size_t j = 0; j < id_len; ++j) {
      if (!is_lower_hex(text[i + 2 + j])) {
        hex_ok = false;
        break;
      }
    }
    if (!hex_ok) continue;
    if (text[i + 2 + id_len] != '^' || text[i + 3 + id_len] != ']') continue;
    CitationMarker m;
    m.begin = i;
    m.end = i + marker_len;
    m.raw = std::string(text.substr(i, marker_len));
    m.source_id = std::string(text.substr(i + 2, id_len));
    out.push_back(std::move(m));
    i += marker_len - 1;
  }
  return out;
}

inline std::string strip_citations(std::string_view text, const CitationOptions& opts = {}) {
  std::string out;
  out.reserve(text.size());
  size_t prev = 0;
  for (const CitationMarker& m : extract_citations(text, opts)) {
    out.append(text.substr(prev, m.begin - prev));
    prev = m.end;
  }
  out.append(text.substr(prev));
  return out;
}

// ---------------------------------------------------------------------------
// Sentence splitting
//
// Rule-based splitter: a terminator in {., !, ?, :} ends a sentence when
// followed by whitespace and an uppercase letter or digit. Exceptions:
//   - a '.' directly after a known abbreviation or a single-letter initial,
//   - a '.' inside a number (digit on both sides),
//   - citation markers right after the terminator stay with the sentence
//     they terminate.

struct SentenceSplitOptions {
  CitationOptions citations;
  std::vector<std::string> abbreviations = {
      "M", "MM", "Mme", "Mlle", "Dr", "Me", "Pr", "St", "Ste",
      "cf", "etc", "ex", "env", "chap", "fig", "p", "pp", "vol",
      "art", "no", "Mr", "Mrs", "Ms", "Jr", "Sr", "vs",
  };
};

struct SentenceSpan {
  std::string text;  // trimmed slice of the input, markers included
  size_t begin = 0;  // byte offsets of the trimmed slice
  size_t end = 0;
  std::vector<CitationMarker> citations;  // offsets relative to the input
};

namespace detail {

inline bool is_word_char(char c) {
  const unsigned char u = static_cast<unsigned char>(c);
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         u >= 0x80;
}

// The word immediately before position pos (exclusive).
inline std::string_view word_before(std::string_view text, size_t pos) {
  size_t b = pos;
  while (b > 0 && is_word_char(text[b - 1])) --b;
  return text.substr(b, pos - b);
}

inline bool is_single_ascii_letter(std::string_view w) {
  return w.size() == 1 && ((w[0] >= 'A' && w[0] <= 'Z') || (w[0] >= 'a' && w[0] <= 'z'));
}

}  // namespace detail

inline std::vector<SentenceSpan> split_sentences(std::string_view text,
                                                 const SentenceSplitOptions& opts = {}) {
  std::vector<SentenceSpan> out;
  const std::vector<CitationMarker> markers = extract_citations(text, opts.citations);

  auto marker_at = [&](size_t pos) -> const CitationMarker* {
    for (const CitationMarker& m : markers) {
      if (m.begin == pos) return &m;
    }
    return nullptr;
  };
  auto inside_marker = [&](size_t pos) {
    for (const CitationMarker& m : markers) {
      if (pos >= m.begin && pos < m.end) return true;
    }
    return false;
  };

  std::vector<size_t> boundaries;  // index of the first byte after a sentence
  size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (inside_marker(i)) {
      ++i;
      continue;
    }
    if (c != '.' && c != '!' && c != '?' && c != ':') {
      ++i;
      continue;
    }
    // Collapse runs of terminators (ellipses, "?!").
    size_t term_end = i + 1;
    while (term_end < text.size() &&
           (text[term_end] == '.' || text[term_end] == '!' || text[term_end] == '?' ||
            text[term_end] == ':')) {
      ++term_end;
    }
    if (c == '.' && term_end - i == 1) {
      // Number like 3.14: digit on both sides.
      if (i > 0 && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i - 1])) &&
          std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
        ++i;
        continue;
      }
      const std::string_view word = detail::word_before(text, i);
      if (detail::is_single_ascii_letter(word) ||
          std::find(opts.abbreviations.begin(), opts.abbreviations.end(),
                    std::string(word)) != opts.abbreviations.end()) {
        ++i;
        continue;
      }
    }
    // Absorb citation markers trailing the terminator (optionally separated
    // by spaces); they bind to the sentence just terminated.
    size_t j = term_end;
    while (true) {
      size_t k = j;
      size_t len = 0;
      while (is_space_at(text, k, len)) k += len;
      if (const CitationMarker* m = marker_at(k)) {
        j = m->end;
      } else {
        break;
      }
    }
    // A boundary needs whitespace then an uppercase letter or digit, or the
    // end of the text.
    size_t k = j;
    size_t len = 0;
    bool saw_space = false;
    while (is_space_at(text, k, len)) {
      k += len;
      saw_space = true;
    }
    if (k >= text.size()) {
      boundaries.push_back(j);
      i = j;
      continue;
    }
    if (saw_space && is_upper_or_digit_at(text, k)) {
      boundaries.push_back(j);
      i = k;
      continue;
    }
    i = term_end;
  }
  if (boundaries.empty() || boundaries.back() < text.size()) {
    boundaries.push_back(text.size());
  }

  size_t start = 0;
  for (size_t b : boundaries) {
    std::string_view slice = text.substr(start, b - start);
    // Trim, tracking offsets.
    size_t lead = 0, len = 0;
    while (lead < slice.size() && is_space_at(slice, lead, len)) lead += len;
    const std::string_view trimmed = trim(slice);
    if (!trimmed.empty()) {
      SentenceSpan span;
      span.begin = start + lead;
      span.end = span.begin + trimmed.size();
      span.text = std::string(trimmed);
      for (const CitationMarker& m : markers) {
        if (m.begin >= span.begin && m.end <= span.end) span.citations.push_back(m);
      }
      out.push_back(std::move(span));
    }
    start = b;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Language detection
//
// Dependency-free stopword scorer: counts French and English function words
// and requires a strict margin; ties (including zero evidence) map to
// `other`. A precomputed per-answer language column always wins when present.

struct LanguageDetector {
  std::set<std::string> french = {
      "le", "la", "les", "de", "des", "du", "un", "une", "et", "est", "sont",
      "dans", "pour", "que", "qui", "ne", "pas", "avec", "sur", "au", "aux",
      "ce", "cette", "ces", "il", "elle", "nous", "vous", "ils", "elles",
      "son", "sa", "ses", "leur", "leurs", "par", "plus", "ou", "où",
      "mais", "donc", "si", "être", "avoir", "été", "à",
      "en", "se", "comme", "tout", "toute", "tous", "afin", "ainsi", "entre",
  };
  std::set<std::string> english = {
      "the", "of", "and", "to", "in", "is", "that", "it", "for", "on",
      "with", "as", "are", "this", "by", "at", "from", "be", "have", "has",
      "was", "were", "not", "they", "their", "which", "or", "an", "but",
      "we", "you", "he", "she", "his", "her", "its", "them", "there",
      "what", "when", "who", "will", "would", "can", "could", "about",
  };
  // A language wins when it beats the other by at least this many hits.
  int margin = 1;

  Language detect(std::string_view text) const {
    const std::string folded = fold_lower(text);
    int fr = 0, en = 0;
    std::string token;
    auto flush = [&]() {
      if (token.empty()) return;
      if (french.count(token)) ++fr;
      if (english.count(token)) ++en;
      token.clear();
    };
    for (size_t i = 0; i < folded.size(); ++i) {
      const char c = folded[i];
      if (detail::is_word_char(c) || c == '\'') {
        if (c == '\'') {
          flush();  // French elision: l'entreprise -> l / entreprise
        } else {
          token.push_back(c);
        }
      } else {
        flush();
      }
    }
    flush();
    if (fr == 0 && en == 0) return Language::other;
    if (fr - en >= margin) return Language::fr;
    if (en - fr >= margin) return Language::en;
    return Language::other;
  }
};

/// Detector on raw text (markers stripped first). Empty text maps to other.
inline Language detect_language(std::string_view text,
                                const LanguageDetector& detector = {},
                                const CitationOptions& citations = {}) {
  const std::string stripped = strip_citations(text, citations);
  if (trim(stripped).empty()) return Language::other;
  return detector.detect(stripped);
}

/// Language of an answer: the precomputed override wins when present.
inline Language answer_language(const Answer& a, const LanguageDetector& detector = {},
                                const CitationOptions& citations = {}) {
  if (a.language) return *a.language;
  return detect_language(a.text, detector, citations);
}

// ---------------------------------------------------------------------------
// Abstention detection

struct AbstentionList {
  std::vector<std::string> phrases;

  static AbstentionList defaults() {
    return {{
        "je ne dispose pas",
        "je ne peux pas répondre",
        "je ne suis pas en mesure de répondre",
        "aucune information",
        "aucune donnée disponible",
        "i do not have",
        "i don't have",
        "i cannot answer",
        "no information available",
    }};
  }

  // One phrase per line; '#' starts a comment.
  static AbstentionList from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open abstention list: " + path);
    AbstentionList list;
    std::string line;
    while (std::getline(in, line)) {
      const size_t hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      const std::string_view phrase = trim(line);
      if (!phrase.empty()) list.phrases.emplace_back(phrase);
    }
    return list;
  }

  bool matches(std::string_view text) const {
    for (const std::string& p : phrases) {
      if (contains_fold(text, p)) return true;
    }
    return false;
  }
};

/// 1 iff the answer cites at least one source and matches no abstention
/// phrase (case-insensitive).
inline int is_effective_response(std::string_view answer_text,
                                 const AbstentionList& abstentions,
                                 const CitationOptions& citations = {}) {
  if (extract_citations(answer_text, citations).empty()) return 0;
  if (abstentions.matches(answer_text)) return 0;
  return 1;
}

inline int is_effective_response(const Answer& a, const AbstentionList& abstentions,
                                 const CitationOptions& citations = {}) {
  return is_effective_response(a.text, abstentions, citations);
}

// ---------------------------------------------------------------------------
// Functional citations

/// 1 iff every cited id also appears in the answer's retrieved set; no label
/// when the sentence cites nothing (it leaves the denominator).
inline std::optional<int> functional_citation_label(const Sentence& s, const Answer& a) {
  if (s.cited_source_ids.empty()) return std::nullopt;
  // Both sides sorted by the loader.
  const bool subset = std::includes(a.retrieved_source_ids.begin(),
                                    a.retrieved_source_ids.end(),
                                    s.cited_source_ids.begin(), s.cited_source_ids.end());
  return subset ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Corpus-level automated rates (per stratum, Wald bars)

enum class AutoMetric { language_correct, effective_response, functional_citation };

inline const char* to_string(AutoMetric m) {
  switch (m) {
    case AutoMetric::language_correct: return "language_correct";
    case AutoMetric::effective_response: return "effective_response";
    default: return "functional_citation";
  }
}

struct AutoMetricReport {
  StratumKey stratum;
  AutoMetric metric = AutoMetric::language_correct;
  uint64_t numerator = 0;
  uint64_t denominator = 0;
  double rate = 0.0;
  double ci_low = 0.0;   // clipped to [0, 1] for display
  double ci_high = 0.0;
};

struct AutoRatesOptions {
  AbstentionList abstentions = AbstentionList::defaults();
  LanguageDetector detector;
  CitationOptions citations;
  GroupBy group_by = GroupBy::theme_difficulty;
};

/**
 * The three automatic metrics per stratum with Wald intervals:
 * language_correct and effective_response over answer strata,
 * functional_citation over sentence strata (sentences that cite nothing stay
 * out of the denominator). Strata whose denominator is empty are skipped.
 */
inline std::vector<AutoMetricReport> auto_rates(const Corpus& corpus, double alpha,
                                                const AutoRatesOptions& opts = {}) {
  std::vector<AutoMetricReport> out;
  auto push = [&](const StratumKey& key, AutoMetric metric, uint64_t num, uint64_t den) {
    if (den == 0) return;
    AutoMetricReport rep;
    rep.stratum = key;
    rep.metric = metric;
    rep.numerator = num;
    rep.denominator = den;
    const MetricEstimate est = wald_interval(num, den, alpha);
    rep.rate = est.theta_hat;
    rep.ci_low = est.display_low();
    rep.ci_high = est.display_high();
    out.push_back(std::move(rep));
  };

  for (const Stratum& stratum : corpus.strata(opts.group_by)) {
    if (stratum.key.kind == UnitKind::answer) {
      uint64_t lang_num = 0, eff_num = 0;
      for (const std::string& id : stratum.unit_ids) {
        const Answer& a = *corpus.answer_by_id(id);
        if (answer_language(a, opts.detector, opts.citations) == Language::fr) ++lang_num;
        eff_num += static_cast<uint64_t>(
            is_effective_response(a, opts.abstentions, opts.citations));
      }
      const uint64_t den = stratum.unit_ids.size();
      push(stratum.key, AutoMetric::language_correct, lang_num, den);
      push(stratum.key, AutoMetric::effective_response, eff_num, den);
    } else {
      uint64_t num = 0, den = 0;
      for (const std::string& id : stratum.unit_ids) {
        const Sentence& s = *corpus.sentence_by_id(id);
        const Answer& a = *corpus.answer_by_id(s.answer_id);
        if (const std::optional<int> label = functional_citation_label(s, a)) {
          ++den;
          num += static_cast<uint64_t>(*label);
        }
      }
      push(stratum.key, AutoMetric::functional_citation, num, den);
    }
  }
  return out;
}

}  // namespace ragcheck
