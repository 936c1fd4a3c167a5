#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragcheck/corpus.hpp"
#include "support/tmpdir.hpp"

namespace ragcheck::testing {

using nlohmann::json;

// The reference answer used across the text-metric golden tests: three
// sentences, the last two carrying citation markers.
inline std::string reference_answer_lead() {
  return "DataCorp utilise des enquêtes de satisfaction pour obtenir des "
         "commentaires sur l'engagement, le moral et la satisfaction des employés "
         "au travail.";
}

inline std::string reference_answer_body_first() {
  return "Ces enquêtes sont menées dans le cadre des dispositifs convenus "
         "avec ComeToMyCorp, une entreprise spécialisée dans l'évaluation "
         "de la satisfaction des employés [^5f7cce^].";
}

inline std::string reference_answer_body_second() {
  return "Il est à noter que la direction de DataCorp a également mis en "
         "place des actions pour répondre aux commentaires laissés sur la "
         "plateforme JobReview, afin de gérer l'e-réputation de l'entreprise "
         "[^4ca822^][^63fadb^].";
}

// The citation-bearing body: two sentences, markers {5f7cce} and
// {4ca822, 63fadb}.
inline std::string reference_answer_fragment() {
  return reference_answer_body_first() + " " + reference_answer_body_second();
}

inline std::string reference_answer_full() {
  return reference_answer_lead() + " " + reference_answer_fragment();
}

inline std::string english_answer_text() {
  return "The company uses satisfaction surveys to assess employee engagement and "
         "morale. See the details in [^5f7cce^].";
}

inline std::string jsonl(const std::vector<json>& objects) {
  std::string out;
  for (const json& o : objects) {
    out += o.dump();
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// A small, fully cross-consistent corpus exercising every entity kind.

struct SmallCorpus {
  CorpusPaths paths;
};

inline SmallCorpus write_small_corpus(const TmpDir& dir) {
  std::vector<json> questions = {
      {{"question_id", "q1"},
       {"theme", "Finance"},
       {"difficulty", "Simple"},
       {"text",
        "Comment DataCorp évalue-t-elle la satisfaction et l'expérience des "
        "salariés ?"}},
      {{"question_id", "q2"},
       {"theme", "RH"},
       {"difficulty", "Difficile"},
       {"text", "Quelle est la politique de télétravail ?"}},
      // Accented spelling accepted as an alias.
      {{"question_id", "q3"},
       {"theme", "IT"},
       {"difficulty", "Inapproprié"},
       {"text", "Quel est le mot de passe administrateur ?"}},
  };

  const std::string a4_text =
      "Le mot de passe est stocké de manière sécurisée [^4ca823^].";
  const std::string a3_text = "Je ne dispose pas d'informations à ce sujet.";

  std::vector<json> answers = {
      {{"answer_id", "a1"},
       {"question_id", "q1"},
       {"repetition_index", 0},
       {"text", reference_answer_full()},
       {"retrieved_source_ids", {"5f7cce", "4ca822", "63fadb"}},
       {"custom_note", "kept-on-round-trip"}},
      {{"answer_id", "a2"},
       {"question_id", "q1"},
       {"repetition_index", 1},
       {"text", english_answer_text()},
       {"retrieved_source_ids", {"5f7cce"}},
       {"language", "en"}},
      {{"answer_id", "a3"},
       {"question_id", "q2"},
       {"repetition_index", 0},
       {"text", a3_text},
       {"retrieved_source_ids", json::array()}},
      {{"answer_id", "a4"},
       {"question_id", "q3"},
       {"repetition_index", 0},
       {"text", a4_text},
       {"retrieved_source_ids", {"4ca822"}}},
  };

  std::vector<json> sentences = {
      {{"sentence_id", "s-a1-0"},
       {"answer_id", "a1"},
       {"index", 0},
       {"text", reference_answer_lead()},
       {"cited_source_ids", json::array()}},
      {{"sentence_id", "s-a1-1"},
       {"answer_id", "a1"},
       {"index", 1},
       {"text", reference_answer_body_first()},
       {"cited_source_ids", {"5f7cce"}}},
      {{"sentence_id", "s-a1-2"},
       {"answer_id", "a1"},
       {"index", 2},
       {"text", reference_answer_body_second()},
       {"cited_source_ids", {"4ca822", "63fadb"}}},
      {{"sentence_id", "s-a2-0"},
       {"answer_id", "a2"},
       {"index", 0},
       {"text",
        "The company uses satisfaction surveys to assess employee engagement and "
        "morale."},
       {"cited_source_ids", json::array()}},
      {{"sentence_id", "s-a2-1"},
       {"answer_id", "a2"},
       {"index", 1},
       {"text", "See the details in [^5f7cce^]."},
       {"cited_source_ids", {"5f7cce"}}},
      {{"sentence_id", "s-a3-0"},
       {"answer_id", "a3"},
       {"index", 0},
       {"text", a3_text},
       {"cited_source_ids", json::array()}},
      {{"sentence_id", "s-a4-0"},
       {"answer_id", "a4"},
       {"index", 0},
       {"text", a4_text},
       {"cited_source_ids", {"4ca823"}}},
  };

  std::vector<json> annotations = {
      {{"unit_id", "a1"},
       {"unit_kind", "answer"},
       {"metric", "relevance"},
       {"annotator", "human"},
       {"label", 1},
       {"provenance", "round-1"}},
      {{"unit_id", "a1"},
       {"unit_kind", "answer"},
       {"metric", "relevance"},
       {"annotator", "judge"},
       {"label", 1},
       {"provenance", "mock-judge"}},
      {{"unit_id", "a2"},
       {"unit_kind", "answer"},
       {"metric", "relevance"},
       {"annotator", "human"},
       {"label", 0}},
      {{"unit_id", "a2"},
       {"unit_kind", "answer"},
       {"metric", "relevance"},
       {"annotator", "judge"},
       {"label", 1}},
      {{"unit_id", "s-a1-1"},
       {"unit_kind", "sentence"},
       {"metric", "veracity"},
       {"annotator", "human"},
       {"label", 1}},
      {{"unit_id", "s-a1-1"},
       {"unit_kind", "sentence"},
       {"metric", "veracity"},
       {"annotator", "judge"},
       {"label", 1}},
      {{"unit_id", "s-a1-2"},
       {"unit_kind", "sentence"},
       {"metric", "veracity"},
       {"annotator", "judge"},
       {"label", 0}},
  };

  std::vector<json> embeddings;
  const std::vector<std::string> unit_ids = {"a1", "a2", "a3", "a4"};
  for (size_t i = 0; i < unit_ids.size(); ++i) {
    embeddings.push_back({{"unit_id", unit_ids[i]},
                          {"vector", {0.1 * static_cast<double>(i + 1), 1.0}}});
  }

  SmallCorpus fixture;
  fixture.paths.questions = dir.file("questions.jsonl");
  fixture.paths.answers = dir.file("answers.jsonl");
  fixture.paths.sentences = dir.file("sentences.jsonl");
  fixture.paths.annotations = dir.file("annotations.jsonl");
  fixture.paths.embeddings = dir.file("embeddings.jsonl");
  write_file(fixture.paths.questions, jsonl(questions));
  write_file(fixture.paths.answers, jsonl(answers));
  write_file(fixture.paths.sentences, jsonl(sentences));
  write_file(fixture.paths.annotations, jsonl(annotations));
  write_file(fixture.paths.embeddings, jsonl(embeddings));
  return fixture;
}

// ---------------------------------------------------------------------------
// An answers-only corpus with one question per theme and 2-D embeddings laid
// out on a circle, for sampler-facing tests.

inline CorpusPaths write_embedded_answers(
    const TmpDir& dir, const std::vector<std::pair<std::string, int>>& themes) {
  std::vector<json> questions, answers, embeddings;
  for (const auto& [theme, count] : themes) {
    const std::string qid = "q-" + theme;
    questions.push_back({{"question_id", qid},
                         {"theme", theme},
                         {"difficulty", "Simple"},
                         {"text", "Question " + theme + " ?"}});
    for (int r = 0; r < count; ++r) {
      const std::string aid = "a-" + theme + "-" + std::to_string(r);
      answers.push_back({{"answer_id", aid},
                         {"question_id", qid},
                         {"repetition_index", r},
                         {"text", "Réponse " + std::to_string(r) + "."}});
      const double angle = 6.283185307179586 * r / std::max(count, 1);
      embeddings.push_back(
          {{"unit_id", aid},
           {"vector", {std::cos(angle) + 0.01 * r, std::sin(angle) - 0.01 * r}}});
    }
  }
  CorpusPaths paths;
  paths.questions = dir.file("q.jsonl");
  paths.answers = dir.file("a.jsonl");
  paths.embeddings = dir.file("e.jsonl");
  write_file(paths.questions, jsonl(questions));
  write_file(paths.answers, jsonl(answers));
  write_file(paths.embeddings, jsonl(embeddings));
  return paths;
}

// ---------------------------------------------------------------------------
// Questions following the reference distribution: Finance 16/16/16/15,
// RH 7/7/7/3, IT 10/10/10/4 over Simple/Intermediaire/Difficile/Inapproprie.

inline std::vector<json> reference_distribution_questions() {
  struct Cell {
    const char* theme;
    const char* difficulty;
    int count;
  };
  const std::vector<Cell> cells = {
      {"Finance", "Simple", 16},        {"Finance", "Intermediaire", 16},
      {"Finance", "Difficile", 16},     {"Finance", "Inapproprie", 15},
      {"RH", "Simple", 7},              {"RH", "Intermediaire", 7},
      {"RH", "Difficile", 7},           {"RH", "Inapproprie", 3},
      {"IT", "Simple", 10},             {"IT", "Intermediaire", 10},
      {"IT", "Difficile", 10},          {"IT", "Inapproprie", 4},
  };
  std::vector<json> questions;
  int seq = 0;
  for (const Cell& cell : cells) {
    for (int i = 0; i < cell.count; ++i) {
      char id[32];
      std::snprintf(id, sizeof(id), "q%03d", seq++);
      questions.push_back({{"question_id", id},
                           {"theme", cell.theme},
                           {"difficulty", cell.difficulty},
                           {"text", std::string("Question ") + id + " ?"}});
    }
  }
  return questions;
}

// ---------------------------------------------------------------------------
// A corpus at the scale of the reference evaluation, with annotation counts
// and control-sample agreement patterns matching the reported tables:
//   relevance  n = 29/30/29,   judge-only N = 791/551/325   (Finance/IT/RH)
//   veracity   n = 140/141/139, judge-only N = 3985/3799/2408
// Control cells are laid out deterministically so the observed agreement
// lands on the reference values within +/-0.02.

struct ThemeSpec {
  std::string tag;           // id prefix
  std::string theme;         // enum value
  int question_count;        // questions in this theme
  // relevance (answer-level)
  int rel_n11, rel_n10, rel_n01, rel_n00;
  int rel_judge_only, rel_judge_only_ones;
  // veracity (sentence-level)
  int ver_n11, ver_n10, ver_n01, ver_n00;
  int ver_judge_only, ver_judge_only_ones;
  int sentences_total;       // ver ctrl + ver judge-only
};

inline std::vector<ThemeSpec> reference_scale_specs() {
  return {
      // Finance: rel a_obs 20/29=0.690, ver a_obs 112/140=0.800
      {"fin", "Finance", 63, 16, 2, 7, 4, 791, 655, 97, 15, 13, 15, 3985, 3131, 4125},
      // IT: rel a_obs 15/30=0.500, ver a_obs 112/141=0.794
      {"it", "IT", 34, 7, 3, 12, 8, 551, 349, 101, 12, 17, 11, 3799, 3179, 3940},
      // RH: rel a_obs 17/29=0.586, ver a_obs 123/139=0.885
      {"rh", "RH", 24, 11, 5, 7, 6, 325, 202, 113, 7, 9, 10, 2408, 2114, 2547},
  };
}

inline CorpusPaths write_reference_scale_corpus(const TmpDir& dir) {
  std::vector<json> questions, answers, sentences, annotations;
  const char* difficulties[4] = {"Simple", "Intermediaire", "Difficile", "Inapproprie"};
  int source_seq = 1;

  auto push_annotation = [&](const std::string& unit_id, const char* kind,
                             const char* metric, const char* annotator, int label) {
    annotations.push_back({{"unit_id", unit_id},
                           {"unit_kind", kind},
                           {"metric", metric},
                           {"annotator", annotator},
                           {"label", label}});
  };
  // Deterministic control-cell layout: n11 (1,1), n10 (1,0), n01 (0,1),
  // n00 (0,0) in unit order, then judge-only ones followed by zeros.
  auto annotate_units = [&](const std::vector<std::string>& units, const char* kind,
                            const char* metric, int n11, int n10, int n01, int n00,
                            int judge_only, int judge_only_ones) {
    const int n_ctrl = n11 + n10 + n01 + n00;
    for (int i = 0; i < n_ctrl; ++i) {
      int human, judge;
      if (i < n11) {
        human = 1; judge = 1;
      } else if (i < n11 + n10) {
        human = 1; judge = 0;
      } else if (i < n11 + n10 + n01) {
        human = 0; judge = 1;
      } else {
        human = 0; judge = 0;
      }
      push_annotation(units[static_cast<size_t>(i)], kind, metric, "human", human);
      push_annotation(units[static_cast<size_t>(i)], kind, metric, "judge", judge);
    }
    for (int i = 0; i < judge_only; ++i) {
      const int judge = i < judge_only_ones ? 1 : 0;
      push_annotation(units[static_cast<size_t>(n_ctrl + i)], kind, metric, "judge", judge);
    }
  };

  for (const ThemeSpec& spec : reference_scale_specs()) {
    std::vector<std::string> theme_answers;
    std::vector<std::string> theme_sentences;

    for (int qi = 0; qi < spec.question_count; ++qi) {
      char qid[32];
      std::snprintf(qid, sizeof(qid), "q-%s-%03d", spec.tag.c_str(), qi);
      questions.push_back({{"question_id", qid},
                           {"theme", spec.theme},
                           {"difficulty", difficulties[qi % 4]},
                           {"text", std::string("Question ") + qid + " ?"}});
      for (int rep = 0; rep < 20; ++rep) {
        char aid[48];
        std::snprintf(aid, sizeof(aid), "a-%s-%03d-r%02d", spec.tag.c_str(), qi, rep);
        theme_answers.push_back(aid);
      }
    }

    // Spread sentences over the theme's answers as evenly as possible.
    const int answer_count = static_cast<int>(theme_answers.size());
    const int base = spec.sentences_total / answer_count;
    const int extra = spec.sentences_total % answer_count;
    for (int ai = 0; ai < answer_count; ++ai) {
      const std::string& aid = theme_answers[static_cast<size_t>(ai)];
      const int per_answer = base + (ai < extra ? 1 : 0);
      std::string answer_text;
      std::vector<json> answer_sentences;
      char sid_buf[64];
      char hex[8];
      std::snprintf(hex, sizeof(hex), "%06x", source_seq++ & 0xFFFFFF);
      const std::string source_id = hex;
      for (int k = 0; k < per_answer; ++k) {
        std::snprintf(sid_buf, sizeof(sid_buf), "s-%s-%02d", aid.c_str(), k);
        const std::string sid = sid_buf;
        std::string stext = "La phrase " + std::to_string(k) + " de " + aid +
                            " décrit un indicateur [^" + source_id + "^].";
        if (!answer_text.empty()) answer_text += " ";
        answer_text += stext;
        answer_sentences.push_back({{"sentence_id", sid},
                                    {"answer_id", aid},
                                    {"index", k},
                                    {"text", stext},
                                    {"cited_source_ids", {source_id}}});
        theme_sentences.push_back(sid);
      }
      const size_t dash = aid.rfind("-r");
      const std::string qid = "q-" + aid.substr(2, dash - 2);
      const int rep = std::stoi(aid.substr(dash + 2));
      answers.push_back({{"answer_id", aid},
                         {"question_id", qid},
                         {"repetition_index", rep},
                         {"text", answer_text},
                         {"retrieved_source_ids", {source_id}}});
      for (json& s : answer_sentences) sentences.push_back(std::move(s));
    }

    annotate_units(theme_answers, "answer", "relevance", spec.rel_n11, spec.rel_n10,
                   spec.rel_n01, spec.rel_n00, spec.rel_judge_only,
                   spec.rel_judge_only_ones);
    annotate_units(theme_sentences, "sentence", "veracity", spec.ver_n11, spec.ver_n10,
                   spec.ver_n01, spec.ver_n00, spec.ver_judge_only,
                   spec.ver_judge_only_ones);
  }

  CorpusPaths paths;
  paths.questions = dir.file("questions.jsonl");
  paths.answers = dir.file("answers.jsonl");
  paths.sentences = dir.file("sentences.jsonl");
  paths.annotations = dir.file("annotations.jsonl");
  write_file(paths.questions, jsonl(questions));
  write_file(paths.answers, jsonl(answers));
  write_file(paths.sentences, jsonl(sentences));
  write_file(paths.annotations, jsonl(annotations));
  return paths;
}

}  // namespace ragcheck::testing
