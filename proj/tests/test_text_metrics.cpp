#include "doctest.h"

#include <string>
#include <vector>

#include "ragcheck/text_metrics.hpp"
#include "support/fixtures.hpp"
#include "support/tmpdir.hpp"

using namespace ragcheck;
namespace t = ragcheck::testing;

TEST_SUITE_BEGIN("text");

TEST_CASE("citation extraction on the reference answer") {
  const auto markers = extract_citations(t::reference_answer_full());
  REQUIRE(markers.size() == 3);
  CHECK(markers[0].source_id == "5f7cce");
  CHECK(markers[1].source_id == "4ca822");
  CHECK(markers[2].source_id == "63fadb");
  CHECK(markers[0].raw == "[^5f7cce^]");
  // Offsets point at the raw substring.
  const std::string text = t::reference_answer_full();
  for (const auto& m : markers) {
    CHECK(text.substr(m.begin, m.end - m.begin) == m.raw);
  }
}

TEST_CASE("citation extraction edge cases") {
  CHECK(extract_citations("no citations here").empty());
  CHECK(extract_citations("").empty());
  // Near misses are not markers: uppercase hex, wrong length, missing carets.
  CHECK(extract_citations("[^5F7CCE^]").empty());
  CHECK(extract_citations("[^abc12^]").empty());
  CHECK(extract_citations("[^abc1234^]").empty());
  CHECK(extract_citations("[5f7cce]").empty());
  // A corrupted id that still fits the grammar is extracted; whether it is
  // functional is a separate question.
  const auto ms = extract_citations("voir [^4ca823^]");
  REQUIRE(ms.size() == 1);
  CHECK(ms[0].source_id == "4ca823");
  // Adjacent markers.
  CHECK(extract_citations("[^4ca822^][^63fadb^]").size() == 2);
}

TEST_CASE("sentence split of the citation-bearing body") {
  const auto spans = split_sentences(t::reference_answer_fragment());
  REQUIRE(spans.size() == 2);
  REQUIRE(spans[0].citations.size() == 1);
  CHECK(spans[0].citations[0].source_id == "5f7cce");
  REQUIRE(spans[1].citations.size() == 2);
  CHECK(spans[1].citations[0].source_id == "4ca822");
  CHECK(spans[1].citations[1].source_id == "63fadb");
  CHECK(spans[0].text == t::reference_answer_body_first());
  CHECK(spans[1].text == t::reference_answer_body_second());
}

TEST_CASE("sentence split of the full reference answer") {
  const auto spans = split_sentences(t::reference_answer_full());
  REQUIRE(spans.size() == 3);
  CHECK(spans[0].citations.empty());
  REQUIRE(spans[1].citations.size() == 1);
  CHECK(spans[1].citations[0].source_id == "5f7cce");
  CHECK(spans[2].citations.size() == 2);
}

TEST_CASE("sentence split edge cases") {
  CHECK(split_sentences("").empty());
  CHECK(split_sentences("   ").empty());

  SUBCASE("single-letter initials are not boundaries") {
    const auto spans = split_sentences("A. B. Dupont a signé. Voir [^abc123^].");
    REQUIRE(spans.size() == 2);
    CHECK(spans[0].text == "A. B. Dupont a signé.");
    CHECK(spans[1].text == "Voir [^abc123^].");
    REQUIRE(spans[1].citations.size() == 1);
    CHECK(spans[1].citations[0].source_id == "abc123");
  }
  SUBCASE("known abbreviations are not boundaries") {
    const auto spans = split_sentences("Voir p. 12 du rapport. Ensuite M. Martin signe.");
    REQUIRE(spans.size() == 2);
    CHECK(spans[0].text == "Voir p. 12 du rapport.");
  }
  SUBCASE("decimal points are not boundaries") {
    const auto spans = split_sentences("Le taux vaut 3.14 aujourd'hui. Il montera demain.");
    REQUIRE(spans.size() == 2);
  }
  SUBCASE("no whitespace-capital continuation means no boundary") {
    CHECK(split_sentences("fichier.txt est fourni").size() == 1);
  }
  SUBCASE("markers after the terminator bind backwards") {
    const auto spans = split_sentences("Premier point. [^aaaaaa^] Deuxième point.");
    REQUIRE(spans.size() == 2);
    CHECK(spans[0].text == "Premier point. [^aaaaaa^]");
    REQUIRE(spans[0].citations.size() == 1);
    CHECK(spans[0].citations[0].source_id == "aaaaaa");
    CHECK(spans[1].citations.empty());
  }
  SUBCASE("accented capitals open sentences") {
    const auto spans = split_sentences("Bonjour. Évidemment oui.");
    REQUIRE(spans.size() == 2);
    CHECK(spans[1].text == "Évidemment oui.");
  }
  SUBCASE("colon followed by capital splits") {
    CHECK(split_sentences("Voici : Une liste suit.").size() == 2);
  }
  SUBCASE("degenerate input yields one sentence") {
    CHECK(split_sentences("pas de terminateur").size() == 1);
  }
}

TEST_CASE("splitting is deterministic and markers partition over sentences") {
  const std::vector<std::string> samples = {
      t::reference_answer_full(),
      "Un seul [^abcdef^] marqueur.",
      "Phrase un [^111aaa^]. Phrase deux [^222bbb^][^333ccc^]. Fin sans marqueur.",
      "Rien du tout",
  };
  for (const std::string& text : samples) {
    const auto first = split_sentences(text);
    const auto second = split_sentences(text);
    REQUIRE(first.size() == second.size());
    std::vector<std::string> from_spans;
    std::string reassembled;
    for (size_t i = 0; i < first.size(); ++i) {
      CHECK(first[i].text == second[i].text);
      for (const auto& m : first[i].citations) from_spans.push_back(m.source_id);
      reassembled += first[i].text;
    }
    // Union of per-sentence markers == markers of the whole text, in order.
    std::vector<std::string> from_text;
    for (const auto& m : extract_citations(text)) from_text.push_back(m.source_id);
    CHECK(from_spans == from_text);
    // Concatenation reproduces the input modulo whitespace.
    CHECK(strip_whitespace(reassembled) == strip_whitespace(text));
  }
}

TEST_CASE("language detection") {
  CHECK(detect_language(t::reference_answer_full()) == Language::fr);
  // English stopword hits ("the", "to", "and") with zero French hits.
  CHECK(detect_language("The company uses satisfaction surveys to assess employee "
                        "engagement and morale.") == Language::en);
  CHECK(detect_language("") == Language::other);
  CHECK(detect_language("[^5f7cce^]") == Language::other);  // only a marker
  CHECK(detect_language("42 17 93") == Language::other);

  SUBCASE("the per-answer override wins") {
    Answer a;
    a.text = t::reference_answer_full();  // detector would say fr
    a.language = Language::en;
    CHECK(answer_language(a) == Language::en);
    a.language.reset();
    CHECK(answer_language(a) == Language::fr);
  }
  SUBCASE("the detector agrees with every shipped override column") {
    t::TmpDir dir;
    const auto fixture = t::write_small_corpus(dir);
    const Corpus corpus = Corpus::load(fixture.paths);
    size_t overrides = 0;
    for (const Answer& a : corpus.answers()) {
      if (!a.language) continue;
      ++overrides;
      CHECK(detect_language(a.text) == *a.language);
    }
    CHECK(overrides > 0);
  }
}

TEST_CASE("abstention list and effective responses") {
  const AbstentionList abstentions = AbstentionList::defaults();
  // Citations present, no abstention.
  CHECK(is_effective_response(t::reference_answer_full(), abstentions) == 1);
  // No citations at all.
  CHECK(is_effective_response("Je ne dispose pas d'informations à ce sujet.",
                              abstentions) == 0);
  // Citations present but an abstention phrase matches, case-insensitively.
  CHECK(is_effective_response("JE NE PEUX PAS RÉPONDRE ici [^abc123^].",
                              abstentions) == 0);
  CHECK(is_effective_response("Réponse claire [^abc123^].", abstentions) == 1);

  SUBCASE("list files support comments") {
    t::TmpDir dir;
    t::write_file(dir.file("phrases.txt"),
                  "# custom list\nje refuse de\n  sans objet  # inline comment\n\n");
    const AbstentionList custom = AbstentionList::from_file(dir.file("phrases.txt"));
    REQUIRE(custom.phrases.size() == 2);
    CHECK(custom.phrases[0] == "je refuse de");
    CHECK(custom.phrases[1] == "sans objet");
    CHECK(is_effective_response("Je refuse de répondre [^abc123^].", custom) == 0);
  }
}

TEST_CASE("functional citation labels") {
  Answer a;
  a.retrieved_source_ids = {"4ca822", "5f7cce", "63fadb"};
  Sentence s;
  s.cited_source_ids = {"5f7cce"};
  CHECK(functional_citation_label(s, a) == 1);
  s.cited_source_ids.clear();
  CHECK(functional_citation_label(s, a) == std::nullopt);
  s.cited_source_ids = {"4ca823"};
  Answer narrow;
  narrow.retrieved_source_ids = {"4ca822"};
  CHECK(functional_citation_label(s, narrow) == 0);
  // Multiple citations: all must match.
  s.cited_source_ids = {"4ca822", "5f7cce"};
  CHECK(functional_citation_label(s, a) == 1);
  s.cited_source_ids = {"4ca822", "ffffff"};
  CHECK(functional_citation_label(s, a) == 0);
}

TEST_CASE("auto rates over the small corpus match hand counts") {
  t::TmpDir dir;
  const auto fixture = t::write_small_corpus(dir);
  const Corpus corpus = Corpus::load(fixture.paths);

  const std::vector<AutoMetricReport> reports = auto_rates(corpus, 0.05);

  auto find = [&](UnitKind kind, Theme theme, Difficulty diff,
                  AutoMetric metric) -> const AutoMetricReport* {
    for (const auto& r : reports) {
      if (r.stratum.kind == kind && r.stratum.theme == theme &&
          r.stratum.difficulty == diff && r.metric == metric) {
        return &r;
      }
    }
    return nullptr;
  };

  // Finance/Simple answers: a1 (fr), a2 (en override); both effective.
  const auto* lang = find(UnitKind::answer, Theme::finance, Difficulty::simple,
                          AutoMetric::language_correct);
  REQUIRE(lang != nullptr);
  CHECK(lang->numerator == 1);
  CHECK(lang->denominator == 2);
  const auto* eff = find(UnitKind::answer, Theme::finance, Difficulty::simple,
                         AutoMetric::effective_response);
  REQUIRE(eff != nullptr);
  CHECK(eff->numerator == 2);
  CHECK(eff->denominator == 2);

  // RH/Difficile: abstention answer without citations.
  const auto* eff_rh = find(UnitKind::answer, Theme::rh, Difficulty::difficile,
                            AutoMetric::effective_response);
  REQUIRE(eff_rh != nullptr);
  CHECK(eff_rh->numerator == 0);
  CHECK(eff_rh->denominator == 1);

  // Finance/Simple sentences: 3 of 5 carry citations, all functional.
  const auto* fc = find(UnitKind::sentence, Theme::finance, Difficulty::simple,
                        AutoMetric::functional_citation);
  REQUIRE(fc != nullptr);
  CHECK(fc->numerator == 3);
  CHECK(fc->denominator == 3);
  CHECK(fc->rate == 1.0);

  // IT/Inapproprie sentence cites a corrupted id.
  const auto* fc_it = find(UnitKind::sentence, Theme::it, Difficulty::inapproprie,
                           AutoMetric::functional_citation);
  REQUIRE(fc_it != nullptr);
  CHECK(fc_it->numerator == 0);
  CHECK(fc_it->denominator == 1);

  // The RH sentence stratum has no cited sentences, so no report row.
  CHECK(find(UnitKind::sentence, Theme::rh, Difficulty::difficile,
             AutoMetric::functional_citation) == nullptr);

  // Display interval stays inside [0, 1].
  for (const auto& r : reports) {
    CHECK(r.ci_low >= 0.0);
    CHECK(r.ci_high <= 1.0);
    CHECK(r.numerator <= r.denominator);
    CHECK(r.rate ==
          doctest::Approx(double(r.numerator) / double(r.denominator)));
  }
}

TEST_CASE("a corpus whose citations copy the retrieved ids rates 1.0 exactly") {
  t::TmpDir dir;
  const CorpusPaths paths = t::write_reference_scale_corpus(dir);
  const Corpus corpus = Corpus::load(paths);
  const auto reports = auto_rates(corpus, 0.05);
  bool saw_functional = false;
  for (const auto& r : reports) {
    if (r.metric == AutoMetric::functional_citation) {
      saw_functional = true;
      CHECK(r.rate == 1.0);
    }
  }
  CHECK(saw_functional);
}

TEST_SUITE_END();
