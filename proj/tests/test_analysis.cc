#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "chemprot/analysis.h"

using namespace chemprot;

namespace {

const std::set<std::string> kDocs = {"d", "e"};

EntityKey Chem(int s, int e, const std::string &doc = "d") { return {doc, {s, e}, EntityType::kChemical}; }
EntityKey Gene(int s, int e, const std::string &doc = "d") { return {doc, {s, e}, EntityType::kGene}; }

RelationKey Rel(const EntityKey &subj, const EntityKey &obj, RelationLabel l) {
  return {subj.doc_id, subj.span, obj.span, l};
}

// Character span of `surface` in an ASCII text.
CharSpan Find(const std::string &text, const std::string &surface) {
  const int start = static_cast<int>(text.find(surface));
  return {start, start + static_cast<int>(surface.size())};
}

}  // namespace

TEST_CASE("fractions render with three decimals, half up") {
  CHECK(Fraction{1, 4}.ToString() == "0.250");
  CHECK(Fraction{1, 8}.ToString() == "0.125");
  CHECK(Fraction{5, 2000}.ToString() == "0.003");
  CHECK(Fraction{1, 3}.ToString() == "0.333");
  CHECK(Fraction{2, 3}.ToString() == "0.667");
  CHECK(Fraction{3, 3}.ToString() == "1.000");
  CHECK(Fraction{0, 0}.ToString() == "0.000");
}

TEST_CASE("perfect predictions give an all-zero breakdown") {
  const std::set<EntityKey> ents = {Chem(0, 3), Gene(10, 14)};
  const std::set<RelationKey> rels = {Rel(Chem(0, 3), Gene(10, 14), RelationLabel::kCpr4)};
  const ErrorBreakdown b = Analyze(kDocs, ents, rels, ents, rels);
  CHECK(b.re_errors_total == 0);
  CHECK(b.errors.empty());
  CHECK(b.confusion_counts.empty());
  CHECK(b.null_fn_by_type.at(RelationLabel::kCpr4) == Fraction{0, 1});
  CHECK(b.fp_fraction_by_pred_type.at(RelationLabel::kCpr4) == Fraction{0, 1});
  CHECK(b.null_fn_by_type.at(RelationLabel::kCpr9) == Fraction{0, 0});

  const std::string report = RenderReport(b);
  CHECK(report.find("CPR:3 -> CPR:4") != std::string::npos);
  CHECK(report.find("0.000") != std::string::npos);
}

TEST_CASE("a substring chemical makes one NER-caused FN and one NER-caused FP") {
  const std::string text =
      "Since this compound retains good AChE inhibitory activity and its hexahydrochromeno[4,3-b]pyrrole "
      "moiety is reminiscent of the hexahydropyrrolo[2,3-b]indole of physostigmine (3), ...";
  const EntityKey ache = {"d", Find(text, "AChE"), EntityType::kGene};
  const EntityKey gold_chem = {"d", Find(text, "hexahydropyrrolo[2,3-b]indole of physostigmine"),
                               EntityType::kChemical};
  const EntityKey pred_chem = {"d", Find(text, "hexahydropyrrolo[2,3-b]indole"), EntityType::kChemical};
  REQUIRE(gold_chem.span.start == pred_chem.span.start);

  const ErrorBreakdown b =
      Analyze(kDocs, {ache, gold_chem}, {Rel(gold_chem, ache, RelationLabel::kCpr4)}, {ache, pred_chem},
              {Rel(pred_chem, ache, RelationLabel::kCpr4)});
  CHECK(b.re_errors_total == 2);
  CHECK(b.re_errors_ner_caused == 2);
  REQUIRE(b.errors.size() == 2);
  CHECK_FALSE(b.errors[0].false_positive);
  CHECK(b.errors[0].category == ErrorCategory::kNerCaused);
  CHECK(b.errors[1].false_positive);
  CHECK(b.errors[1].category == ErrorCategory::kNerCaused);
  // Different argument spans, so two distinct pairs under either convention.
  CHECK(b.re_error_pairs_total == 2);
  CHECK(b.null_fn_by_type.at(RelationLabel::kCpr4) == Fraction{0, 1});
  CHECK(b.fp_fraction_by_pred_type.at(RelationLabel::kCpr4) == Fraction{1, 1});
}

TEST_CASE("wrong label on exact spans is a confusion") {
  const std::set<EntityKey> ents = {Chem(0, 3), Gene(10, 14)};
  const ErrorBreakdown b = Analyze(kDocs, ents, {Rel(Chem(0, 3), Gene(10, 14), RelationLabel::kCpr3)}, ents,
                                   {Rel(Chem(0, 3), Gene(10, 14), RelationLabel::kCpr4)});
  CHECK(b.confusion == 2);
  CHECK(b.re_errors_total == 2);
  CHECK(b.re_error_pairs_total == 1);
  CHECK(b.re_errors_ner_caused == 0);
  REQUIRE(b.confusion_counts.size() == 1);
  CHECK(b.confusion_counts.at({RelationLabel::kCpr3, RelationLabel::kCpr4}) == 1);
  CHECK(b.null_fn == 0);

  const auto j = ToJson(b);
  int nonzero = 0;
  for (const auto &row : j["confusion_counts"]) nonzero += row["count"].get<int>() != 0;
  CHECK(nonzero == 1);
  CHECK(j["confusion_counts"].size() == 20);
}

TEST_CASE("null FN and non-NER FP") {
  const std::set<EntityKey> ents = {Chem(0, 3), Gene(10, 14), Gene(20, 24)};
  const ErrorBreakdown b = Analyze(kDocs, ents, {Rel(Chem(0, 3), Gene(10, 14), RelationLabel::kCpr9)}, ents,
                                   {Rel(Chem(0, 3), Gene(20, 24), RelationLabel::kCpr9)});
  CHECK(b.null_fn == 1);
  CHECK(b.non_ner_fp == 1);
  CHECK(b.null_fn_by_type.at(RelationLabel::kCpr9) == Fraction{1, 1});
  CHECK(b.fp_fraction_by_pred_type.at(RelationLabel::kCpr9).ToString() == "1.000");
}

TEST_CASE("unknown documents are rejected") {
  CHECK_THROWS_AS(Analyze(kDocs, {}, {}, {Chem(0, 1, "zz")}, {}), Error);
  CHECK_THROWS_AS(Analyze(kDocs, {}, {}, {}, {Rel(Chem(0, 1, "zz"), Gene(2, 3, "zz"), RelationLabel::kCpr3)}),
                  Error);
}

TEST_CASE("categories partition all relation errors") {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    const bool single_label = trial % 2 == 0;
    std::set<EntityKey> gold_e, pred_e;
    auto random_entity = [&](bool chem) {
      const std::string doc = rng() % 2 ? "d" : "e";
      const int s = rng() % 4 * 10 + (chem ? 0 : 50);
      const int e = s + 3 + rng() % 2;
      return chem ? Chem(s, e, doc) : Gene(s, e, doc);
    };
    for (int i = 0; i < 8; ++i) {
      const EntityKey k = random_entity(i % 2);
      if (rng() % 3) gold_e.insert(k);
      if (rng() % 3) pred_e.insert(k);
    }
    auto random_relations = [&](const std::set<EntityKey> &ents) {
      std::vector<EntityKey> chems, genes;
      for (const auto &k : ents) (k.type == EntityType::kChemical ? chems : genes).push_back(k);
      std::set<RelationKey> out;
      for (const auto &c : chems) {
        for (const auto &g : genes) {
          if (c.doc_id != g.doc_id || rng() % 2) continue;
          const int labels = single_label ? 1 : 1 + rng() % 2;
          for (int i = 0; i < labels; ++i) out.insert(Rel(c, g, kEvalLabels[rng() % 5]));
        }
      }
      return out;
    };
    const auto gold_r = random_relations(gold_e);
    const auto pred_r = random_relations(pred_e);

    const ErrorBreakdown b = Analyze(kDocs, gold_e, gold_r, pred_e, pred_r);
    const ScoreReport score = ScoreRe(gold_r, pred_r);
    REQUIRE(b.re_errors_total == score.fp + score.fn);
    REQUIRE(b.re_errors_ner_caused + b.null_fn + b.confusion + b.non_ner_fp == b.re_errors_total);
    REQUIRE(static_cast<int>(b.errors.size()) == b.re_errors_total);
    int fps = 0;
    for (const RelationError &e : b.errors) {
      fps += e.false_positive;
      CHECK(pred_r.contains(e.key) == e.false_positive);
      CHECK(gold_r.contains(e.key) == !e.false_positive);
      if (!e.false_positive) CHECK(e.category != ErrorCategory::kNonNerFp);
      if (e.false_positive) CHECK(e.category != ErrorCategory::kNullFn);
    }
    REQUIRE(fps == score.fp);
    REQUIRE(b.re_error_pairs_ner_caused <= b.re_error_pairs_total);
    REQUIRE(b.re_error_pairs_total <= b.re_errors_total);
    for (const auto &[label, f] : b.null_fn_by_type) REQUIRE(f.value() <= 1.0);
    for (const auto &[label, f] : b.fp_fraction_by_pred_type) REQUIRE(f.value() <= 1.0);
    if (single_label) {
      // One label per pair on each side: each confused pair is one FP and one FN.
      int events = 0;
      for (const auto &[key, n] : b.confusion_counts) events += n;
      REQUIRE(b.confusion == 2 * events);
    }
  }
}

TEST_CASE("analysis files") {
  const std::set<EntityKey> ents = {Chem(0, 3), Gene(10, 14)};
  const ErrorBreakdown b = Analyze(kDocs, ents, {Rel(Chem(0, 3), Gene(10, 14), RelationLabel::kCpr3)}, ents,
                                   {Rel(Chem(0, 3), Gene(10, 14), RelationLabel::kCpr4)});
  const auto dir = std::filesystem::temp_directory_path() / "chemprot_analysis";
  WriteAnalysis(b, dir);
  CHECK(std::filesystem::exists(dir / "report.txt"));
  CHECK(std::filesystem::exists(dir / "report.json"));
  std::ifstream in(dir / "confusion.tsv");
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines >= 2);
}
