#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>
#include <set>
#include <sstream>

#include "chemprot/relation.h"
#include "chemprot/synthetic.h"
#include "chemprot/tokenizer.h"
#include "test_util.h"

using namespace chemprot;
using chemprot::testing::RunningExample;
using chemprot::testing::TinyEncoderConfig;

namespace {

std::vector<Symbol> Words(int n) {
  std::vector<Symbol> out;
  for (int i = 0; i < n; ++i) out.push_back(Symbol::Text("t" + std::to_string(i)));
  return out;
}

SpanMention Chem(int s, int e) { return {0, s, e, EntityType::kChemical}; }
SpanMention Gene(int s, int e) { return {0, s, e, EntityType::kGene}; }

std::string Render(std::span<const Symbol> symbols) {
  std::string out;
  for (const Symbol &s : symbols) {
    if (!out.empty()) out += ' ';
    out += s.ToString();
  }
  return out;
}

std::vector<double> Flatten(RelationModel &model) {
  std::vector<double> out;
  for (Param *p : model.params()) out.insert(out.end(), p->value.data(), p->value.data() + p->value.size());
  return out;
}

RelationConfig SmallRelation(Variant v = Variant::kC) {
  RelationConfig c;
  c.variant = v;
  c.context_window = 10;
  c.train = {40, 8, 1e-2, 1.0};
  return c;
}

}  // namespace

TEST_CASE("pairs are the chemical x gene product") {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<SpanMention> mentions;
    const int n = rng() % 8;
    int chems = 0;
    int genes = 0;
    for (int i = 0; i < n; ++i) {
      const int s = rng() % 10;
      const int e = s + rng() % 3;
      const bool chem = rng() % 2;
      (chem ? chems : genes)++;
      mentions.push_back(chem ? Chem(s, e) : Gene(s, e));
    }
    const auto pairs = GeneratePairs(mentions);
    REQUIRE(static_cast<int>(pairs.size()) == chems * genes);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      CHECK(pairs[i].first.type == EntityType::kChemical);
      CHECK(pairs[i].second.type == EntityType::kGene);
      if (i > 0) {
        CHECK(std::pair(pairs[i - 1].first.token_start, pairs[i - 1].second.token_start) <=
              std::pair(pairs[i].first.token_start, pairs[i].second.token_start));
      }
    }
  }
  const std::vector<SpanMention> none = {Chem(0, 0), Chem(2, 2)};
  CHECK(GeneratePairs(none).empty());
  const std::vector<SpanMention> nested = {Gene(3, 12), Chem(3, 4)};
  REQUIRE(GeneratePairs(nested).size() == 1);
  CHECK(GeneratePairs(nested)[0].first == Chem(3, 4));
}

TEST_CASE("marked running example matches the published sequence") {
  Corpus corpus;
  corpus.documents.push_back(RunningExample());
  const auto docs = PrepareCorpus(corpus, RuleSegmenter());
  const auto sentence = SentenceSymbols(docs[0], 0);
  const MarkedSequence marked = InsertMarkers(sentence, Chem(16, 17), Gene(3, 12));

  const std::string published =
      "Contribution of the [O:GENE] Na+-K+-2Cl- cotransporter [\\O:GENE] NKCC1 to [S:CHEM] Cl- "
      "[\\S:CHEM] secretion in rat OMCD";
  std::vector<std::string> expected;
  std::istringstream words(published);
  for (std::string w; words >> w;) {
    if (w.front() == '[') {
      expected.push_back(w);
    } else {
      for (const Token &t : Tokenize(w)) expected.push_back(t.surface);
    }
  }
  expected.push_back(".");  // the quoted sequence leaves out the full stop
  std::vector<std::string> got;
  for (const Symbol &s : marked.symbols) got.push_back(s.ToString());
  CHECK(got == expected);
}

TEST_CASE("disjoint spans") {
  const auto sentence = Words(8);
  const MarkedSequence m = InsertMarkers(sentence, Chem(0, 1), Gene(5, 6));
  CHECK(m.markers == std::array<int, 4>{0, 3, 7, 10});
  CHECK(m.symbols.size() == 12);
  CHECK(m.token_positions[5] == 8);
  // Object first in the sentence.
  const MarkedSequence r = InsertMarkers(sentence, Chem(5, 6), Gene(0, 1));
  CHECK(Render(r.symbols) == "[O:GENE] t0 t1 [\\O:GENE] t2 t3 t4 [S:CHEM] t5 t6 [\\S:CHEM] t7");
}

TEST_CASE("nested and identical spans bracket properly") {
  const auto sentence = Words(5);
  CHECK(Render(InsertMarkers(sentence, Chem(1, 2), Gene(1, 3)).symbols) ==
        "t0 [O:GENE] [S:CHEM] t1 t2 [\\S:CHEM] t3 [\\O:GENE] t4");
  CHECK(Render(InsertMarkers(sentence, Chem(2, 2), Gene(1, 3)).symbols) ==
        "t0 [O:GENE] t1 [S:CHEM] t2 [\\S:CHEM] t3 [\\O:GENE] t4");
  CHECK(Render(InsertMarkers(sentence, Chem(0, 4), Gene(2, 4)).symbols) ==
        "[S:CHEM] t0 t1 [O:GENE] t2 t3 t4 [\\O:GENE] [\\S:CHEM]");
  CHECK(Render(InsertMarkers(sentence, Chem(2, 3), Gene(2, 3)).symbols) ==
        "t0 t1 [S:CHEM] [O:GENE] t2 t3 [\\O:GENE] [\\S:CHEM] t4");
  CHECK(Render(InsertMarkers(sentence, Chem(1, 2), Gene(2, 3)).symbols) ==
        "t0 [S:CHEM] t1 [O:GENE] t2 [\\S:CHEM] t3 [\\O:GENE] t4");
}

TEST_CASE("out-of-range spans throw") {
  const auto sentence = Words(4);
  CHECK_THROWS_AS(InsertMarkers(sentence, Chem(0, 4), Gene(1, 1)), ContractViolation);
  CHECK_THROWS_AS(InsertMarkers(sentence, Chem(-1, 0), Gene(1, 1)), ContractViolation);
  CHECK_THROWS_AS(InsertMarkers(sentence, Chem(2, 1), Gene(1, 1)), ContractViolation);
}

TEST_CASE("marker removal inverts insertion for every span pair") {
  const auto sentence = Words(6);
  for (int a = 0; a < 6; ++a) {
    for (int b = a; b < 6; ++b) {
      for (int c = 0; c < 6; ++c) {
        for (int d = c; d < 6; ++d) {
          const MarkedSequence m = InsertMarkers(sentence, Chem(a, b), Gene(c, d));
          REQUIRE(RemoveMarkers(m.symbols) == sentence);
          REQUIRE(m.symbols.size() == sentence.size() + 4);
          CHECK(m.symbols[m.markers[0]] == Symbol::Marker(Special::kSubjectStart));
          CHECK(m.symbols[m.markers[3]] == Symbol::Marker(Special::kObjectEnd));
          CHECK(m.markers[0] < m.token_positions[a]);
          CHECK(m.markers[1] > m.token_positions[b]);
        }
      }
    }
  }
}

TEST_CASE("instances without context are the marked sentence after [CLS]") {
  const auto sentence = Words(6);
  const RelationInstance inst =
      BuildRelationInstance("d", sentence, ContextSupply{Words(3), Words(3)}, Chem(0, 0), Gene(3, 4), 0, 64);
  CHECK(inst.marked.symbols.size() == sentence.size() + 4);
  CHECK(inst.symbols.size() == sentence.size() + 5);
  CHECK(inst.symbols[0] == Symbol::Marker(Special::kCls));
  CHECK(inst.positions.subject_start == 1);
  CHECK(inst.positions.middle == std::vector<int>{4, 5});

  const RelationInstance wide =
      BuildRelationInstance("d", sentence, ContextSupply{Words(3), Words(3)}, Chem(0, 0), Gene(3, 4), 4, 64);
  CHECK(wide.symbols.size() == sentence.size() + 9);
  CHECK(wide.positions.subject_start == 3);
  CHECK_THROWS_AS(BuildRelationInstance("d", sentence, {}, Chem(0, 0), Gene(3, 4), 0, 10), ContractViolation);
}

TEST_CASE("representation dimensions") {
  for (int d : {8, 64}) {
    CHECK(RepresentationDim(Variant::kA, d) == 2 * d);
    CHECK(RepresentationDim(Variant::kB, d) == 3 * d);
    CHECK(RepresentationDim(Variant::kC, d) == 3 * d);
    CHECK(RepresentationDim(Variant::kD, d) == 4 * d);
    CHECK(RepresentationDim(Variant::kE, d) == 5 * d);
    CHECK(RepresentationDim(Variant::kF, d) == 6 * d);
  }
  CHECK_THROWS_AS(ParseVariant("G"), Error);
}

TEST_CASE("representation blocks and the zero middle") {
  Rng rng(4);
  std::normal_distribution<double> dist;
  Matrix encoded(12, 4);
  for (Eigen::Index i = 0; i < encoded.size(); ++i) encoded.data()[i] = dist(rng);
  const auto sentence = Words(6);
  for (Variant v : {Variant::kA, Variant::kB, Variant::kC, Variant::kD, Variant::kE, Variant::kF}) {
    for (int gap = 0; gap <= 2; ++gap) {
      const RelationInstance inst =
          BuildRelationInstance("d", sentence, {}, Chem(0, 1), Gene(2 + gap, 3 + gap), 0, 64);
      const RowVector rep = BuildRepresentation(encoded.topRows(inst.symbols.size()), inst.positions, v);
      REQUIRE(rep.size() == RepresentationDim(v, 4));
      const auto &p = inst.positions;
      CHECK(static_cast<int>(p.middle.size()) == gap);
      RowVector middle = RowVector::Zero(4);
      for (int m : p.middle) middle += encoded.row(m) / static_cast<double>(gap);
      std::vector<RowVector> blocks;
      const bool cls = v == Variant::kB || v == Variant::kD || v == Variant::kF;
      if (cls) blocks.push_back(encoded.row(p.cls));
      blocks.push_back(encoded.row(p.subject_start));
      if (v == Variant::kE || v == Variant::kF) blocks.push_back(encoded.row(p.subject_end));
      if (v != Variant::kA && v != Variant::kB) blocks.push_back(middle);
      blocks.push_back(encoded.row(p.object_start));
      if (v == Variant::kE || v == Variant::kF) blocks.push_back(encoded.row(p.object_end));
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        CHECK(rep.segment(4 * b, 4).isApprox(blocks[b]));
      }
      if (gap == 0 && v == Variant::kC) CHECK(rep.segment(4, 4).isZero(0.0));

      // The representation is linear in the encoded rows, so the backward
      // pass must satisfy <d_rep, rep(E)> = <d_E, E>.
      RowVector d_rep(rep.size());
      for (Eigen::Index i = 0; i < d_rep.size(); ++i) d_rep[i] = dist(rng);
      Matrix d_encoded = Matrix::Zero(inst.symbols.size(), 4);
      BuildRepresentationBackward(d_rep, p, v, &d_encoded);
      const Matrix used = encoded.topRows(inst.symbols.size());
      CHECK((d_encoded.array() * used.array()).sum() == doctest::Approx(d_rep.dot(rep)));
    }
  }
}

TEST_CASE("relation head") {
  RelationHead head(12, 8, 5);
  RowVector rep = RowVector::LinSpaced(12, -1.0, 1.0);
  CHECK_THROWS_AS(head.Probabilities(RowVector::Zero(11)), ContractViolation);
  const RowVector p = head.Probabilities(rep);
  CHECK(p.size() == kNumRelationLabels);
  CHECK(p.sum() == doctest::Approx(1.0));
  CHECK(p == RelationHead(12, 8, 5).Probabilities(rep));
  CHECK(p == head.Probabilities(rep * 1.0));

  Adam adam({.learning_rate = 1e-2, .clip_norm = 1.0});
  for (int step = 0; step < 300; ++step) {
    head.LossAndGradient(rep, RelationLabel::kCpr4, 1.0, nullptr);
    adam.Step(head.params());
  }
  const RelationDecision d = ClassifyRelation(head, rep);
  CHECK(d.label == RelationLabel::kCpr4);
  CHECK(d.probability > 0.99);
}

TEST_CASE("relation model gradients match finite differences") {
  EncoderConfig enc = TinyEncoderConfig(7);
  enc.dim = 8;
  enc.buckets = 16;
  enc.ff_dim = 12;
  for (Variant v : {Variant::kA, Variant::kF}) {
    RelationModel model = RelationModel::Create(SmallRelation(v), enc);
    const RelationInstance inst = BuildRelationInstance("d", Words(5), {}, Chem(0, 0), Gene(3, 4), 0, 64);
    auto loss = [&](bool backprop) {
      return model.LossAndGradient(inst, RelationLabel::kCpr9, backprop ? 1.0 : 0.0);
    };
    const GradCheckResult r = GradCheck(model.params(), loss, 1e-4);
    INFO(ToString(v) << " " << r.worst_param << "[" << r.worst_entry << "] " << r.max_rel_error);
    CHECK(r.max_rel_error < 1e-3);
  }
}

TEST_CASE("training examples come from gold pairs") {
  Corpus corpus;
  corpus.documents.push_back(RunningExample());
  corpus.documents[0].relations.push_back({CprGroup::kCpr4, true, "T4", "T1"});
  corpus.documents[0].relations.push_back({CprGroup::kCpr2, false, "T2", "T1"});
  const auto docs = PrepareCorpus(corpus, RuleSegmenter());
  const auto examples = BuildRelationExamples(docs, SmallRelation(), 64);
  std::multiset<std::pair<int, RelationLabel>> got;
  for (const auto &ex : examples) got.insert({ex.instance.subject.token_start, ex.label});
  const std::multiset<std::pair<int, RelationLabel>> expected = {
      {3, RelationLabel::kNull}, {6, RelationLabel::kNull},
      {16, RelationLabel::kCpr4}, {16, RelationLabel::kCpr9}};
  CHECK(got == expected);
}

TEST_CASE("training without pairs is a no-op; fixed seeds reproduce") {
  RelationModel base = RelationModel::Create(SmallRelation(), TinyEncoderConfig(8));
  RelationModel empty = base;
  CHECK(TrainRelation(&empty, {}, SmallRelation().train, 1).steps == 0);
  CHECK(Flatten(empty) == Flatten(base));

  const Corpus corpus = MakeMicroCorpus({.documents = 2});
  const auto docs = PrepareCorpus(corpus, RuleSegmenter());
  const auto examples = BuildRelationExamples(docs, SmallRelation(), 64);
  REQUIRE_FALSE(examples.empty());
  TrainOptions one = SmallRelation().train;
  one.epochs = 1;
  RelationModel a = base;
  RelationModel b = base;
  TrainRelation(&a, examples, one, 3);
  TrainRelation(&b, examples, one, 3);
  CHECK(Flatten(a) == Flatten(b));
  CHECK(Flatten(a) != Flatten(base));
}

TEST_CASE("overfit model recovers gold relations from gold entities") {
  const Corpus corpus = MakeMicroCorpus({.documents = 3});
  const auto docs = PrepareCorpus(corpus, RuleSegmenter());
  const auto examples = BuildRelationExamples(docs, SmallRelation(), 64);
  RelationModel model = RelationModel::Create(SmallRelation(), TinyEncoderConfig(12));
  TrainRelation(&model, examples, SmallRelation().train, 1);

  std::set<std::tuple<std::string, CharSpan, CharSpan, RelationLabel>> gold;
  for (const Document &doc : corpus.documents) {
    for (const GoldRelation &r : doc.relations) {
      if (!r.eval_flag || !IsEvalGroup(r.group)) continue;
      gold.insert({doc.id(), doc.FindEntity(r.arg1)->span(), doc.FindEntity(r.arg2)->span(),
                   LabelForGroup(r.group)});
    }
  }
  std::set<std::tuple<std::string, CharSpan, CharSpan, RelationLabel>> got;
  const auto predictions = PredictRelations(model, docs, GoldMentions(docs));
  for (const auto &p : predictions) got.insert({p.doc_id, p.subject_chars, p.object_chars, p.label});
  CHECK(got == gold);

  // No predicted entities, no relations.
  CHECK(PredictRelations(model, docs, MentionsFromPredictions(docs, {})).empty());

  const auto path = std::filesystem::temp_directory_path() / "chemprot_rels.tsv";
  WriteRelationPredictions(predictions, path);
  const auto back = ReadRelationPredictions(path);
  REQUIRE(back.size() == predictions.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].doc_id == predictions[i].doc_id);
    CHECK(back[i].subject_chars == predictions[i].subject_chars);
    CHECK(back[i].object_doc_end == predictions[i].object_doc_end);
    CHECK(back[i].label == predictions[i].label);
  }

  const auto ckpt = std::filesystem::temp_directory_path() / "chemprot_re.ckpt";
  model.Save(ckpt);
  const RelationModel loaded = RelationModel::Load(ckpt);
  const auto again = PredictRelations(loaded, docs, GoldMentions(docs));
  REQUIRE(again.size() == predictions.size());
  for (std::size_t i = 0; i < again.size(); ++i) CHECK(again[i].probability == predictions[i].probability);
}
