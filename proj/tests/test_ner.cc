#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "chemprot/ner.h"
#include "chemprot/synthetic.h"
#include "test_util.h"

using namespace chemprot;
using chemprot::testing::EntityAt;
using chemprot::testing::RunningExample;
using chemprot::testing::TinyEncoderConfig;

namespace {

std::vector<Symbol> Words(int n, const std::string &prefix = "w") {
  std::vector<Symbol> out;
  for (int i = 0; i < n; ++i) out.push_back(Symbol::Text(prefix + std::to_string(i)));
  return out;
}

NerConfig SmallNer() {
  NerConfig c;
  c.max_span_len = 12;
  c.width_dim = 5;
  c.context_window = 10;
  c.train = {60, 4, 1e-2, 1.0};
  return c;
}

std::vector<double> Flatten(NerModel &model) {
  std::vector<double> out;
  for (Param *p : model.params()) out.insert(out.end(), p->value.data(), p->value.data() + p->value.size());
  return out;
}

}  // namespace

TEST_CASE("span enumeration matches exhaustive listing") {
  for (int n = 0; n <= 30; ++n) {
    for (int L = 1; L <= 16; ++L) {
      std::vector<SpanCandidate> brute;
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
          if (j - i + 1 <= L) brute.push_back({0, i, j});
        }
      }
      const auto spans = EnumerateSpans(n, L);
      REQUIRE(spans == brute);
      REQUIRE(CountSpans(n, L) == static_cast<long>(brute.size()));
    }
  }
  CHECK(CountSpans(5, 16) == 15);
  CHECK(CountSpans(20, 16) == 200);
  CHECK(EnumerateSpans(0, 16).empty());
}

TEST_CASE("context split") {
  CHECK(SplitContext(195, 195, 300).left == 150);
  CHECK(SplitContext(195, 195, 300).right == 150);
  CHECK(SplitContext(0, 390, 300).right == 300);
  CHECK(SplitContext(10, 390, 300).left == 10);
  CHECK(SplitContext(10, 390, 300).right == 290);
  CHECK(SplitContext(390, 20, 300).left == 280);
  CHECK(SplitContext(390, 390, 301).left == 150);
  CHECK(SplitContext(390, 390, 301).right == 151);
  CHECK(SplitContext(3, 4, 300).left == 3);
  CHECK(SplitContext(3, 4, 300).right == 4);
}

TEST_CASE("ner input windows context around the sentence") {
  const auto sentence = Words(10, "s");
  const auto left = Words(195, "l");
  const auto right = Words(195, "r");
  const NerInput input = BuildNerInput(sentence, left, right, 300, 512);
  CHECK(input.symbols.size() == 310);
  CHECK(input.sentence_offset == 150);
  CHECK(input.symbols[150] == sentence[0]);
  CHECK(input.symbols[149] == left.back());
  CHECK(input.symbols[160] == right.front());

  const NerInput bare = BuildNerInput(sentence, left, right, 0, 512);
  CHECK(bare.symbols == sentence);

  // max_len shrinks the context, never the sentence.
  const NerInput tight = BuildNerInput(sentence, left, right, 300, 16);
  CHECK(tight.symbols.size() == 16);
  CHECK(tight.context.left == 3);
  CHECK(tight.context.right == 3);
  CHECK_THROWS_AS(BuildNerInput(sentence, left, right, 300, 9), ContractViolation);
}

TEST_CASE("examples label gold spans and skip over-long ones") {
  Corpus corpus;
  corpus.documents.push_back(RunningExample());
  Document &doc = corpus.documents[0];
  doc.entities.push_back(EntityAt(doc, "T5", EntityType::kGene, "Contribution of the Na+-K+-2Cl- cotransporter NKCC1"));
  const auto docs = PrepareCorpus(corpus, RuleSegmenter());
  NerExampleStats stats;
  const auto examples = BuildNerExamples(docs, SmallNer(), 64, &stats);
  REQUIRE(examples.size() == 2);
  CHECK(stats.positives == 4);
  CHECK(stats.too_long == 1);
  const NerExample &ex = examples[0];
  int positives = 0;
  for (std::size_t i = 0; i < ex.candidates.size(); ++i) {
    if (ex.labels[i] == static_cast<int>(SpanLabel::kNull)) continue;
    ++positives;
    const SpanCandidate &c = ex.candidates[i];
    if (c.token_start == 3 && c.token_end == 4) CHECK(ex.labels[i] == int(SpanLabel::kChemical));
    if (c.token_start == 3 && c.token_end == 12) CHECK(ex.labels[i] == int(SpanLabel::kGene));
  }
  CHECK(positives == 4);
  // Candidates come from the sentence only.
  CHECK(ex.candidates.back().token_end == ex.input.sentence_length - 1);
}

TEST_CASE("probabilities sum to one and untrained output is deterministic") {
  const NerModel a = NerModel::Create(SmallNer(), TinyEncoderConfig(4));
  const NerModel b = NerModel::Create(SmallNer(), TinyEncoderConfig(4));
  const auto sentence = Words(6);
  const NerInput input = BuildNerInput(sentence, {}, {}, 0, 64);
  const auto candidates = EnumerateSpans(6, 12);
  const Matrix p = a.SpanProbabilities(input, candidates);
  CHECK(p.rows() == static_cast<Eigen::Index>(candidates.size()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) CHECK(p.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(p == b.SpanProbabilities(input, candidates));
}

TEST_CASE("overfitting one sentence recovers nested entities") {
  Corpus corpus;
  corpus.documents.push_back(RunningExample());
  const auto docs = PrepareCorpus(corpus, RuleSegmenter());
  const auto examples = BuildNerExamples(docs, SmallNer(), 64);
  NerModel model = NerModel::Create(SmallNer(), TinyEncoderConfig(2));
  const TrainResult result = TrainNer(&model, examples, SmallNer().train, 2);
  CHECK(result.epoch_losses.back() < 0.1 * result.epoch_losses.front());

  const auto predicted = PredictEntities(model, docs);
  std::set<std::pair<CharSpan, EntityType>> got;
  for (const auto &p : predicted) got.insert({p.chars, p.type});
  for (const GoldEntity &e : corpus.documents[0].entities) {
    INFO(e.surface);
    CHECK(got.contains({e.span(), e.etype}));
  }
  CHECK(got.size() == corpus.documents[0].entities.size());
}

TEST_CASE("zero epochs leave the model unchanged; fixed seeds reproduce") {
  const Corpus corpus = MakeMicroCorpus({.documents = 2});
  const auto docs = PrepareCorpus(corpus, RuleSegmenter());
  const auto examples = BuildNerExamples(docs, SmallNer(), 64);
  NerModel base = NerModel::Create(SmallNer(), TinyEncoderConfig(9));
  NerModel untouched = base;
  TrainOptions none = SmallNer().train;
  none.epochs = 0;
  CHECK(TrainNer(&untouched, examples, none, 1).steps == 0);
  CHECK(Flatten(untouched) == Flatten(base));

  TrainOptions two = SmallNer().train;
  two.epochs = 2;
  NerModel a = base;
  NerModel b = base;
  TrainNer(&a, examples, two, 5);
  TrainNer(&b, examples, two, 5);
  CHECK(Flatten(a) == Flatten(b));
  CHECK(Flatten(a) != Flatten(base));
}

TEST_CASE("entity model gradients match finite differences") {
  Corpus corpus;
  corpus.documents.push_back(Document("d", "Na+ binds.", "X."));
  corpus.documents[0].entities.push_back(EntityAt(corpus.documents[0], "T1", EntityType::kChemical, "Na+"));
  const auto docs = PrepareCorpus(corpus, RuleSegmenter());
  NerConfig config = SmallNer();
  config.max_span_len = 3;
  config.context_window = 0;
  const auto examples = BuildNerExamples(docs, config, 64);
  REQUIRE(examples[0].input.symbols.size() == 4);
  EncoderConfig enc = TinyEncoderConfig(3);
  enc.buckets = 16;
  enc.dim = 8;
  NerModel model = NerModel::Create(config, enc);
  auto params = model.params();
  const NerExample &ex = examples[0];
  auto loss = [&](bool backprop) { return model.LossAndGradient(ex, backprop ? 1.0 : 0.0); };
  const GradCheckResult r = GradCheck(params, loss, 1e-4);
  INFO(r.worst_param << " " << r.max_rel_error);
  CHECK(r.max_rel_error < 1e-3);
}

TEST_CASE("checkpoint and prediction file round trips") {
  const Corpus corpus = MakeMicroCorpus({.documents = 1});
  const auto docs = PrepareCorpus(corpus, RuleSegmenter());
  const NerModel model = NerModel::Create(SmallNer(), TinyEncoderConfig(6));
  const auto dir = std::filesystem::temp_directory_path();
  model.Save(dir / "chemprot_ner.ckpt");
  const NerModel loaded = NerModel::Load(dir / "chemprot_ner.ckpt");
  const auto a = PredictEntities(model, docs);
  const auto b = PredictEntities(loaded, docs);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].probability == b[i].probability);

  WriteEntityPredictions(a, dir / "chemprot_ents.tsv");
  const auto back = ReadEntityPredictions(dir / "chemprot_ents.tsv", docs);
  REQUIRE(back.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(back[i].chars == a[i].chars);
    CHECK(back[i].type == a[i].type);
  }
}
