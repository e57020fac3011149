// Command-line front end: corpus statistics, training, prediction, scoring
// and error analysis.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "chemprot/alignment.h"
#include "chemprot/analysis.h"
#include "chemprot/config.h"
#include "chemprot/corpus.h"
#include "chemprot/eval.h"
#include "chemprot/ner.h"
#include "chemprot/relation.h"
#include "chemprot/synthetic.h"
#include "chemprot/tokenizer.h"

namespace {

using namespace chemprot;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

PipelineConfig LoadConfig(const Common &common) {
  PipelineConfig config =
      common.config_path.empty() ? PipelineConfig{} : LoadPipelineConfig(common.config_path);
  if (common.seed) config.encoder.seed = *common.seed;
  return config;
}

struct Loaded {
  Corpus corpus;
  std::vector<PreparedDocument> docs;
};

// Loads into `out` in place: prepared documents point into the corpus.
void Load(const std::string &dir, const PipelineConfig &config, Loaded *out) {
  out->corpus = LoadCorpusDir(dir, config.load);
  for (const std::string &d : out->corpus.diagnostics) std::cerr << "note: " << d << '\n';
  out->docs = PrepareCorpus(out->corpus, RuleSegmenter());
}

void PrintLosses(const TrainResult &result) {
  for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
    std::cerr << "epoch " << e + 1 << " loss " << result.epoch_losses[e] << '\n';
  }
}

void AddCommon(CLI::App *cmd, Common *common) {
  cmd->add_option("--config", common->config_path, "pipeline config JSON")->check(CLI::ExistingFile);
  cmd->add_option("--seed", common->seed, "encoder and training seed");
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Chemical-protein relation extraction pipeline"};
  app.require_subcommand(1);

  // tokenize
  std::string text;
  auto *tokenize = app.add_subcommand("tokenize", "print tokens and code-point offsets");
  tokenize->add_option("text", text, "text to tokenize (stdin when omitted)");

  // align-stats
  std::string corpus_dir;
  std::string out_path;
  auto *align = app.add_subcommand("align-stats", "tokenization and segmentation losses");
  align->add_option("--corpus", corpus_dir, "corpus directory")->required()->check(CLI::ExistingDirectory);
  align->add_option("--out", out_path, "write the loss report here");
  Common align_common;
  AddCommon(align, &align_common);

  // train-ner
  Common ner_common;
  std::optional<int> epochs;
  auto *train_ner = app.add_subcommand("train-ner", "train the span classifier");
  train_ner->add_option("--corpus", corpus_dir)->required()->check(CLI::ExistingDirectory);
  train_ner->add_option("--out", out_path, "checkpoint path")->required();
  train_ner->add_option("--epochs", epochs);
  AddCommon(train_ner, &ner_common);

  // predict-ner
  std::string model_path;
  auto *predict_ner = app.add_subcommand("predict-ner", "predict entities");
  predict_ner->add_option("--corpus", corpus_dir)->required()->check(CLI::ExistingDirectory);
  predict_ner->add_option("--model,--ckpt", model_path)->required()->check(CLI::ExistingFile);
  predict_ner->add_option("--out", out_path)->required();

  // train-re
  Common re_common;
  std::string variant_name;
  auto *train_re = app.add_subcommand("train-re", "train the relation classifier on gold entities");
  train_re->add_option("--corpus", corpus_dir)->required()->check(CLI::ExistingDirectory);
  train_re->add_option("--out", out_path, "checkpoint path")->required();
  train_re->add_option("--epochs", epochs);
  train_re->add_option("--variant", variant_name, "A..F, overrides the config");
  std::string encoder_from;
  train_re->add_option("--encoder-from", encoder_from,
                       "start from the encoder of this entity-model checkpoint")
      ->check(CLI::ExistingFile);
  AddCommon(train_re, &re_common);

  // predict-re
  std::string entities_path;
  auto *predict_re = app.add_subcommand("predict-re", "classify pairs of given entities");
  predict_re->add_option("--corpus", corpus_dir)->required()->check(CLI::ExistingDirectory);
  predict_re->add_option("--model,--ckpt", model_path)->required()->check(CLI::ExistingFile);
  predict_re->add_option("--entities", entities_path, "entity predictions (gold when omitted)")
      ->check(CLI::ExistingFile);
  predict_re->add_option("--out", out_path)->required();

  // predict-e2e
  std::string ner_model;
  std::string re_model;
  std::string out_entities;
  std::string out_relations;
  auto *e2e = app.add_subcommand("predict-e2e", "entities, then relations over them");
  e2e->add_option("--corpus", corpus_dir)->required()->check(CLI::ExistingDirectory);
  e2e->add_option("--ner-model", ner_model)->required()->check(CLI::ExistingFile);
  e2e->add_option("--re-model", re_model)->required()->check(CLI::ExistingFile);
  e2e->add_option("--out-ents", out_entities)->required();
  e2e->add_option("--out-rels", out_relations)->required();

  // score
  std::string gold_dir;
  std::string pred_path;
  std::string task = "re";
  std::string loss_report;
  std::string json_path;
  auto *score = app.add_subcommand("score", "strict micro P/R/F1");
  score->add_option("--gold", gold_dir)->required()->check(CLI::ExistingDirectory);
  score->add_option("--pred", pred_path)->required()->check(CLI::ExistingFile);
  score->add_option("--task", task)->check(CLI::IsMember({"ner", "re"}));
  score->add_option("--loss-report", loss_report,
                    "lost items are added to the gold set (already there when scoring "
                    "against the full corpus)")
      ->check(CLI::ExistingFile);
  score->add_option("--json", json_path, "also write the machine-readable record here");

  // analyze
  std::string pred_ents;
  std::string pred_rels;
  std::string out_dir;
  auto *analyze = app.add_subcommand("analyze", "relation error breakdown");
  analyze->add_option("--gold", gold_dir)->required()->check(CLI::ExistingDirectory);
  analyze->add_option("--pred-ents", pred_ents)->required()->check(CLI::ExistingFile);
  analyze->add_option("--pred-rels", pred_rels)->required()->check(CLI::ExistingFile);
  analyze->add_option("--out", out_dir)->required();

  // make-micro-corpus
  MicroCorpusOptions micro;
  auto *make_micro = app.add_subcommand("make-micro-corpus", "write the synthetic corpus");
  make_micro->add_option("--out", out_dir)->required();
  make_micro->add_option("--seed", micro.seed);
  make_micro->add_option("--documents", micro.documents);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*tokenize) {
      if (text.empty()) {
        std::string line;
        while (std::getline(std::cin, line)) text += line + "\n";
      }
      for (const Token &t : Tokenize(text)) {
        std::cout << t.index << '\t' << t.char_start << '\t' << t.char_end << '\t' << t.surface
                  << '\n';
      }
    } else if (*align) {
      const auto start = std::chrono::steady_clock::now();
      Loaded data;
      Load(corpus_dir, LoadConfig(align_common), &data);
      const LossReport report = ComputeLossReport(data.docs);
      std::cout << "documents\t" << data.docs.size() << '\n'
                << "entities_total\t" << report.entities_total << '\n'
                << "entities_lost\t" << report.entities_lost << '\n'
                << "entities_lost_percent\t" << 100.0 * report.entity_loss_rate() << '\n'
                << "relations_total\t" << report.relations_total << '\n'
                << "relations_lost\t" << report.relations_lost << '\n'
                << "relations_lost_percent\t" << 100.0 * report.relation_loss_rate() << '\n';
      if (!out_path.empty()) WriteLossReport(report, out_path);
      const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
      std::cerr << "took " << took.count() << " s\n";
    } else if (*train_ner) {
      PipelineConfig config = LoadConfig(ner_common);
      if (epochs) config.ner.train.epochs = *epochs;
      Loaded data;
      Load(corpus_dir, config, &data);
      NerExampleStats stats;
      const auto examples = BuildNerExamples(data.docs, config.ner, config.encoder.max_len, &stats);
      std::cerr << examples.size() << " sentences, " << stats.positives << " entity spans, "
                << stats.too_long << " too long, " << stats.conflicting << " type conflicts\n";
      NerModel model = NerModel::Create(config.ner, config.encoder);
      PrintLosses(TrainNer(&model, examples, config.ner.train, config.encoder.seed));
      model.Save(out_path);
    } else if (*predict_ner) {
      const NerModel model = NerModel::Load(model_path);
      Loaded data;
      Load(corpus_dir, PipelineConfig{}, &data);
      WriteEntityPredictions(PredictEntities(model, data.docs), out_path);
    } else if (*train_re) {
      PipelineConfig config = LoadConfig(re_common);
      if (epochs) config.relation.train.epochs = *epochs;
      if (!variant_name.empty()) config.relation.variant = ParseVariant(variant_name);
      Loaded data;
      Load(corpus_dir, config, &data);
      std::optional<RelationModel> model;
      int max_len = config.encoder.max_len;
      if (!encoder_from.empty()) {
        const NerModel ner = NerModel::Load(encoder_from);
        max_len = ner.encoder().max_len();
        model.emplace(config.relation, ner.encoder().Clone(), config.encoder.seed);
      } else {
        model.emplace(RelationModel::Create(config.relation, config.encoder));
      }
      const auto examples = BuildRelationExamples(data.docs, config.relation, max_len);
      std::cerr << examples.size() << " candidate pairs\n";
      if (examples.empty()) std::cerr << "warning: no candidate pairs; the model stays untrained\n";
      PrintLosses(TrainRelation(&*model, examples, config.relation.train, config.encoder.seed));
      model->Save(out_path);
    } else if (*predict_re) {
      const RelationModel model = RelationModel::Load(model_path);
      Loaded data;
      Load(corpus_dir, PipelineConfig{}, &data);
      const DocumentMentions mentions =
          entities_path.empty()
              ? GoldMentions(data.docs)
              : MentionsFromPredictions(data.docs, ReadEntityPredictions(entities_path, data.docs));
      WriteRelationPredictions(PredictRelations(model, data.docs, mentions), out_path);
    } else if (*e2e) {
      const NerModel ner = NerModel::Load(ner_model);
      const RelationModel re = RelationModel::Load(re_model);
      Loaded data;
      Load(corpus_dir, PipelineConfig{}, &data);
      const EndToEndResult result = PredictEndToEnd(ner, re, data.docs);
      WriteEntityPredictions(result.entities, out_entities);
      WriteRelationPredictions(result.relations, out_relations);
    } else if (*score) {
      Loaded data;
      Load(gold_dir, PipelineConfig{}, &data);
      std::optional<LossReport> loss;
      if (!loss_report.empty()) loss = ReadLossReport(loss_report);
      const LossReport *loss_ptr = loss ? &*loss : nullptr;
      const ScoreReport report =
          task == "ner"
              ? ScoreNer(GoldEntityKeys(data.corpus),
                         PredictedEntityKeys(ReadEntityPredictions(pred_path, data.docs)), loss_ptr)
              : ScoreRe(GoldRelationKeys(data.corpus),
                        PredictedRelationKeys(ReadRelationPredictions(pred_path)), loss_ptr);
      std::cout << RenderTable(report);
      if (!json_path.empty()) {
        std::ofstream(json_path) << ToJson(report).dump(2) << '\n';
      } else {
        std::cout << ToJson(report).dump() << '\n';
      }
    } else if (*analyze) {
      Loaded data;
      Load(gold_dir, PipelineConfig{}, &data);
      std::set<std::string> documents;
      for (const Document &d : data.corpus.documents) documents.insert(d.id());
      const ErrorBreakdown breakdown = Analyze(
          documents, GoldEntityKeys(data.corpus), GoldRelationKeys(data.corpus),
          PredictedEntityKeys(ReadEntityPredictions(pred_ents, data.docs)),
          PredictedRelationKeys(ReadRelationPredictions(pred_rels)));
      WriteAnalysis(breakdown, out_dir);
      std::cout << RenderReport(breakdown);
    } else if (*make_micro) {
      SaveCorpus(MakeMicroCorpus(micro), out_dir);
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
