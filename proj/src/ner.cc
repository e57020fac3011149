#include "chemprot/ner.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "chemprot/checkpoint.h"

namespace chemprot {

std::vector<SpanCandidate> EnumerateSpans(int n_tokens, int max_width, int sent_id) {
  std::vector<SpanCandidate> out;
  if (n_tokens <= 0 || max_width <= 0) return out;
  out.reserve(static_cast<std::size_t>(CountSpans(n_tokens, max_width)));
  for (int start = 0; start < n_tokens; ++start) {
    for (int w = 1; w <= max_width && start + w <= n_tokens; ++w) {
      out.push_back({sent_id, start, start + w - 1});
    }
  }
  return out;
}

long CountSpans(int n_tokens, int max_width) {
  long total = 0;
  for (int w = 1; w <= std::min(max_width, n_tokens); ++w) total += n_tokens - w + 1;
  return total;
}

NerInput BuildNerInput(std::span<const Symbol> sentence, std::span<const Symbol> left_supply,
                       std::span<const Symbol> right_supply, int window, int max_len) {
  NerInput input;
  const int n = static_cast<int>(sentence.size());
  input.context = FitContext(n, static_cast<int>(left_supply.size()),
                             static_cast<int>(right_supply.size()), window, max_len);
  input.symbols.reserve(n + input.context.left + input.context.right);
  input.symbols.insert(input.symbols.end(), left_supply.end() - input.context.left,
                       left_supply.end());
  input.symbols.insert(input.symbols.end(), sentence.begin(), sentence.end());
  input.symbols.insert(input.symbols.end(), right_supply.begin(),
                       right_supply.begin() + input.context.right);
  input.sentence_offset = input.context.left;
  input.sentence_length = n;
  return input;
}

SpanLabel ToSpanLabel(EntityType type) {
  return type == EntityType::kChemical ? SpanLabel::kChemical : SpanLabel::kGene;
}

std::optional<EntityType> ToEntityType(SpanLabel label) {
  switch (label) {
    case SpanLabel::kChemical: return EntityType::kChemical;
    case SpanLabel::kGene: return EntityType::kGene;
    case SpanLabel::kNull: return std::nullopt;
  }
  return std::nullopt;
}

NerModel::NerModel(const NerConfig &config, std::unique_ptr<Encoder> encoder, std::uint64_t seed)
    : config_(config),
      encoder_(std::move(encoder)),
      seed_(seed),
      width_embeddings_("ner.width_embeddings", config.max_span_len, config.width_dim),
      head_("ner.head", 2 * encoder_->dim() + config.width_dim, kNumSpanLabels) {
  Rng rng(seed ^ 0x6e65725f68656164ULL);
  width_embeddings_.InitNormal(rng, 0.5);
  head_.Init(rng);
}

NerModel NerModel::Create(const NerConfig &config, const EncoderConfig &encoder) {
  return NerModel(config, std::make_unique<TinyEncoder>(encoder), encoder.seed);
}

NerModel::NerModel(const NerModel &other)
    : config_(other.config_),
      encoder_(other.encoder_->Clone()),
      seed_(other.seed_),
      width_embeddings_(other.width_embeddings_),
      head_(other.head_) {}

NerModel &NerModel::operator=(const NerModel &other) {
  if (this != &other) *this = NerModel(other);
  return *this;
}

int NerModel::span_dim() const { return 2 * encoder_->dim() + config_.width_dim; }

Matrix NerModel::SpanRepresentations(const Matrix &encoded, const NerInput &input,
                                     std::span<const SpanCandidate> candidates) const {
  const int d = encoder_->dim();
  Matrix reps(static_cast<Eigen::Index>(candidates.size()), span_dim());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const SpanCandidate &c = candidates[i];
    const auto row = static_cast<Eigen::Index>(i);
    reps.row(row).segment(0, d) = encoded.row(input.sentence_offset + c.token_start);
    reps.row(row).segment(d, d) = encoded.row(input.sentence_offset + c.token_end);
    reps.row(row).segment(2 * d, config_.width_dim) = width_embeddings_.value.row(c.width() - 1);
  }
  return reps;
}

Matrix NerModel::SpanProbabilities(const NerInput &input,
                                   std::span<const SpanCandidate> candidates) const {
  if (candidates.empty()) return Matrix(0, kNumSpanLabels);
  const Encoding enc = encoder_->Encode(input.symbols, false);
  return SoftmaxRows(head_.Forward(SpanRepresentations(enc.output, input, candidates)));
}

double NerModel::LossAndGradient(const NerExample &example, double scale) {
  if (example.candidates.empty()) return 0.0;
  const Encoding enc = encoder_->Encode(example.input.symbols, true);
  const Matrix reps = SpanRepresentations(enc.output, example.input, example.candidates);
  const Matrix probs = SoftmaxRows(head_.Forward(reps));
  Matrix dlogits;
  const double loss = CrossEntropy(probs, example.labels, scale, &dlogits);
  const Matrix dreps = head_.Backward(reps, dlogits);

  const int d = encoder_->dim();
  Matrix dencoded = Matrix::Zero(enc.output.rows(), d);
  for (std::size_t i = 0; i < example.candidates.size(); ++i) {
    const SpanCandidate &c = example.candidates[i];
    const auto row = static_cast<Eigen::Index>(i);
    dencoded.row(example.input.sentence_offset + c.token_start) += dreps.row(row).segment(0, d);
    dencoded.row(example.input.sentence_offset + c.token_end) += dreps.row(row).segment(d, d);
    width_embeddings_.grad.row(c.width() - 1) += dreps.row(row).segment(2 * d, config_.width_dim);
  }
  encoder_->Backward(*enc.cache, dencoded);
  return loss;
}

std::vector<Param *> NerModel::params() {
  std::vector<Param *> out = encoder_->params();
  out.push_back(&width_embeddings_);
  head_.Collect(&out);
  return out;
}

void NerModel::Save(const std::filesystem::path &path) const {
  const auto *tiny = dynamic_cast<const TinyEncoder *>(encoder_.get());
  if (tiny == nullptr) throw Error("only the built-in encoder can be checkpointed");
  Checkpoint ckpt;
  ckpt.dim = static_cast<std::uint32_t>(tiny->config().dim);
  ckpt.blocks = static_cast<std::uint32_t>(tiny->config().blocks);
  ckpt.seed = seed_;
  ckpt.kind = ModelKind::kNer;
  ckpt.config_json = nlohmann::json{{"encoder", ToJson(tiny->config())}, {"ner", ToJson(config_)}}.dump();
  ckpt.AddParams(const_cast<NerModel *>(this)->params());
  WriteCheckpoint(ckpt, path);
}

NerModel NerModel::Load(const std::filesystem::path &path) {
  const Checkpoint ckpt = ReadCheckpoint(path);
  if (ckpt.kind != ModelKind::kNer) throw Error(path.string() + " is not an entity model");
  const auto j = nlohmann::json::parse(ckpt.config_json);
  EncoderConfig enc;
  NerConfig ner;
  FromJson(j.at("encoder"), &enc);
  FromJson(j.at("ner"), &ner);
  NerModel model(ner, std::make_unique<TinyEncoder>(enc), ckpt.seed);
  ckpt.RestoreParams(model.params());
  return model;
}

std::vector<ClassifiedSpan> ClassifySpans(const NerModel &model, const NerInput &input,
                                          std::span<const SpanCandidate> candidates) {
  const Matrix probs = model.SpanProbabilities(input, candidates);
  std::vector<ClassifiedSpan> out;
  out.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const int best = ArgMax(probs.row(static_cast<Eigen::Index>(i)));
    out.push_back({candidates[i], static_cast<SpanLabel>(best),
                   probs(static_cast<Eigen::Index>(i), best)});
  }
  return out;
}

std::vector<NerExample> BuildNerExamples(std::span<const PreparedDocument> docs,
                                         const NerConfig &config, int max_len,
                                         NerExampleStats *stats) {
  NerExampleStats local;
  std::vector<NerExample> out;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const PreparedDocument &doc = docs[d];
    for (const Sentence &s : doc.sentences) {
      NerExample ex;
      ex.doc = d;
      ex.sent_id = s.sent_id;
      const ContextSupply supply = GatherContext(doc, s.sent_id);
      const std::vector<Symbol> sentence = SentenceSymbols(doc, s.sent_id);
      ex.input = BuildNerInput(sentence, supply.left, supply.right, config.context_window, max_len);
      ex.candidates = EnumerateSpans(ex.input.sentence_length, config.max_span_len, s.sent_id);
      ex.labels.assign(ex.candidates.size(), static_cast<int>(SpanLabel::kNull));

      for (const AlignedEntity &e : doc.entities) {
        if (!e.recoverable || e.sent_id != s.sent_id) continue;
        const int width = e.token_end - e.token_start + 1;
        if (width > config.max_span_len) {
          ++local.too_long;
          continue;
        }
        // Index of (start, width) in the (start, width) ordering.
        std::size_t index = static_cast<std::size_t>(
            CountSpans(ex.input.sentence_length, config.max_span_len) -
            CountSpans(ex.input.sentence_length - e.token_start, config.max_span_len) + width - 1);
        int &label = ex.labels[index];
        if (label != static_cast<int>(SpanLabel::kNull)) {
          if (label != static_cast<int>(ToSpanLabel(e.etype))) ++local.conflicting;
          continue;
        }
        label = static_cast<int>(ToSpanLabel(e.etype));
        ++local.positives;
      }
      out.push_back(std::move(ex));
    }
  }
  if (stats != nullptr) *stats = local;
  return out;
}

TrainResult TrainNer(NerModel *model, std::span<const NerExample> examples,
                     const TrainOptions &options, std::uint64_t seed) {
  auto params = model->params();
  return RunTraining(
      examples.size(), options, seed, params,
      [&](std::size_t i) { return static_cast<int>(examples[i].candidates.size()); },
      [&](std::size_t i, double scale) { return model->LossAndGradient(examples[i], scale); },
      "entity model");
}

std::vector<EntityPrediction> PredictEntities(const NerModel &model,
                                              std::span<const PreparedDocument> docs) {
  std::vector<EntityPrediction> out;
  const int max_len = model.encoder().max_len();
  for (const PreparedDocument &doc : docs) {
    for (const Sentence &s : doc.sentences) {
      const ContextSupply supply = GatherContext(doc, s.sent_id);
      const std::vector<Symbol> sentence = SentenceSymbols(doc, s.sent_id);
      const NerInput input = BuildNerInput(sentence, supply.left, supply.right,
                                           model.config().context_window, max_len);
      const auto candidates =
          EnumerateSpans(input.sentence_length, model.config().max_span_len, s.sent_id);
      const auto &tokens = doc.tokens[s.sent_id];
      for (const ClassifiedSpan &c : ClassifySpans(model, input, candidates)) {
        auto type = ToEntityType(c.label);
        if (!type) continue;
        out.push_back({doc.doc->id(), s.sent_id, c.span.token_start, c.span.token_end, *type,
                       c.probability,
                       {tokens[c.span.token_start].char_start, tokens[c.span.token_end].char_end}});
      }
    }
  }
  return out;
}

void WriteEntityPredictions(std::span<const EntityPrediction> predictions,
                            const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(6) << std::fixed;
  for (const auto &p : predictions) {
    out << p.doc_id << '\t' << p.sent_id << '\t' << p.token_start << '\t' << p.token_end << '\t'
        << ToString(p.type) << '\t' << p.probability << '\n';
  }
}

std::vector<EntityPrediction> ReadEntityPredictions(const std::filesystem::path &path,
                                                    std::span<const PreparedDocument> docs) {
  std::map<std::string_view, const PreparedDocument *> by_id;
  for (const auto &d : docs) by_id.emplace(d.doc->id(), &d);
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<EntityPrediction> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    EntityPrediction p;
    std::string type;
    if (!(std::getline(fields, p.doc_id, '\t') && fields >> p.sent_id >> p.token_start >>
          p.token_end >> type >> p.probability)) {
      throw ParseError(path.string(), line_no, "record", "expected 6 tab-separated fields");
    }
    auto parsed = ParseEntityType(type);
    if (!parsed) throw ParseError(path.string(), line_no, "type", "unknown type " + type);
    p.type = *parsed;
    auto it = by_id.find(p.doc_id);
    if (it == by_id.end()) {
      throw ParseError(path.string(), line_no, "doc_id", "unknown document " + p.doc_id);
    }
    const PreparedDocument &doc = *it->second;
    if (p.sent_id < 0 || p.sent_id >= static_cast<int>(doc.tokens.size())) {
      throw ParseError(path.string(), line_no, "sent_id", "no such sentence");
    }
    const auto &tokens = doc.tokens[p.sent_id];
    if (p.token_start < 0 || p.token_end < p.token_start ||
        p.token_end >= static_cast<int>(tokens.size())) {
      throw ParseError(path.string(), line_no, "token_start/token_end", "span outside sentence");
    }
    p.chars = {tokens[p.token_start].char_start, tokens[p.token_end].char_end};
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace chemprot
