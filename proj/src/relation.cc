#include "chemprot/relation.h"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "chemprot/checkpoint.h"

namespace chemprot {

std::vector<MentionPair> GeneratePairs(std::span<const SpanMention> mentions) {
  std::vector<MentionPair> pairs;
  for (const SpanMention &s : mentions) {
    if (s.type != EntityType::kChemical) continue;
    for (const SpanMention &o : mentions) {
      if (o.type == EntityType::kGene) pairs.emplace_back(s, o);
    }
  }
  auto key = [](const MentionPair &p) {
    return std::tuple(p.first.token_start, p.second.token_start, p.first.token_end,
                      p.second.token_end);
  };
  std::stable_sort(pairs.begin(), pairs.end(),
                   [&](const MentionPair &a, const MentionPair &b) { return key(a) < key(b); });
  return pairs;
}

MarkedSequence InsertMarkers(std::span<const Symbol> sentence, const SpanMention &subject,
                             const SpanMention &object) {
  const int n = static_cast<int>(sentence.size());
  for (const SpanMention *m : {&subject, &object}) {
    if (m->token_start < 0 || m->token_end < m->token_start || m->token_end >= n) {
      throw ContractViolation("entity span [" + std::to_string(m->token_start) + "," +
                              std::to_string(m->token_end) + "] outside sentence of " +
                              std::to_string(n) + " tokens");
    }
  }

  struct Bracket {
    const SpanMention *span;
    int role;  // 0 subject, 1 object
    Special open;
    Special close;
  };
  const Bracket brackets[2] = {{&subject, 0, Special::kSubjectStart, Special::kSubjectEnd},
                               {&object, 1, Special::kObjectStart, Special::kObjectEnd}};
  // Opening order: earlier start, then later end, then subject. Closing order
  // is the reverse of the opening order.
  auto opens_before = [](const Bracket &a, const Bracket &b) {
    if (a.span->token_start != b.span->token_start) return a.span->token_start < b.span->token_start;
    if (a.span->token_end != b.span->token_end) return a.span->token_end > b.span->token_end;
    return a.role < b.role;
  };
  const bool subject_first = opens_before(brackets[0], brackets[1]);
  const Bracket &first = brackets[subject_first ? 0 : 1];
  const Bracket &second = brackets[subject_first ? 1 : 0];

  MarkedSequence out;
  out.symbols.reserve(n + 4);
  out.token_positions.reserve(n);
  auto emit_marker = [&](const Bracket &b, bool opening) {
    const int slot = (b.role == 0 ? 0 : 2) + (opening ? 0 : 1);
    out.markers[slot] = static_cast<int>(out.symbols.size());
    out.symbols.push_back(Symbol::Marker(opening ? b.open : b.close));
  };
  for (int p = 0; p < n; ++p) {
    for (const Bracket *b : {&first, &second}) {
      if (b->span->token_start == p) emit_marker(*b, true);
    }
    out.token_positions.push_back(static_cast<int>(out.symbols.size()));
    out.symbols.push_back(sentence[p]);
    for (const Bracket *b : {&second, &first}) {
      if (b->span->token_end == p) emit_marker(*b, false);
    }
  }
  return out;
}

std::vector<Symbol> RemoveMarkers(std::span<const Symbol> symbols) {
  std::vector<Symbol> out;
  out.reserve(symbols.size());
  for (const Symbol &s : symbols) {
    if (!s.is_marker()) out.push_back(s);
  }
  return out;
}

RelationInstance BuildRelationInstance(std::string doc_id, std::span<const Symbol> sentence,
                                       const ContextSupply &supply, const SpanMention &subject,
                                       const SpanMention &object, int window, int max_len) {
  RelationInstance inst;
  inst.doc_id = std::move(doc_id);
  inst.sent_id = subject.sent_id;
  inst.subject = subject;
  inst.object = object;
  inst.marked = InsertMarkers(sentence, subject, object);
  const int core = 1 + static_cast<int>(inst.marked.symbols.size());
  inst.context = FitContext(core, static_cast<int>(supply.left.size()),
                            static_cast<int>(supply.right.size()), window, max_len);

  inst.symbols.reserve(core + inst.context.left + inst.context.right);
  inst.symbols.push_back(Symbol::Marker(Special::kCls));
  inst.symbols.insert(inst.symbols.end(), supply.left.end() - inst.context.left, supply.left.end());
  inst.symbols.insert(inst.symbols.end(), inst.marked.symbols.begin(), inst.marked.symbols.end());
  inst.symbols.insert(inst.symbols.end(), supply.right.begin(),
                      supply.right.begin() + inst.context.right);

  const int offset = 1 + inst.context.left;
  RepresentationPositions &pos = inst.positions;
  pos.cls = 0;
  pos.subject_start = offset + inst.marked.markers[0];
  pos.subject_end = offset + inst.marked.markers[1];
  pos.object_start = offset + inst.marked.markers[2];
  pos.object_end = offset + inst.marked.markers[3];
  int lo = -1;
  int hi = -1;
  if (subject.token_end < object.token_start) {
    lo = subject.token_end;
    hi = object.token_start;
  } else if (object.token_end < subject.token_start) {
    lo = object.token_end;
    hi = subject.token_start;
  }
  for (int t = lo + 1; lo >= 0 && t < hi; ++t) {
    pos.middle.push_back(offset + inst.marked.token_positions[t]);
  }
  return inst;
}

namespace {

enum class Part { kCls, kSubject, kSubjectEnd, kMiddle, kObject, kObjectEnd };

std::vector<Part> Layout(Variant variant) {
  switch (variant) {
    case Variant::kA: return {Part::kSubject, Part::kObject};
    case Variant::kB: return {Part::kCls, Part::kSubject, Part::kObject};
    case Variant::kC: return {Part::kSubject, Part::kMiddle, Part::kObject};
    case Variant::kD: return {Part::kCls, Part::kSubject, Part::kMiddle, Part::kObject};
    case Variant::kE:
      return {Part::kSubject, Part::kSubjectEnd, Part::kMiddle, Part::kObject, Part::kObjectEnd};
    case Variant::kF:
      return {Part::kCls, Part::kSubject, Part::kSubjectEnd, Part::kMiddle, Part::kObject,
              Part::kObjectEnd};
  }
  throw Error("unknown relation representation variant");
}

int PositionOf(Part part, const RepresentationPositions &pos) {
  switch (part) {
    case Part::kCls: return pos.cls;
    case Part::kSubject: return pos.subject_start;
    case Part::kSubjectEnd: return pos.subject_end;
    case Part::kObject: return pos.object_start;
    case Part::kObjectEnd: return pos.object_end;
    case Part::kMiddle: break;
  }
  return -1;
}

}  // namespace

int RepresentationDim(Variant variant, int dim) {
  return static_cast<int>(Layout(variant).size()) * dim;
}

RowVector BuildRepresentation(const Matrix &encoded, const RepresentationPositions &positions,
                              Variant variant) {
  const auto d = encoded.cols();
  const std::vector<Part> layout = Layout(variant);
  RowVector rep(static_cast<Eigen::Index>(layout.size()) * d);
  for (std::size_t b = 0; b < layout.size(); ++b) {
    auto block = rep.segment(static_cast<Eigen::Index>(b) * d, d);
    if (layout[b] == Part::kMiddle) {
      block.setZero();
      for (int p : positions.middle) block += encoded.row(p);
      if (!positions.middle.empty()) block /= static_cast<double>(positions.middle.size());
    } else {
      block = encoded.row(PositionOf(layout[b], positions));
    }
  }
  return rep;
}

void BuildRepresentationBackward(const RowVector &d_rep, const RepresentationPositions &positions,
                                 Variant variant, Matrix *d_encoded) {
  const auto d = d_encoded->cols();
  const std::vector<Part> layout = Layout(variant);
  for (std::size_t b = 0; b < layout.size(); ++b) {
    const auto block = d_rep.segment(static_cast<Eigen::Index>(b) * d, d);
    if (layout[b] == Part::kMiddle) {
      if (positions.middle.empty()) continue;
      const double w = 1.0 / static_cast<double>(positions.middle.size());
      for (int p : positions.middle) d_encoded->row(p) += w * block;
    } else {
      d_encoded->row(PositionOf(layout[b], positions)) += block;
    }
  }
}

RelationHead::RelationHead(int input_dim, int hidden_dim, std::uint64_t seed)
    : input_dim_(input_dim),
      layer1_("relation.head.layer1", input_dim, hidden_dim),
      layer2_("relation.head.layer2", hidden_dim, hidden_dim),
      output_("relation.head.output", hidden_dim, kNumRelationLabels) {
  Rng rng(seed ^ 0x72656c5f68656164ULL);
  layer1_.Init(rng);
  layer2_.Init(rng);
  output_.Init(rng);
}

void RelationHead::CheckDim(const RowVector &rep) const {
  if (rep.size() != input_dim_) {
    throw ContractViolation("relation representation has " + std::to_string(rep.size()) +
                            " dims, head expects " + std::to_string(input_dim_));
  }
}

RowVector RelationHead::Probabilities(const RowVector &rep) const {
  CheckDim(rep);
  const Matrix x = rep;
  const Matrix h1 = layer1_.Forward(x).cwiseMax(0.0);
  const Matrix h2 = layer2_.Forward(h1).cwiseMax(0.0);
  return SoftmaxRows(output_.Forward(h2)).row(0);
}

double RelationHead::LossAndGradient(const RowVector &rep, RelationLabel target, double scale,
                                     RowVector *d_rep) {
  CheckDim(rep);
  const Matrix x = rep;
  const Matrix z1 = layer1_.Forward(x);
  const Matrix h1 = z1.cwiseMax(0.0);
  const Matrix z2 = layer2_.Forward(h1);
  const Matrix h2 = z2.cwiseMax(0.0);
  const Matrix probs = SoftmaxRows(output_.Forward(h2));
  const int t = static_cast<int>(target);
  Matrix dlogits;
  const double loss = CrossEntropy(probs, std::span<const int>(&t, 1), scale, &dlogits);
  Matrix dh2 = output_.Backward(h2, dlogits);
  Matrix dz2 = dh2.array() * (z2.array() > 0.0).cast<double>();
  Matrix dh1 = layer2_.Backward(h1, dz2);
  Matrix dz1 = dh1.array() * (z1.array() > 0.0).cast<double>();
  Matrix dx = layer1_.Backward(x, dz1);
  if (d_rep != nullptr) *d_rep = dx.row(0);
  return loss;
}

std::vector<Param *> RelationHead::params() {
  std::vector<Param *> out;
  layer1_.Collect(&out);
  layer2_.Collect(&out);
  output_.Collect(&out);
  return out;
}

RelationDecision ClassifyRelation(const RelationHead &head, const RowVector &rep) {
  const RowVector probs = head.Probabilities(rep);
  const int best = ArgMax(probs);
  return {static_cast<RelationLabel>(best), probs(best)};
}

RelationModel::RelationModel(const RelationConfig &config, std::unique_ptr<Encoder> encoder,
                             std::uint64_t seed)
    : config_(config),
      encoder_(std::move(encoder)),
      seed_(seed),
      head_(RepresentationDim(config.variant, encoder_->dim()),
            config.hidden_dim > 0 ? config.hidden_dim : encoder_->dim(), seed) {}

RelationModel RelationModel::Create(const RelationConfig &config, const EncoderConfig &encoder) {
  return RelationModel(config, std::make_unique<TinyEncoder>(encoder), encoder.seed);
}

RelationModel::RelationModel(const RelationModel &other)
    : config_(other.config_),
      encoder_(other.encoder_->Clone()),
      seed_(other.seed_),
      head_(other.head_) {}

RelationModel &RelationModel::operator=(const RelationModel &other) {
  if (this != &other) *this = RelationModel(other);
  return *this;
}

RowVector RelationModel::Representation(const RelationInstance &instance) const {
  const Encoding enc = encoder_->Encode(instance.symbols, false);
  return BuildRepresentation(enc.output, instance.positions, config_.variant);
}

RelationDecision RelationModel::Classify(const RelationInstance &instance) const {
  return ClassifyRelation(head_, Representation(instance));
}

double RelationModel::LossAndGradient(const RelationInstance &instance, RelationLabel target,
                                      double scale) {
  const Encoding enc = encoder_->Encode(instance.symbols, true);
  const RowVector rep = BuildRepresentation(enc.output, instance.positions, config_.variant);
  RowVector d_rep;
  const double loss = head_.LossAndGradient(rep, target, scale, &d_rep);
  Matrix d_encoded = Matrix::Zero(enc.output.rows(), enc.output.cols());
  BuildRepresentationBackward(d_rep, instance.positions, config_.variant, &d_encoded);
  encoder_->Backward(*enc.cache, d_encoded);
  return loss;
}

std::vector<Param *> RelationModel::params() {
  std::vector<Param *> out = encoder_->params();
  for (Param *p : head_.params()) out.push_back(p);
  return out;
}

void RelationModel::Save(const std::filesystem::path &path) const {
  const auto *tiny = dynamic_cast<const TinyEncoder *>(encoder_.get());
  if (tiny == nullptr) throw Error("only the built-in encoder can be checkpointed");
  Checkpoint ckpt;
  ckpt.dim = static_cast<std::uint32_t>(tiny->config().dim);
  ckpt.blocks = static_cast<std::uint32_t>(tiny->config().blocks);
  ckpt.seed = seed_;
  ckpt.kind = ModelKind::kRelation;
  ckpt.config_json =
      nlohmann::json{{"encoder", ToJson(tiny->config())}, {"relation", ToJson(config_)}}.dump();
  ckpt.AddParams(const_cast<RelationModel *>(this)->params());
  WriteCheckpoint(ckpt, path);
}

RelationModel RelationModel::Load(const std::filesystem::path &path) {
  const Checkpoint ckpt = ReadCheckpoint(path);
  if (ckpt.kind != ModelKind::kRelation) throw Error(path.string() + " is not a relation model");
  const auto j = nlohmann::json::parse(ckpt.config_json);
  EncoderConfig enc;
  RelationConfig rel;
  FromJson(j.at("encoder"), &enc);
  FromJson(j.at("relation"), &rel);
  RelationModel model(rel, std::make_unique<TinyEncoder>(enc), ckpt.seed);
  ckpt.RestoreParams(model.params());
  return model;
}

std::vector<RelationExample> BuildRelationExamples(std::span<const PreparedDocument> docs,
                                                   const RelationConfig &config, int max_len) {
  std::vector<RelationExample> out;
  for (const PreparedDocument &doc : docs) {
    std::map<std::pair<std::string_view, std::string_view>, std::vector<RelationLabel>> labels;
    for (const GoldRelation &r : doc.doc->relations) {
      if (r.eval_flag) labels[{r.arg1, r.arg2}].push_back(LabelForGroup(r.group));
    }
    for (const Sentence &s : doc.sentences) {
      std::vector<SpanMention> mentions;
      std::vector<const AlignedEntity *> sources;
      for (const AlignedEntity &e : doc.entities) {
        if (!e.recoverable || e.sent_id != s.sent_id) continue;
        mentions.push_back({s.sent_id, e.token_start, e.token_end, e.etype});
        sources.push_back(&e);
      }
      if (mentions.empty()) continue;
      const std::vector<Symbol> sentence = SentenceSymbols(doc, s.sent_id);
      const ContextSupply supply = GatherContext(doc, s.sent_id);
      for (std::size_t i = 0; i < mentions.size(); ++i) {
        if (mentions[i].type != EntityType::kChemical) continue;
        for (std::size_t j = 0; j < mentions.size(); ++j) {
          if (mentions[j].type != EntityType::kGene) continue;
          RelationInstance inst = BuildRelationInstance(doc.doc->id(), sentence, supply,
                                                        mentions[i], mentions[j],
                                                        config.context_window, max_len);
          auto it = labels.find({sources[i]->entity_id, sources[j]->entity_id});
          if (it == labels.end()) {
            out.push_back({std::move(inst), RelationLabel::kNull});
            continue;
          }
          for (RelationLabel label : it->second) out.push_back({inst, label});
        }
      }
    }
  }
  return out;
}

TrainResult TrainRelation(RelationModel *model, std::span<const RelationExample> examples,
                          const TrainOptions &options, std::uint64_t seed) {
  auto params = model->params();
  return RunTraining(
      examples.size(), options, seed, params, [](std::size_t) { return 1; },
      [&](std::size_t i, double scale) {
        return model->LossAndGradient(examples[i].instance, examples[i].label, scale);
      },
      "relation model");
}

DocumentMentions GoldMentions(std::span<const PreparedDocument> docs) {
  DocumentMentions out(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (const AlignedEntity &e : docs[d].entities) {
      if (e.recoverable) out[d].push_back({e.sent_id, e.token_start, e.token_end, e.etype});
    }
  }
  return out;
}

DocumentMentions MentionsFromPredictions(std::span<const PreparedDocument> docs,
                                         std::span<const EntityPrediction> predictions) {
  std::map<std::string_view, std::size_t> index;
  for (std::size_t d = 0; d < docs.size(); ++d) index.emplace(docs[d].doc->id(), d);
  DocumentMentions out(docs.size());
  for (const EntityPrediction &p : predictions) {
    auto it = index.find(p.doc_id);
    if (it == index.end()) throw Error("entity prediction for unknown document " + p.doc_id);
    out[it->second].push_back({p.sent_id, p.token_start, p.token_end, p.type});
  }
  return out;
}

std::vector<RelationPrediction> PredictRelations(const RelationModel &model,
                                                 std::span<const PreparedDocument> docs,
                                                 const DocumentMentions &mentions) {
  std::vector<RelationPrediction> out;
  const int max_len = model.encoder().max_len();
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const PreparedDocument &doc = docs[d];
    int doc_offset = 0;
    for (const Sentence &s : doc.sentences) {
      std::vector<SpanMention> in_sentence;
      for (const SpanMention &m : mentions[d]) {
        if (m.sent_id == s.sent_id) in_sentence.push_back(m);
      }
      const auto pairs = GeneratePairs(in_sentence);
      if (!pairs.empty()) {
        const std::vector<Symbol> sentence = SentenceSymbols(doc, s.sent_id);
        const ContextSupply supply = GatherContext(doc, s.sent_id);
        const auto &tokens = doc.tokens[s.sent_id];
        for (const auto &[subject, object] : pairs) {
          const RelationInstance inst =
              BuildRelationInstance(doc.doc->id(), sentence, supply, subject, object,
                                    model.config().context_window, max_len);
          const RelationDecision decision = model.Classify(inst);
          if (decision.label == RelationLabel::kNull) continue;
          RelationPrediction p;
          p.doc_id = doc.doc->id();
          p.sent_id = s.sent_id;
          p.subject = subject;
          p.object = object;
          p.subject_doc_start = doc_offset + subject.token_start;
          p.subject_doc_end = doc_offset + subject.token_end;
          p.object_doc_start = doc_offset + object.token_start;
          p.object_doc_end = doc_offset + object.token_end;
          p.subject_chars = {tokens[subject.token_start].char_start,
                             tokens[subject.token_end].char_end};
          p.object_chars = {tokens[object.token_start].char_start, tokens[object.token_end].char_end};
          p.label = decision.label;
          p.probability = decision.probability;
          out.push_back(std::move(p));
        }
      }
      doc_offset += static_cast<int>(doc.tokens[s.sent_id].size());
    }
  }
  return out;
}

EndToEndResult PredictEndToEnd(const NerModel &ner, const RelationModel &re,
                               std::span<const PreparedDocument> docs) {
  EndToEndResult result;
  result.entities = PredictEntities(ner, docs);
  result.relations = PredictRelations(re, docs, MentionsFromPredictions(docs, result.entities));
  return result;
}

void WriteRelationPredictions(std::span<const RelationPrediction> predictions,
                              const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(6) << std::fixed;
  for (const auto &p : predictions) {
    out << p.doc_id << '\t' << p.subject_doc_start << '\t' << p.subject_doc_end << '\t'
        << p.object_doc_start << '\t' << p.object_doc_end << '\t' << ToString(p.label) << '\t'
        << p.probability << '\t' << p.subject_chars.start << '\t' << p.subject_chars.end << '\t'
        << p.object_chars.start << '\t' << p.object_chars.end << '\n';
  }
}

std::vector<RelationPrediction> ReadRelationPredictions(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<RelationPrediction> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    RelationPrediction p;
    std::string label;
    if (!(std::getline(fields, p.doc_id, '\t') && fields >> p.subject_doc_start >>
          p.subject_doc_end >> p.object_doc_start >> p.object_doc_end >> label >>
          p.probability >> p.subject_chars.start >> p.subject_chars.end >>
          p.object_chars.start >> p.object_chars.end)) {
      throw ParseError(path.string(), line_no, "record", "expected 11 tab-separated fields");
    }
    auto parsed = ParseRelationLabel(label);
    if (!parsed) throw ParseError(path.string(), line_no, "label", "unknown label " + label);
    p.label = *parsed;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace chemprot
