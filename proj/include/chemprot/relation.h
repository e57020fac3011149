#ifndef CHEMPROT_RELATION_H_
#define CHEMPROT_RELATION_H_

#include <array>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chemprot/alignment.h"
#include "chemprot/config.h"
#include "chemprot/encoder.h"
#include "chemprot/ner.h"
#include "chemprot/trainer.h"
#include "chemprot/window.h"

namespace chemprot {

// An entity as a token interval (inclusive) within one sentence.
struct SpanMention {
  int sent_id = 0;
  int token_start = 0;
  int token_end = 0;
  EntityType type = EntityType::kChemical;

  bool operator==(const SpanMention &) const = default;
};

using MentionPair = std::pair<SpanMention, SpanMention>;  // (subject, object)

// CHEMICAL x GENE product, nested and overlapping pairs included, ordered by
// (subject start, object start), then by the span ends.
std::vector<MentionPair> GeneratePairs(std::span<const SpanMention> mentions);

// A sentence with the four entity markers inserted.
struct MarkedSequence {
  std::vector<Symbol> symbols;
  // Output positions of [S:CHEM], [\S:CHEM], [O:GENE], [\O:GENE].
  std::array<int, 4> markers{};
  // Output position of each original sentence token.
  std::vector<int> token_positions;
};

// Opening markers go directly before a span's first token, closing markers
// directly after its last. Markers at the same slot are ordered so that
// nested spans produce properly nested brackets: the span that starts earlier
// (or, on a tie, ends later) opens first, and closings mirror the openings.
// Identical spans open subject first. Throws ContractViolation for spans
// outside the sentence.
MarkedSequence InsertMarkers(std::span<const Symbol> sentence, const SpanMention &subject,
                             const SpanMention &object);

// Drops marker symbols; inverts InsertMarkers.
std::vector<Symbol> RemoveMarkers(std::span<const Symbol> symbols);

// Positions in the encoder input consumed by the relation representations.
struct RepresentationPositions {
  int cls = 0;
  int subject_start = 0;
  int subject_end = 0;
  int object_start = 0;
  int object_end = 0;
  // Tokens strictly between the two entity spans; empty when they touch,
  // overlap or nest.
  std::vector<int> middle;
};

// Encoder input for one candidate pair: [CLS], left context, the marked
// sentence, right context.
struct RelationInstance {
  std::string doc_id;
  int sent_id = 0;
  SpanMention subject;
  SpanMention object;
  MarkedSequence marked;
  ContextSplit context;
  std::vector<Symbol> symbols;
  RepresentationPositions positions;
};

RelationInstance BuildRelationInstance(std::string doc_id, std::span<const Symbol> sentence,
                                       const ContextSupply &supply, const SpanMention &subject,
                                       const SpanMention &object, int window, int max_len);

int RepresentationDim(Variant variant, int dim);

// Concatenates the blocks of the variant from the encoded rows. h_M is the
// mean over positions.middle, or zero when there are none.
RowVector BuildRepresentation(const Matrix &encoded, const RepresentationPositions &positions,
                              Variant variant);
// Scatters d(representation) back onto the encoded rows.
void BuildRepresentationBackward(const RowVector &d_rep, const RepresentationPositions &positions,
                                 Variant variant, Matrix *d_encoded);

// Two ReLU layers followed by a softmax over the six relation classes.
class RelationHead {
 public:
  RelationHead(int input_dim, int hidden_dim, std::uint64_t seed);

  int input_dim() const { return input_dim_; }
  // Throws ContractViolation when rep has the wrong width.
  RowVector Probabilities(const RowVector &rep) const;
  // Summed cross entropy; accumulates parameter gradients times scale and
  // writes dL/d(rep) when d_rep is non-null.
  double LossAndGradient(const RowVector &rep, RelationLabel target, double scale,
                         RowVector *d_rep);
  std::vector<Param *> params();

 private:
  void CheckDim(const RowVector &rep) const;

  int input_dim_;
  Linear layer1_;
  Linear layer2_;
  Linear output_;
};

struct RelationDecision {
  RelationLabel label = RelationLabel::kNull;
  double probability = 0.0;
};

RelationDecision ClassifyRelation(const RelationHead &head, const RowVector &rep);

class RelationModel {
 public:
  RelationModel(const RelationConfig &config, std::unique_ptr<Encoder> encoder,
                std::uint64_t seed);
  static RelationModel Create(const RelationConfig &config, const EncoderConfig &encoder);

  RelationModel(const RelationModel &other);
  RelationModel &operator=(const RelationModel &other);
  RelationModel(RelationModel &&) = default;
  RelationModel &operator=(RelationModel &&) = default;

  const RelationConfig &config() const { return config_; }
  const Encoder &encoder() const { return *encoder_; }
  const RelationHead &head() const { return head_; }

  RowVector Representation(const RelationInstance &instance) const;
  RelationDecision Classify(const RelationInstance &instance) const;
  double LossAndGradient(const RelationInstance &instance, RelationLabel target, double scale);

  std::vector<Param *> params();

  void Save(const std::filesystem::path &path) const;
  static RelationModel Load(const std::filesystem::path &path);

 private:
  RelationConfig config_;
  std::unique_ptr<Encoder> encoder_;
  std::uint64_t seed_ = 0;
  RelationHead head_;
};

struct RelationExample {
  RelationInstance instance;
  RelationLabel label = RelationLabel::kNull;
};

// Training pairs from the recoverable gold entities of each sentence. A pair
// without an eval-group relation is labeled null; a pair carrying several
// eval labels yields one example per label.
std::vector<RelationExample> BuildRelationExamples(std::span<const PreparedDocument> docs,
                                                   const RelationConfig &config, int max_len);

// Returns an empty result (no steps) when there are no examples.
TrainResult TrainRelation(RelationModel *model, std::span<const RelationExample> examples,
                          const TrainOptions &options, std::uint64_t seed);

struct RelationPrediction {
  std::string doc_id;
  int sent_id = 0;
  SpanMention subject;
  SpanMention object;
  // Document-level token indices (position in the concatenated sentences).
  int subject_doc_start = 0;
  int subject_doc_end = 0;
  int object_doc_start = 0;
  int object_doc_end = 0;
  CharSpan subject_chars;
  CharSpan object_chars;
  RelationLabel label = RelationLabel::kNull;
  double probability = 0.0;
};

// Mentions of each document, any sentence; parallel to docs.
using DocumentMentions = std::vector<std::vector<SpanMention>>;

DocumentMentions GoldMentions(std::span<const PreparedDocument> docs);
DocumentMentions MentionsFromPredictions(std::span<const PreparedDocument> docs,
                                         std::span<const EntityPrediction> predictions);

// Pairs every CHEMICAL with every GENE in a sentence and keeps the non-null
// decisions.
std::vector<RelationPrediction> PredictRelations(const RelationModel &model,
                                                 std::span<const PreparedDocument> docs,
                                                 const DocumentMentions &mentions);

struct EndToEndResult {
  std::vector<EntityPrediction> entities;
  std::vector<RelationPrediction> relations;
};

// Entities from the entity model feed the relation model.
EndToEndResult PredictEndToEnd(const NerModel &ner, const RelationModel &re,
                               std::span<const PreparedDocument> docs);

// doc_id \t subj_start \t subj_end \t obj_start \t obj_end \t label \t prob
// \t subj_char_start \t subj_char_end \t obj_char_start \t obj_char_end, with
// document-level token indices.
void WriteRelationPredictions(std::span<const RelationPrediction> predictions,
                              const std::filesystem::path &path);
// Reads what WriteRelationPredictions writes. sent_id and the sentence-level
// mentions are not recoverable from the file and are left at zero.
std::vector<RelationPrediction> ReadRelationPredictions(const std::filesystem::path &path);

}  // namespace chemprot

#endif  // CHEMPROT_RELATION_H_
