#ifndef CHEMPROT_NER_H_
#define CHEMPROT_NER_H_

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chemprot/alignment.h"
#include "chemprot/config.h"
#include "chemprot/encoder.h"
#include "chemprot/trainer.h"
#include "chemprot/window.h"

namespace chemprot {

struct SpanCandidate {
  int sent_id = 0;
  int token_start = 0;  // inclusive
  int token_end = 0;    // inclusive

  int width() const { return token_end - token_start + 1; }
  bool operator==(const SpanCandidate &) const = default;
};

// All spans of width 1..max_width over n tokens, ordered by (start, width).
std::vector<SpanCandidate> EnumerateSpans(int n_tokens, int max_width, int sent_id = 0);

// Number of spans EnumerateSpans returns: sum over w <= min(L, n) of n - w + 1.
long CountSpans(int n_tokens, int max_width);

// Encoder input for one sentence: left context, the sentence, right context.
struct NerInput {
  std::vector<Symbol> symbols;
  int sentence_offset = 0;  // position of the first sentence token
  int sentence_length = 0;
  ContextSplit context;
};

// Candidate spans are only ever drawn from the sentence part.
NerInput BuildNerInput(std::span<const Symbol> sentence, std::span<const Symbol> left_supply,
                       std::span<const Symbol> right_supply, int window, int max_len);

// Classes of the span classifier, in tie-break order.
enum class SpanLabel { kChemical = 0, kGene = 1, kNull = 2 };
constexpr int kNumSpanLabels = 3;

SpanLabel ToSpanLabel(EntityType type);
std::optional<EntityType> ToEntityType(SpanLabel label);

struct ClassifiedSpan {
  SpanCandidate span;
  SpanLabel label = SpanLabel::kNull;
  double probability = 0.0;
};

// One supervised sentence.
struct NerExample {
  std::size_t doc = 0;
  int sent_id = 0;
  NerInput input;
  std::vector<SpanCandidate> candidates;
  std::vector<int> labels;  // SpanLabel per candidate
};

struct NerExampleStats {
  int positives = 0;
  // Recoverable gold entities wider than L: never predictable, scored as FNs.
  int too_long = 0;
  // Same span annotated with both types; the first type is kept.
  int conflicting = 0;
};

class NerModel {
 public:
  NerModel(const NerConfig &config, std::unique_ptr<Encoder> encoder, std::uint64_t seed);
  // Fresh model over a TinyEncoder built from `encoder`.
  static NerModel Create(const NerConfig &config, const EncoderConfig &encoder);

  NerModel(const NerModel &other);
  NerModel &operator=(const NerModel &other);
  NerModel(NerModel &&) = default;
  NerModel &operator=(NerModel &&) = default;

  const NerConfig &config() const { return config_; }
  const Encoder &encoder() const { return *encoder_; }
  int span_dim() const;

  // Span representations [h_start ; h_end ; width] for the candidates.
  Matrix SpanRepresentations(const Matrix &encoded, const NerInput &input,
                             std::span<const SpanCandidate> candidates) const;
  // Class probabilities, one row per candidate, columns in SpanLabel order.
  Matrix SpanProbabilities(const NerInput &input, std::span<const SpanCandidate> candidates) const;

  // Summed cross entropy of the example; accumulates gradients times scale.
  double LossAndGradient(const NerExample &example, double scale);

  std::vector<Param *> params();

  void Save(const std::filesystem::path &path) const;
  static NerModel Load(const std::filesystem::path &path);

 private:
  NerConfig config_;
  std::unique_ptr<Encoder> encoder_;
  std::uint64_t seed_ = 0;
  Param width_embeddings_;  // max_span_len x width_dim
  Linear head_;             // span_dim -> 3
};

// Argmax label per candidate. Overlapping and nested results are all kept.
std::vector<ClassifiedSpan> ClassifySpans(const NerModel &model, const NerInput &input,
                                          std::span<const SpanCandidate> candidates);

std::vector<NerExample> BuildNerExamples(std::span<const PreparedDocument> docs,
                                         const NerConfig &config, int max_len,
                                         NerExampleStats *stats = nullptr);

TrainResult TrainNer(NerModel *model, std::span<const NerExample> examples,
                     const TrainOptions &options, std::uint64_t seed);

struct EntityPrediction {
  std::string doc_id;
  int sent_id = 0;
  int token_start = 0;
  int token_end = 0;
  EntityType type = EntityType::kChemical;
  double probability = 0.0;
  CharSpan chars;
};

std::vector<EntityPrediction> PredictEntities(const NerModel &model,
                                              std::span<const PreparedDocument> docs);

// doc_id \t sent_id \t token_start \t token_end \t type \t prob
void WriteEntityPredictions(std::span<const EntityPrediction> predictions,
                            const std::filesystem::path &path);
// Character offsets are recovered from the matching prepared documents.
std::vector<EntityPrediction> ReadEntityPredictions(const std::filesystem::path &path,
                                                    std::span<const PreparedDocument> docs);

}  // namespace chemprot

#endif  // CHEMPROT_NER_H_
