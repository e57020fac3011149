#ifndef CHEMPROT_ALIGNMENT_H_
#define CHEMPROT_ALIGNMENT_H_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chemprot/corpus.h"
#include "chemprot/tokenizer.h"

namespace chemprot {

enum class LossReason {
  kNone,
  // No token span has exactly the gold boundaries ("KIT" inside "KITD816V").
  kTokenBoundary,
  // The entity straddles a sentence boundary produced by the segmenter.
  kCrossSentence,
  // Relation only: the two arguments sit in different sentences.
  kArgumentsInDifferentSentences,
  // Relation only: an argument entity is lost.
  kArgumentLost,
};

std::string_view ToString(LossReason reason);
std::optional<LossReason> ParseLossReason(std::string_view s);

struct AlignedEntity {
  std::string entity_id;
  EntityType etype = EntityType::kChemical;
  int sent_id = -1;
  // Inclusive token indices within the sentence; -1 when not recoverable.
  int token_start = -1;
  int token_end = -1;
  bool recoverable = false;
  LossReason reason = LossReason::kNone;
};

// Matches the gold boundaries against the sentence tokens (document-absolute
// offsets). Recoverable iff one token starts at char_start and a token at or
// after it ends at char_end.
AlignedEntity AlignEntity(const GoldEntity &entity, std::span<const Token> tokens);

// A document after segmentation, tokenization and alignment.
struct PreparedDocument {
  const Document *doc = nullptr;
  std::vector<Sentence> sentences;
  std::vector<std::vector<Token>> tokens;  // per sentence
  std::vector<AlignedEntity> entities;     // parallel to doc->entities

  const AlignedEntity *FindEntity(std::string_view entity_id) const;
};

// `doc` must outlive the result.
PreparedDocument PrepareDocument(const Document &doc, const Segmenter &segmenter);
std::vector<PreparedDocument> PrepareCorpus(const Corpus &corpus, const Segmenter &segmenter);

struct LostEntity {
  std::string doc_id;
  std::string entity_id;
  EntityType etype = EntityType::kChemical;
  CharSpan span;
  LossReason reason = LossReason::kNone;
};

struct LostRelation {
  std::string doc_id;
  std::string arg1;
  std::string arg2;
  RelationLabel label = RelationLabel::kNull;
  CharSpan subject;
  CharSpan object;
  LossReason reason = LossReason::kNone;
};

// Tokenization losses over a corpus. Relations are the eval-group gold
// relations, the ones that are scored.
struct LossReport {
  int entities_total = 0;
  int entities_lost = 0;
  int relations_total = 0;
  int relations_lost = 0;
  std::vector<LostEntity> lost_entities;
  std::vector<LostRelation> lost_relations;

  double entity_loss_rate() const;
  double relation_loss_rate() const;
};

LossReport ComputeLossReport(std::span<const PreparedDocument> docs);

// Key-value summary at `path` plus the lost items at `path` + ".lost.tsv".
void WriteLossReport(const LossReport &report, const std::filesystem::path &path);
// Reads both files back.
LossReport ReadLossReport(const std::filesystem::path &path);

}  // namespace chemprot

#endif  // CHEMPROT_ALIGNMENT_H_
