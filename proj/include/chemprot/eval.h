#ifndef CHEMPROT_EVAL_H_
#define CHEMPROT_EVAL_H_

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "chemprot/alignment.h"
#include "chemprot/ner.h"
#include "chemprot/relation.h"

namespace chemprot {

// Match identity for entities: character offsets plus type.
struct EntityKey {
  std::string doc_id;
  CharSpan span;
  EntityType type = EntityType::kChemical;

  auto operator<=>(const EntityKey &) const = default;
};

// Match identity for relations: both argument spans plus label.
struct RelationKey {
  std::string doc_id;
  CharSpan subject;
  CharSpan object;
  RelationLabel label = RelationLabel::kCpr3;

  auto operator<=>(const RelationKey &) const = default;
};

// All gold entities, and all eval-group gold relations, of the corpus.
std::set<EntityKey> GoldEntityKeys(const Corpus &corpus);
std::set<RelationKey> GoldRelationKeys(const Corpus &corpus);
// Only the items the tokenizer and segmenter can reproduce.
std::set<EntityKey> RecoverableEntityKeys(std::span<const PreparedDocument> docs);
std::set<RelationKey> RecoverableRelationKeys(std::span<const PreparedDocument> docs);

std::set<EntityKey> PredictedEntityKeys(std::span<const EntityPrediction> predictions);
// Throws Error on a null label.
std::set<RelationKey> PredictedRelationKeys(std::span<const RelationPrediction> predictions);

std::set<EntityKey> LostEntityKeys(const LossReport &report);
std::set<RelationKey> LostRelationKeys(const LossReport &report);

enum class Task { kNer, kRe };
std::string_view ToString(Task task);

struct Counts {
  int tp = 0;
  int fp = 0;
  int fn = 0;

  double precision() const;
  double recall() const;
  double f1() const;
  bool operator==(const Counts &) const = default;
};

struct TypeScore {
  Counts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ScoreReport {
  Task task = Task::kNer;
  int tp = 0;
  int fp = 0;
  int fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // No predictions at all: precision is reported as 0.
  bool precision_undefined = false;
  // Gold items lost to tokenization or segmentation, all counted in fn.
  int structural_fn = 0;
  // Keyed by entity type or relation label; every type is always present.
  std::map<std::string, TypeScore> per_type;
  int seeds_aggregated = 1;
  // Per-seed counts of an aggregated report.
  std::vector<Counts> per_seed;
};

// Strict set-based scoring. When `loss` is given its lost items join the gold
// set (they are false negatives unless somehow predicted).
ScoreReport ScoreNer(const std::set<EntityKey> &gold, const std::set<EntityKey> &predicted,
                     const LossReport *loss = nullptr);
// Throws Error when a key carries the null label.
ScoreReport ScoreRe(const std::set<RelationKey> &gold, const std::set<RelationKey> &predicted,
                    const LossReport *loss = nullptr);

// Mean P, R and F (overall and per type). tp, fp and fn are the per-seed
// means rounded half up; the exact counts go to per_seed. Throws Error on an
// empty list or mixed tasks.
ScoreReport AggregateSeeds(std::span<const ScoreReport> reports);

std::string RenderTable(const ScoreReport &report);
nlohmann::json ToJson(const ScoreReport &report);

}  // namespace chemprot

#endif  // CHEMPROT_EVAL_H_
