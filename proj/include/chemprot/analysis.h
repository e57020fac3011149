#ifndef CHEMPROT_ANALYSIS_H_
#define CHEMPROT_ANALYSIS_H_

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chemprot/eval.h"

namespace chemprot {

// An exact ratio. den == 0 renders as zero.
struct Fraction {
  long num = 0;
  long den = 0;

  double value() const { return den == 0 ? 0.0 : static_cast<double>(num) / den; }
  // Three decimals, half-up: 1/4 -> "0.250", 1/8 -> "0.125", 5/2000 -> "0.003".
  std::string ToString() const;
  bool operator==(const Fraction &) const = default;
};

enum class ErrorCategory { kNerCaused, kNullFn, kConfusion, kNonNerFp };
std::string_view ToString(ErrorCategory category);

// One relation FP or FN and the category it was assigned.
struct RelationError {
  RelationKey key;
  bool false_positive = false;
  ErrorCategory category = ErrorCategory::kNerCaused;
};

struct ErrorBreakdown {
  // Every RE FP and FN counted separately.
  int re_errors_total = 0;
  int re_errors_ner_caused = 0;
  int null_fn = 0;
  int confusion = 0;
  int non_ner_fp = 0;
  // The same tallies when an (FP, FN) pair sharing argument spans counts once:
  // distinct (doc, subject, object) triples among the errors.
  int re_error_pairs_total = 0;
  int re_error_pairs_ner_caused = 0;

  std::map<RelationLabel, Fraction> null_fn_by_type;
  std::map<std::pair<RelationLabel, RelationLabel>, int> confusion_counts;  // (gold, pred)
  std::map<RelationLabel, Fraction> fp_fraction_by_pred_type;

  std::vector<RelationError> errors;
};

// An error is NER-caused when a subject or object span (with its type) is
// missing from the other side's entities: predicted arguments are checked
// against gold entities, gold arguments against predicted entities. The
// remaining FNs are confusions when the pair also carries a wrong non-null
// prediction, and null FNs otherwise; the remaining FPs are confusions when
// the pair carries a missed gold label, and non-NER FPs otherwise.
//
// Entity types of relation arguments: subject CHEMICAL, object GENE. Throws
// Error when a prediction names a document outside `documents`.
ErrorBreakdown Analyze(const std::set<std::string> &documents,
                       const std::set<EntityKey> &gold_entities,
                       const std::set<RelationKey> &gold_relations,
                       const std::set<EntityKey> &predicted_entities,
                       const std::set<RelationKey> &predicted_relations);

// Text with fixed row order (types by code, explicit zero rows).
std::string RenderReport(const ErrorBreakdown &breakdown);
nlohmann::json ToJson(const ErrorBreakdown &breakdown);

// report.txt, report.json and one TSV of examples per category.
void WriteAnalysis(const ErrorBreakdown &breakdown, const std::filesystem::path &dir);

}  // namespace chemprot

#endif  // CHEMPROT_ANALYSIS_H_
