#include "chemprot/analysis.h"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <tuple>

namespace chemprot {

std::string Fraction::ToString() const {
  if (den == 0) return "0.000";
  // round(num / den * 1000), half up, in integers.
  const long q = (2 * num * 1000 + den) / (2 * den);
  std::ostringstream out;
  out << q / 1000 << '.' << std::setw(3) << std::setfill('0') << q % 1000;
  return out.str();
}

std::string_view ToString(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kNerCaused: return "ner_caused";
    case ErrorCategory::kNullFn: return "null_fn";
    case ErrorCategory::kConfusion: return "confusion";
    case ErrorCategory::kNonNerFp: return "non_ner_fp";
  }
  return "?";
}

namespace {

using PairKey = std::tuple<std::string, CharSpan, CharSpan>;

PairKey PairOf(const RelationKey &k) { return {k.doc_id, k.subject, k.object}; }

struct PairLabels {
  std::set<RelationLabel> gold;
  std::set<RelationLabel> predicted;
};

bool ArgumentsIn(const RelationKey &k, const std::set<EntityKey> &entities) {
  return entities.contains({k.doc_id, k.subject, EntityType::kChemical}) &&
         entities.contains({k.doc_id, k.object, EntityType::kGene});
}

bool HasExtra(const std::set<RelationLabel> &a, const std::set<RelationLabel> &b) {
  for (RelationLabel l : a) {
    if (!b.contains(l)) return true;
  }
  return false;
}

template <typename Items>
void CheckDocuments(const std::set<std::string> &documents, const Items &items,
                    std::string_view what) {
  for (const auto &item : items) {
    if (!documents.contains(item.doc_id)) {
      throw Error(std::string(what) + " refers to unknown document " + item.doc_id);
    }
  }
}

}  // namespace

ErrorBreakdown Analyze(const std::set<std::string> &documents,
                       const std::set<EntityKey> &gold_entities,
                       const std::set<RelationKey> &gold_relations,
                       const std::set<EntityKey> &predicted_entities,
                       const std::set<RelationKey> &predicted_relations) {
  CheckDocuments(documents, gold_entities, "gold entity");
  CheckDocuments(documents, gold_relations, "gold relation");
  CheckDocuments(documents, predicted_entities, "predicted entity");
  CheckDocuments(documents, predicted_relations, "predicted relation");

  std::map<PairKey, PairLabels> pairs;
  for (const RelationKey &k : gold_relations) pairs[PairOf(k)].gold.insert(k.label);
  for (const RelationKey &k : predicted_relations) pairs[PairOf(k)].predicted.insert(k.label);

  ErrorBreakdown out;
  std::map<RelationLabel, long> gold_per_type;
  std::map<RelationLabel, long> pred_per_type;
  std::map<RelationLabel, long> null_fn_per_type;
  std::map<RelationLabel, long> fp_per_type;
  for (RelationLabel l : kEvalLabels) {
    gold_per_type[l] = pred_per_type[l] = null_fn_per_type[l] = fp_per_type[l] = 0;
  }
  std::set<PairKey> error_pairs;
  std::set<PairKey> ner_pairs;

  for (const RelationKey &k : gold_relations) {
    ++gold_per_type[k.label];
    if (predicted_relations.contains(k)) continue;
    const PairLabels &labels = pairs.at(PairOf(k));
    RelationError e{k, false, ErrorCategory::kNullFn};
    if (!ArgumentsIn(k, predicted_entities)) {
      e.category = ErrorCategory::kNerCaused;
    } else if (HasExtra(labels.predicted, labels.gold)) {
      e.category = ErrorCategory::kConfusion;
    } else {
      ++null_fn_per_type[k.label];
    }
    out.errors.push_back(e);
  }
  for (const RelationKey &k : predicted_relations) {
    ++pred_per_type[k.label];
    if (gold_relations.contains(k)) continue;
    ++fp_per_type[k.label];
    const PairLabels &labels = pairs.at(PairOf(k));
    RelationError e{k, true, ErrorCategory::kNonNerFp};
    if (!ArgumentsIn(k, gold_entities)) {
      e.category = ErrorCategory::kNerCaused;
    } else if (HasExtra(labels.gold, labels.predicted)) {
      e.category = ErrorCategory::kConfusion;
    }
    out.errors.push_back(e);
  }

  for (const RelationError &e : out.errors) {
    ++out.re_errors_total;
    error_pairs.insert(PairOf(e.key));
    switch (e.category) {
      case ErrorCategory::kNerCaused:
        ++out.re_errors_ner_caused;
        ner_pairs.insert(PairOf(e.key));
        break;
      case ErrorCategory::kNullFn: ++out.null_fn; break;
      case ErrorCategory::kConfusion: ++out.confusion; break;
      case ErrorCategory::kNonNerFp: ++out.non_ner_fp; break;
    }
  }
  out.re_error_pairs_total = static_cast<int>(error_pairs.size());
  out.re_error_pairs_ner_caused = static_cast<int>(ner_pairs.size());

  for (const auto &[pair, labels] : pairs) {
    const RelationKey probe{std::get<0>(pair), std::get<1>(pair), std::get<2>(pair)};
    if (!ArgumentsIn(probe, predicted_entities) || !ArgumentsIn(probe, gold_entities)) continue;
    for (RelationLabel g : labels.gold) {
      if (labels.predicted.contains(g)) continue;
      for (RelationLabel p : labels.predicted) {
        if (!labels.gold.contains(p)) ++out.confusion_counts[{g, p}];
      }
    }
  }

  for (RelationLabel l : kEvalLabels) {
    out.null_fn_by_type[l] = {null_fn_per_type[l], gold_per_type[l]};
    out.fp_fraction_by_pred_type[l] = {fp_per_type[l], pred_per_type[l]};
  }
  return out;
}

std::string RenderReport(const ErrorBreakdown &b) {
  std::ostringstream out;
  const Fraction ner_share{b.re_errors_ner_caused, b.re_errors_total};
  const Fraction ner_pair_share{b.re_error_pairs_ner_caused, b.re_error_pairs_total};
  out << "relation errors (FP and FN counted separately)\n"
      << "  total        " << b.re_errors_total << '\n'
      << "  ner_caused   " << b.re_errors_ner_caused << "  (" << ner_share.ToString() << ")\n"
      << "  null_fn      " << b.null_fn << '\n'
      << "  confusion    " << b.confusion << '\n'
      << "  non_ner_fp   " << b.non_ner_fp << '\n'
      << "relation errors (one per subject/object pair)\n"
      << "  total        " << b.re_error_pairs_total << '\n'
      << "  ner_caused   " << b.re_error_pairs_ner_caused << "  (" << ner_pair_share.ToString()
      << ")\n";

  out << "gold relations predicted null (non-NER)\n";
  for (const auto &[label, f] : b.null_fn_by_type) {
    out << "  " << ToString(label) << "  " << f.ToString() << "  (" << f.num << '/' << f.den
        << ")\n";
  }
  out << "confusions (gold -> predicted)\n";
  for (RelationLabel g : kEvalLabels) {
    for (RelationLabel p : kEvalLabels) {
      if (g == p) continue;
      auto it = b.confusion_counts.find({g, p});
      out << "  " << ToString(g) << " -> " << ToString(p) << "  "
          << (it == b.confusion_counts.end() ? 0 : it->second) << '\n';
    }
  }
  out << "false positives among predictions\n";
  for (const auto &[label, f] : b.fp_fraction_by_pred_type) {
    out << "  " << ToString(label) << "  " << f.ToString() << "  (" << f.num << '/' << f.den
        << ")\n";
  }
  return out.str();
}

nlohmann::json ToJson(const ErrorBreakdown &b) {
  auto fraction = [](const Fraction &f) {
    return nlohmann::json{{"num", f.num}, {"den", f.den}, {"value", f.ToString()}};
  };
  nlohmann::json j;
  j["re_errors_total"] = b.re_errors_total;
  j["re_errors_ner_caused"] = b.re_errors_ner_caused;
  j["null_fn"] = b.null_fn;
  j["confusion"] = b.confusion;
  j["non_ner_fp"] = b.non_ner_fp;
  j["re_error_pairs_total"] = b.re_error_pairs_total;
  j["re_error_pairs_ner_caused"] = b.re_error_pairs_ner_caused;
  nlohmann::json null_fn = nlohmann::json::object();
  for (const auto &[label, f] : b.null_fn_by_type) null_fn[std::string(ToString(label))] = fraction(f);
  j["null_fn_by_type"] = null_fn;
  nlohmann::json fp = nlohmann::json::object();
  for (const auto &[label, f] : b.fp_fraction_by_pred_type) {
    fp[std::string(ToString(label))] = fraction(f);
  }
  j["fp_fraction_by_pred_type"] = fp;
  nlohmann::json confusion = nlohmann::json::array();
  for (RelationLabel g : kEvalLabels) {
    for (RelationLabel p : kEvalLabels) {
      if (g == p) continue;
      auto it = b.confusion_counts.find({g, p});
      confusion.push_back({{"gold", ToString(g)},
                           {"predicted", ToString(p)},
                           {"count", it == b.confusion_counts.end() ? 0 : it->second}});
    }
  }
  j["confusion_counts"] = confusion;
  return j;
}

void WriteAnalysis(const ErrorBreakdown &breakdown, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string &name) {
    std::ofstream out(dir / name);
    if (!out) throw Error("cannot write " + (dir / name).string());
    return out;
  };
  open("report.txt") << RenderReport(breakdown);
  open("report.json") << ToJson(breakdown).dump(2) << '\n';
  for (ErrorCategory c : {ErrorCategory::kNerCaused, ErrorCategory::kNullFn,
                          ErrorCategory::kConfusion, ErrorCategory::kNonNerFp}) {
    std::ofstream out = open(std::string(ToString(c)) + ".tsv");
    out << "doc_id\tsubj_start\tsubj_end\tobj_start\tobj_end\tlabel\tkind\n";
    for (const RelationError &e : breakdown.errors) {
      if (e.category != c) continue;
      out << e.key.doc_id << '\t' << e.key.subject.start << '\t' << e.key.subject.end << '\t'
          << e.key.object.start << '\t' << e.key.object.end << '\t' << ToString(e.key.label)
          << '\t' << (e.false_positive ? "FP" : "FN") << '\n';
    }
  }
}

}  // namespace chemprot
