#include "chemprot/eval.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace chemprot {

namespace {

void AddRelationKeys(const Document &doc, std::set<RelationKey> *out,
                     const PreparedDocument *prepared) {
  for (const GoldRelation &r : doc.relations) {
    if (!r.eval_flag) continue;
    const GoldEntity *subject = doc.FindEntity(r.arg1);
    const GoldEntity *object = doc.FindEntity(r.arg2);
    if (subject == nullptr || object == nullptr) {
      throw Error("relation in " + doc.id() + " names a missing entity");
    }
    if (prepared != nullptr) {
      const AlignedEntity *a = prepared->FindEntity(r.arg1);
      const AlignedEntity *b = prepared->FindEntity(r.arg2);
      if (!a->recoverable || !b->recoverable || a->sent_id != b->sent_id) continue;
    }
    out->insert({doc.id(), subject->span(), object->span(), LabelForGroup(r.group)});
  }
}

double Ratio(int num, int den) { return den == 0 ? 0.0 : static_cast<double>(num) / den; }

template <typename Key, typename TypeOf>
ScoreReport Score(Task task, std::set<Key> gold, const std::set<Key> &predicted,
                  const std::set<Key> &lost, std::span<const std::string> type_names,
                  TypeOf type_of) {
  ScoreReport report;
  report.task = task;
  gold.insert(lost.begin(), lost.end());
  for (const std::string &name : type_names) report.per_type[name];

  for (const Key &k : predicted) {
    Counts &c = report.per_type[type_of(k)].counts;
    if (gold.contains(k)) {
      ++report.tp;
      ++c.tp;
    } else {
      ++report.fp;
      ++c.fp;
    }
  }
  for (const Key &k : gold) {
    if (predicted.contains(k)) continue;
    ++report.fn;
    ++report.per_type[type_of(k)].counts.fn;
    if (lost.contains(k)) ++report.structural_fn;
  }

  const Counts total{report.tp, report.fp, report.fn};
  report.precision = total.precision();
  report.recall = total.recall();
  report.f1 = total.f1();
  report.precision_undefined = predicted.empty();
  for (auto &[name, ts] : report.per_type) {
    ts.precision = ts.counts.precision();
    ts.recall = ts.counts.recall();
    ts.f1 = ts.counts.f1();
  }
  report.per_seed = {total};
  return report;
}

std::vector<std::string> EntityTypeNames() {
  std::vector<std::string> out;
  for (EntityType t : kEntityTypes) out.emplace_back(ToString(t));
  return out;
}

std::vector<std::string> EvalLabelNames() {
  std::vector<std::string> out;
  for (RelationLabel l : kEvalLabels) out.emplace_back(ToString(l));
  return out;
}

}  // namespace

std::set<EntityKey> GoldEntityKeys(const Corpus &corpus) {
  std::set<EntityKey> out;
  for (const Document &doc : corpus.documents) {
    for (const GoldEntity &e : doc.entities) out.insert({doc.id(), e.span(), e.etype});
  }
  return out;
}

std::set<RelationKey> GoldRelationKeys(const Corpus &corpus) {
  std::set<RelationKey> out;
  for (const Document &doc : corpus.documents) AddRelationKeys(doc, &out, nullptr);
  return out;
}

std::set<EntityKey> RecoverableEntityKeys(std::span<const PreparedDocument> docs) {
  std::set<EntityKey> out;
  for (const PreparedDocument &doc : docs) {
    for (std::size_t i = 0; i < doc.entities.size(); ++i) {
      if (!doc.entities[i].recoverable) continue;
      const GoldEntity &e = doc.doc->entities[i];
      out.insert({doc.doc->id(), e.span(), e.etype});
    }
  }
  return out;
}

std::set<RelationKey> RecoverableRelationKeys(std::span<const PreparedDocument> docs) {
  std::set<RelationKey> out;
  for (const PreparedDocument &doc : docs) AddRelationKeys(*doc.doc, &out, &doc);
  return out;
}

std::set<EntityKey> PredictedEntityKeys(std::span<const EntityPrediction> predictions) {
  std::set<EntityKey> out;
  for (const EntityPrediction &p : predictions) out.insert({p.doc_id, p.chars, p.type});
  return out;
}

std::set<RelationKey> PredictedRelationKeys(std::span<const RelationPrediction> predictions) {
  std::set<RelationKey> out;
  for (const RelationPrediction &p : predictions) {
    if (p.label == RelationLabel::kNull) {
      throw Error("relation prediction in " + p.doc_id + " carries the null label");
    }
    out.insert({p.doc_id, p.subject_chars, p.object_chars, p.label});
  }
  return out;
}

std::set<EntityKey> LostEntityKeys(const LossReport &report) {
  std::set<EntityKey> out;
  for (const LostEntity &e : report.lost_entities) out.insert({e.doc_id, e.span, e.etype});
  return out;
}

std::set<RelationKey> LostRelationKeys(const LossReport &report) {
  std::set<RelationKey> out;
  for (const LostRelation &r : report.lost_relations) {
    if (r.label != RelationLabel::kNull) out.insert({r.doc_id, r.subject, r.object, r.label});
  }
  return out;
}

std::string_view ToString(Task task) { return task == Task::kNer ? "NER" : "RE"; }

double Counts::precision() const { return Ratio(tp, tp + fp); }
double Counts::recall() const { return Ratio(tp, tp + fn); }
double Counts::f1() const {
  const double p = precision();
  const double r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

ScoreReport ScoreNer(const std::set<EntityKey> &gold, const std::set<EntityKey> &predicted,
                     const LossReport *loss) {
  const std::set<EntityKey> lost = loss ? LostEntityKeys(*loss) : std::set<EntityKey>{};
  const auto names = EntityTypeNames();
  return Score(Task::kNer, gold, predicted, lost, names,
               [](const EntityKey &k) { return std::string(ToString(k.type)); });
}

ScoreReport ScoreRe(const std::set<RelationKey> &gold, const std::set<RelationKey> &predicted,
                    const LossReport *loss) {
  for (const auto *side : {&gold, &predicted}) {
    for (const RelationKey &k : *side) {
      if (k.label == RelationLabel::kNull) {
        throw Error("relation in " + k.doc_id + " carries the null label; only " +
                    "CPR:3, CPR:4, CPR:5, CPR:6 and CPR:9 are scored");
      }
    }
  }
  const std::set<RelationKey> lost = loss ? LostRelationKeys(*loss) : std::set<RelationKey>{};
  const auto names = EvalLabelNames();
  return Score(Task::kRe, gold, predicted, lost, names,
               [](const RelationKey &k) { return std::string(ToString(k.label)); });
}

ScoreReport AggregateSeeds(std::span<const ScoreReport> reports) {
  if (reports.empty()) throw Error("no reports to aggregate");
  ScoreReport out;
  out.task = reports.front().task;
  out.per_seed.clear();
  const double n = static_cast<double>(reports.size());
  double tp = 0, fp = 0, fn = 0, structural = 0;
  for (const ScoreReport &r : reports) {
    if (r.task != out.task) throw Error("cannot aggregate NER and RE reports together");
    out.precision += r.precision / n;
    out.recall += r.recall / n;
    out.f1 += r.f1 / n;
    tp += r.tp;
    fp += r.fp;
    fn += r.fn;
    structural += r.structural_fn;
    out.precision_undefined = out.precision_undefined || r.precision_undefined;
    if (r.per_seed.empty()) {
      out.per_seed.push_back({r.tp, r.fp, r.fn});
    } else {
      out.per_seed.insert(out.per_seed.end(), r.per_seed.begin(), r.per_seed.end());
    }
    for (const auto &[name, ts] : r.per_type) {
      TypeScore &agg = out.per_type[name];
      agg.precision += ts.precision / n;
      agg.recall += ts.recall / n;
      agg.f1 += ts.f1 / n;
      agg.counts.tp += ts.counts.tp;
      agg.counts.fp += ts.counts.fp;
      agg.counts.fn += ts.counts.fn;
    }
  }
  auto mean = [&](double total) { return static_cast<int>(std::floor(total / n + 0.5)); };
  out.tp = mean(tp);
  out.fp = mean(fp);
  out.fn = mean(fn);
  out.structural_fn = mean(structural);
  for (auto &[name, ts] : out.per_type) {
    ts.counts = {mean(ts.counts.tp), mean(ts.counts.fp), mean(ts.counts.fn)};
  }
  out.seeds_aggregated = 0;
  for (const ScoreReport &r : reports) out.seeds_aggregated += r.seeds_aggregated;
  return out;
}

std::string RenderTable(const ScoreReport &report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << ToString(report.task) << " (seeds: " << report.seeds_aggregated << ")\n";
  out << std::left << std::setw(10) << "type" << std::right << std::setw(7) << "tp"
      << std::setw(7) << "fp" << std::setw(7) << "fn" << std::setw(9) << "P" << std::setw(9)
      << "R" << std::setw(9) << "F1" << '\n';
  auto row = [&](const std::string &name, const Counts &c, double p, double r, double f) {
    out << std::left << std::setw(10) << name << std::right << std::setw(7) << c.tp
        << std::setw(7) << c.fp << std::setw(7) << c.fn << std::setw(9) << 100 * p
        << std::setw(9) << 100 * r << std::setw(9) << 100 * f << '\n';
  };
  for (const auto &[name, ts] : report.per_type) {
    row(name, ts.counts, ts.precision, ts.recall, ts.f1);
  }
  row("micro", {report.tp, report.fp, report.fn}, report.precision, report.recall, report.f1);
  out << "structural fn: " << report.structural_fn << '\n';
  if (report.precision_undefined) out << "note: no predictions; precision reported as 0\n";
  return out.str();
}

nlohmann::json ToJson(const ScoreReport &report) {
  nlohmann::json j;
  j["task"] = ToString(report.task);
  j["tp"] = report.tp;
  j["fp"] = report.fp;
  j["fn"] = report.fn;
  j["precision"] = report.precision;
  j["recall"] = report.recall;
  j["f1"] = report.f1;
  j["precision_undefined"] = report.precision_undefined;
  j["structural_fn"] = report.structural_fn;
  j["seeds_aggregated"] = report.seeds_aggregated;
  nlohmann::json types = nlohmann::json::object();
  for (const auto &[name, ts] : report.per_type) {
    types[name] = {{"tp", ts.counts.tp}, {"fp", ts.counts.fp}, {"fn", ts.counts.fn},
                   {"precision", ts.precision}, {"recall", ts.recall}, {"f1", ts.f1}};
  }
  j["per_type"] = types;
  nlohmann::json seeds = nlohmann::json::array();
  for (const Counts &c : report.per_seed) seeds.push_back({{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}});
  j["per_seed"] = seeds;
  return j;
}

}  // namespace chemprot
