#include "chemprot/alignment.h"

#include <cassert>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace chemprot {

std::string_view ToString(LossReason reason) {
  switch (reason) {
    case LossReason::kNone: return "none";
    case LossReason::kTokenBoundary: return "token_boundary";
    case LossReason::kCrossSentence: return "cross_sentence";
    case LossReason::kArgumentsInDifferentSentences: return "arguments_in_different_sentences";
    case LossReason::kArgumentLost: return "argument_lost";
  }
  return "?";
}

std::optional<LossReason> ParseLossReason(std::string_view s) {
  for (LossReason r : {LossReason::kNone, LossReason::kTokenBoundary, LossReason::kCrossSentence,
                       LossReason::kArgumentsInDifferentSentences, LossReason::kArgumentLost}) {
    if (ToString(r) == s) return r;
  }
  return std::nullopt;
}

AlignedEntity AlignEntity(const GoldEntity &entity, std::span<const Token> tokens) {
  AlignedEntity out;
  out.entity_id = entity.entity_id;
  out.etype = entity.etype;
  int start = -1;
  for (const Token &t : tokens) {
    if (t.char_start == entity.char_start) {
      start = t.index;
      break;
    }
  }
  int end = -1;
  if (start >= 0) {
    for (int i = start; i < static_cast<int>(tokens.size()); ++i) {
      if (tokens[i].char_end == entity.char_end) {
        end = i;
        break;
      }
      if (tokens[i].char_end > entity.char_end) break;
    }
  }
  if (start < 0 || end < 0) {
    out.reason = LossReason::kTokenBoundary;
    return out;
  }
  // Tokens never overlap, so the first match on each side is the only one.
  assert(tokens[start].char_start == entity.char_start);
  out.token_start = start;
  out.token_end = end;
  out.recoverable = true;
  return out;
}

const AlignedEntity *PreparedDocument::FindEntity(std::string_view entity_id) const {
  for (const auto &e : entities) {
    if (e.entity_id == entity_id) return &e;
  }
  return nullptr;
}

PreparedDocument PrepareDocument(const Document &doc, const Segmenter &segmenter) {
  PreparedDocument out;
  out.doc = &doc;
  out.sentences = Segment(doc, segmenter);
  for (const auto &s : out.sentences) out.tokens.push_back(TokenizeSentence(doc, s));

  auto sentence_of = [&](int c) {
    for (const auto &s : out.sentences) {
      if (s.char_start <= c && c < s.char_end) return s.sent_id;
    }
    return -1;
  };

  for (const auto &e : doc.entities) {
    const int first = sentence_of(e.char_start);
    const int last = sentence_of(e.char_end - 1);
    AlignedEntity aligned;
    if (first >= 0 && last >= 0 && first != last) {
      aligned.entity_id = e.entity_id;
      aligned.etype = e.etype;
      aligned.sent_id = first;
      aligned.reason = LossReason::kCrossSentence;
    } else {
      const int sent = first >= 0 ? first : last;
      if (sent < 0) {
        aligned.entity_id = e.entity_id;
        aligned.etype = e.etype;
        aligned.reason = LossReason::kTokenBoundary;
      } else {
        aligned = AlignEntity(e, out.tokens[sent]);
        aligned.sent_id = sent;
      }
    }
    out.entities.push_back(std::move(aligned));
  }
  return out;
}

std::vector<PreparedDocument> PrepareCorpus(const Corpus &corpus, const Segmenter &segmenter) {
  std::vector<PreparedDocument> out;
  out.reserve(corpus.documents.size());
  for (const auto &doc : corpus.documents) out.push_back(PrepareDocument(doc, segmenter));
  return out;
}

double LossReport::entity_loss_rate() const {
  return entities_total == 0 ? 0.0 : static_cast<double>(entities_lost) / entities_total;
}

double LossReport::relation_loss_rate() const {
  return relations_total == 0 ? 0.0 : static_cast<double>(relations_lost) / relations_total;
}

LossReport ComputeLossReport(std::span<const PreparedDocument> docs) {
  LossReport report;
  for (const auto &prepared : docs) {
    const Document &doc = *prepared.doc;
    for (std::size_t i = 0; i < doc.entities.size(); ++i) {
      const GoldEntity &gold = doc.entities[i];
      const AlignedEntity &aligned = prepared.entities[i];
      ++report.entities_total;
      if (!aligned.recoverable) {
        ++report.entities_lost;
        report.lost_entities.push_back(
            {doc.id(), gold.entity_id, gold.etype, gold.span(), aligned.reason});
      }
    }
    for (const auto &r : doc.relations) {
      if (!r.eval_flag) continue;
      ++report.relations_total;
      const AlignedEntity *a1 = prepared.FindEntity(r.arg1);
      const AlignedEntity *a2 = prepared.FindEntity(r.arg2);
      LossReason reason = LossReason::kNone;
      if (!a1->recoverable || !a2->recoverable) {
        reason = LossReason::kArgumentLost;
      } else if (a1->sent_id != a2->sent_id) {
        reason = LossReason::kArgumentsInDifferentSentences;
      }
      if (reason != LossReason::kNone) {
        ++report.relations_lost;
        report.lost_relations.push_back({doc.id(), r.arg1, r.arg2, LabelForGroup(r.group),
                                         doc.FindEntity(r.arg1)->span(),
                                         doc.FindEntity(r.arg2)->span(), reason});
      }
    }
  }
  return report;
}

void WriteLossReport(const LossReport &report, const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::fixed << std::setprecision(4);
  out << "entities_total\t" << report.entities_total << '\n'
      << "entities_lost\t" << report.entities_lost << '\n'
      << "entities_lost_percent\t" << 100.0 * report.entity_loss_rate() << '\n'
      << "relations_total\t" << report.relations_total << '\n'
      << "relations_lost\t" << report.relations_lost << '\n'
      << "relations_lost_percent\t" << 100.0 * report.relation_loss_rate() << '\n';

  std::ofstream lost(path.string() + ".lost.tsv");
  if (!lost) throw Error("cannot write " + path.string() + ".lost.tsv");
  for (const auto &e : report.lost_entities) {
    lost << "entity\t" << e.doc_id << '\t' << e.entity_id << '\t' << ToString(e.etype) << '\t'
         << e.span.start << '\t' << e.span.end << '\t' << ToString(e.reason) << '\n';
  }
  for (const auto &r : report.lost_relations) {
    lost << "relation\t" << r.doc_id << '\t' << r.arg1 << '\t' << r.arg2 << '\t'
         << ToString(r.label) << '\t' << r.subject.start << '\t' << r.subject.end << '\t'
         << r.object.start << '\t' << r.object.end << '\t' << ToString(r.reason) << '\n';
  }
}

LossReport ReadLossReport(const std::filesystem::path &path) {
  LossReport report;
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string key;
    double value = 0;
    if (!(fields >> key >> value)) {
      throw ParseError(path.string(), line_no, "record", "expected key and value");
    }
    if (key == "entities_total") report.entities_total = static_cast<int>(value);
    if (key == "entities_lost") report.entities_lost = static_cast<int>(value);
    if (key == "relations_total") report.relations_total = static_cast<int>(value);
    if (key == "relations_lost") report.relations_lost = static_cast<int>(value);
  }

  const std::string lost_path = path.string() + ".lost.tsv";
  std::ifstream lost(lost_path);
  if (!lost) throw Error("cannot open " + lost_path);
  line_no = 0;
  while (std::getline(lost, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string kind;
    std::string type;
    std::string reason;
    std::getline(fields, kind, '\t');
    if (kind == "entity") {
      LostEntity e;
      std::getline(fields, e.doc_id, '\t');
      std::getline(fields, e.entity_id, '\t');
      if (!(fields >> type >> e.span.start >> e.span.end >> reason)) {
        throw ParseError(lost_path, line_no, "entity", "expected 7 fields");
      }
      auto t = ParseEntityType(type);
      if (!t) throw ParseError(lost_path, line_no, "type", "unknown type " + type);
      e.etype = *t;
      auto r = ParseLossReason(reason);
      if (!r) throw ParseError(lost_path, line_no, "reason", "unknown reason " + reason);
      e.reason = *r;
      report.lost_entities.push_back(std::move(e));
    } else if (kind == "relation") {
      LostRelation rel;
      std::getline(fields, rel.doc_id, '\t');
      std::getline(fields, rel.arg1, '\t');
      std::getline(fields, rel.arg2, '\t');
      if (!(fields >> type >> rel.subject.start >> rel.subject.end >> rel.object.start >>
            rel.object.end >> reason)) {
        throw ParseError(lost_path, line_no, "relation", "expected 10 fields");
      }
      auto label = ParseRelationLabel(type);
      if (!label) throw ParseError(lost_path, line_no, "label", "unknown label " + type);
      rel.label = *label;
      auto r = ParseLossReason(reason);
      if (!r) throw ParseError(lost_path, line_no, "reason", "unknown reason " + reason);
      rel.reason = *r;
      report.lost_relations.push_back(std::move(rel));
    } else {
      throw ParseError(lost_path, line_no, "kind", "expected entity or relation");
    }
  }
  return report;
}

}  // namespace chemprot
