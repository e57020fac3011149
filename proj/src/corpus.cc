#include "chemprot/corpus.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace chemprot {
namespace {

std::vector<std::string_view> SplitTabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

// Reads a tab-separated file, calling fn(fields, line_number) for every
// non-empty line.
template <typename Fn>
void ReadTsv(const std::filesystem::path &path, std::size_t num_fields, Fn fn,
            std::size_t alt_fields = 0) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = SplitTabs(line);
    if (fields.size() != num_fields && fields.size() != alt_fields) {
      throw ParseError(path.string(), line_no, "columns",
                       "expected " + std::to_string(num_fields) + " tab-separated fields, got " +
                           std::to_string(fields.size()));
    }
    fn(fields, line_no);
  }
}

int ParseInt(std::string_view s, const std::filesystem::path &path, int line,
             const char *field) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(path.string(), line, field, "not an integer: '" + std::string(s) + "'");
  }
  return value;
}

std::optional<bool> ParseFlag(std::string_view s) {
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s == "Y" || s == "y" || s == "true" || s == "1") return true;
  if (s == "N" || s == "n" || s == "false" || s == "0") return false;
  return std::nullopt;
}

// Native relation files prefix arguments with "Arg1:" / "Arg2:".
std::string_view StripArgPrefix(std::string_view s) {
  if (s.starts_with("Arg1:") || s.starts_with("Arg2:")) s.remove_prefix(5);
  return s;
}

}  // namespace

Document::Document(std::string doc_id, std::string_view title, std::string_view abstract)
    : doc_id_(std::move(doc_id)) {
  text_.reserve(title.size() + 1 + abstract.size());
  text_.append(title);
  text_.push_back(' ');
  text_.append(abstract);
  index_ = Utf8Index(text_);
  title_length_ = Utf8Index(title).size();
}

const GoldEntity *Document::FindEntity(std::string_view entity_id) const {
  for (const auto &e : entities) {
    if (e.entity_id == entity_id) return &e;
  }
  return nullptr;
}

bool Document::operator==(const Document &other) const {
  return doc_id_ == other.doc_id_ && text_ == other.text_ &&
         title_length_ == other.title_length_ && entities == other.entities &&
         relations == other.relations && presegmented == other.presegmented;
}

void ValidateDocument(const Document &doc) {
  const std::string where = "document " + doc.id() + ": ";
  std::unordered_set<std::string_view> ids;
  for (const auto &e : doc.entities) {
    if (!ids.insert(e.entity_id).second) {
      throw Error(where + "duplicate entity id " + e.entity_id);
    }
    if (e.char_start < 0 || e.char_end > doc.length() || e.char_start >= e.char_end) {
      throw Error(where + "entity " + e.entity_id + " interval [" +
                  std::to_string(e.char_start) + "," + std::to_string(e.char_end) +
                  ") outside text of length " + std::to_string(doc.length()));
    }
    if (doc.Slice(e.span()) != e.surface) {
      throw Error(where + "entity " + e.entity_id + " surface '" + e.surface +
                  "' != text slice '" + std::string(doc.Slice(e.span())) + "'");
    }
  }
  for (const auto &r : doc.relations) {
    const GoldEntity *a1 = doc.FindEntity(r.arg1);
    const GoldEntity *a2 = doc.FindEntity(r.arg2);
    if (a1 == nullptr) throw Error(where + "relation references missing entity " + r.arg1);
    if (a2 == nullptr) throw Error(where + "relation references missing entity " + r.arg2);
    if (a1->etype != EntityType::kChemical || a2->etype != EntityType::kGene) {
      throw Error(where + "relation " + r.arg1 + " -> " + r.arg2 +
                  " must link a CHEMICAL to a GENE");
    }
    if (r.eval_flag != IsEvalGroup(r.group)) {
      throw Error(where + "relation " + ToString(r.group) + " has inconsistent eval flag");
    }
  }
  if (doc.presegmented) ValidateSentences(doc, *doc.presegmented);
}

const Document *Corpus::Find(std::string_view doc_id) const {
  for (const auto &d : documents) {
    if (d.id() == doc_id) return &d;
  }
  return nullptr;
}

CorpusPaths CorpusPaths::InDirectory(const std::filesystem::path &dir) {
  CorpusPaths paths{dir / "abstracts.tsv", dir / "entities.tsv", dir / "relations.tsv", {}};
  if (!std::filesystem::exists(paths.abstracts) && std::filesystem::is_directory(dir)) {
    auto unique = [&](const std::string &part, std::filesystem::path *out) {
      std::vector<std::filesystem::path> hits;
      for (const auto &entry : std::filesystem::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.ends_with(".tsv") && name.find(part) != std::string::npos) hits.push_back(entry.path());
      }
      if (hits.size() == 1) *out = hits[0];
    };
    unique("abstracts", &paths.abstracts);
    unique("entities", &paths.entities);
    unique("relations", &paths.relations);
  }
  if (std::filesystem::exists(dir / "sentences.tsv")) paths.sentences = dir / "sentences.tsv";
  return paths;
}

Corpus LoadCorpus(const CorpusPaths &paths, const LoadOptions &options) {
  Corpus corpus;
  std::unordered_map<std::string, std::size_t> by_id;

  auto lookup = [&](std::string_view doc_id, const std::filesystem::path &path,
                    int line) -> Document & {
    auto it = by_id.find(std::string(doc_id));
    if (it == by_id.end()) {
      throw ParseError(path.string(), line, "doc_id",
                       "unknown document '" + std::string(doc_id) + "'");
    }
    return corpus.documents[it->second];
  };

  ReadTsv(paths.abstracts, 3, [&](const auto &f, int line) {
    std::string doc_id(f[0]);
    if (doc_id.empty()) throw ParseError(paths.abstracts.string(), line, "doc_id", "empty");
    if (by_id.contains(doc_id)) {
      throw ParseError(paths.abstracts.string(), line, "doc_id", "duplicate document " + doc_id);
    }
    by_id.emplace(doc_id, corpus.documents.size());
    corpus.documents.emplace_back(std::move(doc_id), f[1], f[2]);
  });

  std::set<std::string> aliased;
  ReadTsv(paths.entities, 6, [&](const auto &f, int line) {
    Document &doc = lookup(f[0], paths.entities, line);
    auto type_it = options.type_aliases.find(f[2]);
    if (type_it == options.type_aliases.end()) {
      throw ParseError(paths.entities.string(), line, "type",
                       "unknown entity type '" + std::string(f[2]) + "'");
    }
    if (f[2] != ToString(type_it->second)) aliased.emplace(f[2]);
    GoldEntity e;
    e.entity_id = std::string(f[1]);
    e.etype = type_it->second;
    e.char_start = ParseInt(f[3], paths.entities, line, "char_start");
    e.char_end = ParseInt(f[4], paths.entities, line, "char_end");
    e.surface = std::string(f[5]);
    if (e.entity_id.empty()) throw ParseError(paths.entities.string(), line, "entity_id", "empty");
    if (doc.FindEntity(e.entity_id) != nullptr) {
      throw ParseError(paths.entities.string(), line, "entity_id",
                       "duplicate entity id " + e.entity_id + " in document " + doc.id());
    }
    if (e.char_start < 0 || e.char_end > doc.length() || e.char_start >= e.char_end) {
      throw ParseError(paths.entities.string(), line, "char_start/char_end",
                       "interval outside document " + doc.id());
    }
    if (doc.Slice(e.span()) != e.surface) {
      throw ParseError(paths.entities.string(), line, "surface",
                       "'" + e.surface + "' does not match text slice '" +
                           std::string(doc.Slice(e.span())) + "'");
    }
    doc.entities.push_back(std::move(e));
  });
  for (const auto &a : aliased) {
    corpus.diagnostics.push_back("entity type " + a + " mapped by alias table");
  }

  ReadTsv(paths.relations, 5, [&](const auto &f, int line) {
    Document &doc = lookup(f[0], paths.relations, line);
    auto group = ParseCprGroup(f[1]);
    if (!group) {
      throw ParseError(paths.relations.string(), line, "cpr_group",
                       "bad relation group '" + std::string(f[1]) + "'");
    }
    auto flag = ParseFlag(f[2]);
    if (!flag) {
      throw ParseError(paths.relations.string(), line, "eval_flag",
                       "expected Y or N, got '" + std::string(f[2]) + "'");
    }
    if (*flag != IsEvalGroup(*group)) {
      throw ParseError(paths.relations.string(), line, "eval_flag",
                       "flag disagrees with group " + ToString(*group));
    }
    // The native release carries the interaction type in an extra column.
    const std::size_t a = f.size() == 6 ? 4 : 3;
    GoldRelation r{*group, *flag, std::string(StripArgPrefix(f[a])),
                   std::string(StripArgPrefix(f[a + 1]))};
    for (const std::string *arg : {&r.arg1, &r.arg2}) {
      if (doc.FindEntity(*arg) == nullptr) {
        throw Error(paths.relations.string() + ":" + std::to_string(line) +
                    ": dangling relation argument: document " + doc.id() +
                    " has no entity " + *arg);
      }
    }
    if (doc.FindEntity(r.arg1)->etype != EntityType::kChemical ||
        doc.FindEntity(r.arg2)->etype != EntityType::kGene) {
      throw ParseError(paths.relations.string(), line, "arg1/arg2",
                       "relation must link a CHEMICAL (arg1) to a GENE (arg2)");
    }
    if (std::find(doc.relations.begin(), doc.relations.end(), r) != doc.relations.end()) {
      corpus.diagnostics.push_back("duplicate relation dropped: " + doc.id() + " " +
                                   ToString(r.group) + " " + r.arg1 + " " + r.arg2);
      return;
    }
    doc.relations.push_back(std::move(r));
  }, 6);

  if (paths.sentences) {
    ReadTsv(*paths.sentences, 3, [&](const auto &f, int line) {
      Document &doc = lookup(f[0], *paths.sentences, line);
      if (!doc.presegmented) doc.presegmented.emplace();
      Sentence s;
      s.sent_id = static_cast<int>(doc.presegmented->size());
      s.char_start = ParseInt(f[1], *paths.sentences, line, "sent_char_start");
      s.char_end = ParseInt(f[2], *paths.sentences, line, "sent_char_end");
      doc.presegmented->push_back(s);
    });
  }

  for (const auto &doc : corpus.documents) {
    std::map<std::pair<std::string, std::string>, int> eval_labels;
    for (const auto &r : doc.relations) {
      if (r.eval_flag) ++eval_labels[{r.arg1, r.arg2}];
    }
    for (const auto &[pair, count] : eval_labels) {
      if (count > 1) {
        corpus.diagnostics.push_back("pair carries " + std::to_string(count) +
                                     " eval labels: " + doc.id() + " " + pair.first + " " +
                                     pair.second);
      }
    }
    ValidateDocument(doc);
  }
  return corpus;
}

Corpus LoadCorpusDir(const std::filesystem::path &dir, const LoadOptions &options) {
  return LoadCorpus(CorpusPaths::InDirectory(dir), options);
}

void SaveCorpus(const Corpus &corpus, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  std::ofstream abstracts(dir / "abstracts.tsv");
  std::ofstream entities(dir / "entities.tsv");
  std::ofstream relations(dir / "relations.tsv");
  bool any_sentences = false;
  for (const auto &doc : corpus.documents) any_sentences |= doc.presegmented.has_value();
  std::ofstream sentences;
  if (any_sentences) sentences.open(dir / "sentences.tsv");

  for (const auto &doc : corpus.documents) {
    abstracts << doc.id() << '\t' << doc.Slice(0, doc.title_length()) << '\t'
              << doc.Slice(doc.title_length() + 1, doc.length()) << '\n';
    for (const auto &e : doc.entities) {
      entities << doc.id() << '\t' << e.entity_id << '\t' << ToString(e.etype) << '\t'
               << e.char_start << '\t' << e.char_end << '\t' << e.surface << '\n';
    }
    for (const auto &r : doc.relations) {
      relations << doc.id() << '\t' << ToString(r.group) << '\t' << (r.eval_flag ? 'Y' : 'N')
                << '\t' << r.arg1 << '\t' << r.arg2 << '\n';
    }
    if (doc.presegmented) {
      for (const auto &s : *doc.presegmented) {
        sentences << doc.id() << '\t' << s.char_start << '\t' << s.char_end << '\n';
      }
    }
  }
  if (!abstracts || !entities || !relations) {
    throw Error("failed writing corpus to " + dir.string());
  }
}

std::vector<Correction> LoadCorrections(const std::filesystem::path &path) {
  std::vector<Correction> out;
  ReadTsv(path, 4, [&](const auto &f, int line) {
    out.push_back({std::string(f[0]), std::string(f[1]), ParseInt(f[2], path, line, "new_start"),
                   ParseInt(f[3], path, line, "new_end")});
  });
  return out;
}

Document ApplyCorrections(const Document &doc, std::span<const Correction> corrections) {
  Document out = doc;
  for (const auto &c : corrections) {
    if (c.doc_id != doc.id()) continue;
    auto it = std::find_if(out.entities.begin(), out.entities.end(),
                           [&](const GoldEntity &e) { return e.entity_id == c.entity_id; });
    if (it == out.entities.end()) {
      throw Error("correction for unknown entity " + c.entity_id + " in document " + doc.id());
    }
    if (c.new_start < 0 || c.new_end > doc.length() || c.new_start >= c.new_end) {
      throw Error("correction for " + doc.id() + "/" + c.entity_id + " interval [" +
                  std::to_string(c.new_start) + "," + std::to_string(c.new_end) +
                  ") out of bounds for text of length " + std::to_string(doc.length()));
    }
    it->char_start = c.new_start;
    it->char_end = c.new_end;
    it->surface = std::string(doc.Slice(c.new_start, c.new_end));
  }
  return out;
}

void ApplyCorrections(Corpus *corpus, std::span<const Correction> corrections) {
  for (const auto &c : corrections) {
    if (corpus->Find(c.doc_id) == nullptr) {
      throw Error("correction for unknown document " + c.doc_id);
    }
  }
  for (auto &doc : corpus->documents) doc = ApplyCorrections(doc, corrections);
}

std::vector<CharSpan> RuleSegmenter::Split(std::span<const char32_t> text) const {
  const int n = static_cast<int>(text.size());
  auto is_final = [](char32_t c) { return c == U'.' || c == U'!' || c == U'?'; };
  auto starts_sentence = [](char32_t c) {
    return (c >= U'A' && c <= U'Z') || (c >= U'0' && c <= U'9') || (c >= 0x0391 && c <= 0x03A9);
  };

  std::vector<CharSpan> out;
  int i = 0;
  while (i < n) {
    while (i < n && IsUnicodeSpace(text[i])) ++i;
    if (i == n) break;
    int start = i;
    int end = n;
    for (int j = i; j < n; ++j) {
      if (!is_final(text[j])) continue;
      int k = j + 1;
      if (k >= n || !IsUnicodeSpace(text[k])) continue;
      while (k < n && IsUnicodeSpace(text[k])) ++k;
      if (k < n && starts_sentence(text[k])) {
        end = j + 1;
        break;
      }
    }
    while (end > start && IsUnicodeSpace(text[end - 1])) --end;
    out.push_back({start, end});
    i = end;
  }
  return out;
}

void ValidateSentences(const Document &doc, std::span<const Sentence> sentences) {
  const std::string where = "document " + doc.id() + ": ";
  int prev_end = 0;
  for (const auto &s : sentences) {
    if (s.char_start < 0 || s.char_end > doc.length() || s.char_start >= s.char_end) {
      throw ContractViolation(where + "sentence [" + std::to_string(s.char_start) + "," +
                              std::to_string(s.char_end) + ") empty or out of bounds");
    }
    if (s.char_start < prev_end) {
      throw ContractViolation(where + "sentence [" + std::to_string(s.char_start) + "," +
                              std::to_string(s.char_end) + ") overlaps or precedes previous");
    }
    for (int c = prev_end; c < s.char_start; ++c) {
      if (!IsUnicodeSpace(doc.index().at(c))) {
        throw ContractViolation(where + "non-whitespace character at " + std::to_string(c) +
                                " not covered by any sentence");
      }
    }
    prev_end = s.char_end;
  }
  for (int c = prev_end; c < doc.length(); ++c) {
    if (!IsUnicodeSpace(doc.index().at(c))) {
      throw ContractViolation(where + "non-whitespace character at " + std::to_string(c) +
                              " not covered by any sentence");
    }
  }
}

std::vector<Sentence> Segment(const Document &doc, const Segmenter &segmenter) {
  if (doc.length() == 0) throw ContractViolation("document " + doc.id() + ": empty text");
  std::vector<Sentence> sentences;
  if (doc.presegmented) {
    sentences = *doc.presegmented;
  } else {
    for (CharSpan span : segmenter.Split(doc.index().chars())) {
      sentences.push_back({static_cast<int>(sentences.size()), span.start, span.end});
    }
  }
  ValidateSentences(doc, sentences);
  for (std::size_t i = 0; i < sentences.size(); ++i) sentences[i].sent_id = static_cast<int>(i);
  return sentences;
}

}  // namespace chemprot
