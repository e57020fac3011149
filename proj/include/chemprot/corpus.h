#ifndef CHEMPROT_CORPUS_H_
#define CHEMPROT_CORPUS_H_

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chemprot/types.h"
#include "chemprot/utf8.h"

namespace chemprot {

struct GoldEntity {
  std::string entity_id;
  EntityType etype = EntityType::kChemical;
  int char_start = 0;  // inclusive
  int char_end = 0;    // exclusive
  std::string surface;

  CharSpan span() const { return {char_start, char_end}; }
  bool operator==(const GoldEntity &) const = default;
};

struct GoldRelation {
  CprGroup group = CprGroup::kCpr1;
  bool eval_flag = false;
  std::string arg1;  // CHEMICAL entity id
  std::string arg2;  // GENE entity id

  bool operator==(const GoldRelation &) const = default;
};

struct Sentence {
  int sent_id = 0;
  int char_start = 0;
  int char_end = 0;

  CharSpan span() const { return {char_start, char_end}; }
  bool operator==(const Sentence &) const = default;
};

// One abstract. The text is the title and abstract joined by a single space;
// every annotation offset counts code points into that joined text.
class Document {
 public:
  Document() = default;
  Document(std::string doc_id, std::string_view title, std::string_view abstract);

  const std::string &id() const { return doc_id_; }
  const std::string &text() const { return text_; }
  const Utf8Index &index() const { return index_; }
  // Length in code points.
  int length() const { return index_.size(); }
  int title_length() const { return title_length_; }

  std::string_view Slice(int start, int end) const {
    return index_.Slice(text_, start, end);
  }
  std::string_view Slice(CharSpan span) const { return Slice(span.start, span.end); }

  const GoldEntity *FindEntity(std::string_view entity_id) const;

  std::vector<GoldEntity> entities;
  std::vector<GoldRelation> relations;
  // Sentence boundaries supplied with the corpus; bypasses the segmenter.
  std::optional<std::vector<Sentence>> presegmented;

  bool operator==(const Document &other) const;

 private:
  std::string doc_id_;
  std::string text_;
  int title_length_ = 0;
  Utf8Index index_;
};

// Checks every Document invariant; throws Error naming the document.
void ValidateDocument(const Document &doc);

struct Corpus {
  std::vector<Document> documents;
  // Non-fatal findings from loading (deduplicated relations, pairs carrying
  // several eval labels, type aliases applied).
  std::vector<std::string> diagnostics;

  const Document *Find(std::string_view doc_id) const;
  bool operator==(const Corpus &other) const { return documents == other.documents; }
};

struct LoadOptions {
  // Maps the type column of the entities file to an entity type. The native
  // release splits genes into GENE-Y / GENE-N; both collapse to GENE.
  std::map<std::string, EntityType, std::less<>> type_aliases = {
      {"CHEMICAL", EntityType::kChemical},
      {"GENE", EntityType::kGene},
      {"GENE-Y", EntityType::kGene},
      {"GENE-N", EntityType::kGene},
  };
};

struct CorpusPaths {
  std::filesystem::path abstracts;
  std::filesystem::path entities;
  std::filesystem::path relations;
  std::optional<std::filesystem::path> sentences;

  // abstracts.tsv, entities.tsv, relations.tsv and, when present, sentences.tsv.
  // Without abstracts.tsv, falls back to the single *abstracts*.tsv,
  // *entities*.tsv and *relations*.tsv of the directory (the native release
  // names them chemprot_<split>_abstracts.tsv and so on).
  static CorpusPaths InDirectory(const std::filesystem::path &dir);
};

Corpus LoadCorpus(const CorpusPaths &paths, const LoadOptions &options = {});
Corpus LoadCorpusDir(const std::filesystem::path &dir, const LoadOptions &options = {});

// Writes the files read by LoadCorpusDir. Reloading yields an equal corpus.
void SaveCorpus(const Corpus &corpus, const std::filesystem::path &dir);

struct Correction {
  std::string doc_id;
  std::string entity_id;
  int new_start = 0;
  int new_end = 0;
};

std::vector<Correction> LoadCorrections(const std::filesystem::path &path);

// Moves entities to corrected offsets and re-reads their surfaces from the
// text. Corrections for other documents are ignored.
Document ApplyCorrections(const Document &doc, std::span<const Correction> corrections);
// Applies to every document; a correction naming an unknown document throws.
void ApplyCorrections(Corpus *corpus, std::span<const Correction> corrections);

// Text to ordered, non-overlapping half-open sentence intervals.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual std::vector<CharSpan> Split(std::span<const char32_t> text) const = 0;
};

// Splits after '.', '!' or '?' when followed by whitespace and then an
// uppercase letter or a digit.
class RuleSegmenter : public Segmenter {
 public:
  std::vector<CharSpan> Split(std::span<const char32_t> text) const override;
};

// Checks the sentence partition contract against the document text: ordered,
// non-overlapping, non-empty, in bounds and covering every non-whitespace
// character. Throws ContractViolation.
void ValidateSentences(const Document &doc, std::span<const Sentence> sentences);

// Uses doc.presegmented when present, otherwise the segmenter.
std::vector<Sentence> Segment(const Document &doc, const Segmenter &segmenter);

}  // namespace chemprot

#endif  // CHEMPROT_CORPUS_H_
