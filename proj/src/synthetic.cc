#include "chemprot/synthetic.h"

#include <algorithm>
#include <array>
#include <map>
#include <random>
#include <string_view>

#include "chemprot/nn.h"

namespace chemprot {

namespace {

constexpr std::array<std::string_view, 12> kChemicals = {
    "aspirin",  "tamoxifen", "dexamethasone", "caffeine",  "nicotine",       "cisplatin",
    "metformin", "rapamycin", "forskolin",    "genistein", "retinoic acid", "5-fluorouracil"};

constexpr std::array<std::string_view, 12> kGenes = {
    "COX-2", "EGFR", "CYP3A4", "mTOR", "AMPK", "TNF-α",
    "p53",   "PPARγ", "IL-6",  "ERK1", "HER2", "insulin receptor"};

constexpr std::array<std::string_view, 6> kPrefixes = {
    "In rat kidney,", "In cultured cells,", "Notably,", "We found that", "Here,", "Moreover,"};

struct Rel {
  std::string_view subject;
  std::string_view object;
  CprGroup group;
};

struct Template {
  std::string_view pattern;
  std::vector<Rel> relations;
};

// {C1} {C2} chemicals, {G1} {G2} genes, {NKCC} and {GCR} genes with nested
// chemicals, {P} a sentence opener.
const std::vector<Template> &Templates() {
  static const std::vector<Template> templates = {
      {"{P} {C1} strongly activated {G1}.", {{"C1", "G1", CprGroup::kCpr3}}},
      {"{P} {C1} potently inhibited {G1}.", {{"C1", "G1", CprGroup::kCpr4}}},
      {"{P} {C1} is a potent agonist of {G1}.", {{"C1", "G1", CprGroup::kCpr5}}},
      {"{P} {C1} is a selective antagonist of {G1}.", {{"C1", "G1", CprGroup::kCpr6}}},
      {"{P} {C1} is metabolized by {G1}.", {{"C1", "G1", CprGroup::kCpr9}}},
      {"{P} {C1} and {G1} were measured in plasma.", {}},
      {"{P} {C1} blocked the {NKCC}.", {{"C1", "NKCC", CprGroup::kCpr4}}},
      {"{P} {C1} increased the expression of {G1}.", {{"C1", "G1", CprGroup::kCpr3}}},
      {"{P} {C1} stimulates the {GCR} as an agonist.", {{"C1", "GCR", CprGroup::kCpr5}}},
      {"{P} {C1} and {C2} are antagonists of {G1}.",
       {{"C1", "G1", CprGroup::kCpr6}, {"C2", "G1", CprGroup::kCpr6}}},
      {"{P} {G1} converts {C1} into an inactive metabolite.", {{"C1", "G1", CprGroup::kCpr9}}},
      {"{P} {C1} binds directly to {G1}.", {{"C1", "G1", CprGroup::kCpr2}}},
      {"{P} {C1} inhibited {G1} but not {G2}.", {{"C1", "G1", CprGroup::kCpr4}}},
      {"{P} levels of {G1} were unchanged after {C1} treatment.", {}},
  };
  return templates;
}

int Length(std::string_view s) { return Utf8Index(s).size(); }

// Accumulates one document: text plus entities at code-point offsets.
class DocumentBuilder {
 public:
  int length() const { return length_; }

  void Append(std::string_view s) {
    text_.append(s);
    length_ += Length(s);
  }

  std::string Entity(std::string_view surface, EntityType type) {
    return Add(length_, surface, type);
  }

  // An entity inside the text already written, found by its surface.
  std::string Inner(int outer_start, std::string_view outer, std::string_view surface,
                    EntityType type) {
    const auto byte = outer.find(surface);
    return Add(outer_start + Length(outer.substr(0, byte)), surface, type, false);
  }

  void Relate(const std::string &subject, const std::string &object, CprGroup group) {
    relations_.push_back({group, IsEvalGroup(group), subject, object});
  }

  std::string &text() { return text_; }
  std::vector<GoldEntity> &entities() { return entities_; }
  std::vector<GoldRelation> &relations() { return relations_; }

 private:
  std::string Add(int start, std::string_view surface, EntityType type, bool append = true) {
    std::string id = "T" + std::to_string(entities_.size() + 1);
    const int len = Length(surface);
    entities_.push_back({id, type, start, start + len, std::string(surface)});
    if (append) Append(surface);
    return id;
  }

  std::string text_;
  int length_ = 0;
  std::vector<GoldEntity> entities_;
  std::vector<GoldRelation> relations_;
};

// Picks `k` distinct indices below n.
std::vector<std::size_t> Distinct(Rng &rng, std::size_t n, int k) {
  std::vector<std::size_t> out;
  while (static_cast<int>(out.size()) < k) {
    const std::size_t i = rng() % n;
    if (std::find(out.begin(), out.end(), i) == out.end()) out.push_back(i);
  }
  return out;
}

void Render(const Template &t, Rng &rng, DocumentBuilder *b) {
  const auto chems = Distinct(rng, kChemicals.size(), 2);
  const auto genes = Distinct(rng, kGenes.size(), 2);
  const std::string_view prefix = kPrefixes[rng() % kPrefixes.size()];
  std::map<std::string_view, std::string> ids;

  std::string_view rest = t.pattern;
  while (!rest.empty()) {
    const auto open = rest.find('{');
    if (open == std::string_view::npos) {
      b->Append(rest);
      break;
    }
    b->Append(rest.substr(0, open));
    const auto close = rest.find('}', open);
    const std::string_view slot = rest.substr(open + 1, close - open - 1);
    rest = rest.substr(close + 1);
    if (slot == "P") {
      b->Append(prefix);
    } else if (slot == "C1" || slot == "C2") {
      ids[slot] = b->Entity(kChemicals[chems[slot == "C1" ? 0 : 1]], EntityType::kChemical);
    } else if (slot == "G1" || slot == "G2") {
      ids[slot] = b->Entity(kGenes[genes[slot == "G1" ? 0 : 1]], EntityType::kGene);
    } else if (slot == "NKCC") {
      constexpr std::string_view kSurface = "Na+-K+-2Cl- cotransporter";
      const int start = b->length();
      ids[slot] = b->Entity(kSurface, EntityType::kGene);
      b->Inner(start, kSurface, "Na+", EntityType::kChemical);
      b->Inner(start, kSurface, "K+", EntityType::kChemical);
    } else if (slot == "GCR") {
      constexpr std::string_view kSurface = "glucocorticoid receptor";
      const int start = b->length();
      ids[slot] = b->Entity(kSurface, EntityType::kGene);
      b->Inner(start, kSurface, "glucocorticoid", EntityType::kChemical);
    } else {
      throw Error("unknown template slot " + std::string(slot));
    }
  }
  for (const Rel &r : t.relations) b->Relate(ids.at(r.subject), ids.at(r.object), r.group);
}

}  // namespace

Corpus MakeMicroCorpus(const MicroCorpusOptions &options) {
  Rng rng(options.seed);
  const auto &templates = Templates();
  Corpus corpus;
  std::size_t next_template = 0;
  for (int d = 0; d < options.documents; ++d) {
    DocumentBuilder b;
    // Title: a sentence without relations.
    const auto c = kChemicals[rng() % kChemicals.size()];
    const auto g = kGenes[rng() % kGenes.size()];
    b.Append("Effects of ");
    b.Entity(c, EntityType::kChemical);
    b.Append(" on ");
    b.Entity(g, EntityType::kGene);
    b.Append(" signaling.");
    const int title_bytes = static_cast<int>(b.text().size());
    for (int s = 0; s < options.sentences_per_abstract; ++s) {
      b.Append(" ");
      Render(templates[next_template++ % templates.size()], rng, &b);
    }
    const std::string text = b.text();
    Document doc("MC" + std::to_string(1000 + d), std::string_view(text).substr(0, title_bytes),
                 std::string_view(text).substr(title_bytes + 1));
    doc.entities = std::move(b.entities());
    doc.relations = std::move(b.relations());
    ValidateDocument(doc);
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

}  // namespace chemprot
