#ifndef CHEMPROT_TYPES_H_
#define CHEMPROT_TYPES_H_

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace chemprot {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A malformed input record. Carries the file, line and offending field.
class ParseError : public Error {
 public:
  ParseError(std::string file, int line, std::string field, const std::string &what);

  const std::string &file() const { return file_; }
  int line() const { return line_; }
  const std::string &field() const { return field_; }

 private:
  std::string file_;
  int line_;
  std::string field_;
};

// A component broke its documented contract (segmenter overlap, bad span,
// over-length input and similar).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

enum class EntityType : std::uint8_t { kChemical = 0, kGene = 1 };

constexpr std::array<EntityType, 2> kEntityTypes = {EntityType::kChemical,
                                                    EntityType::kGene};

std::string_view ToString(EntityType type);
std::optional<EntityType> ParseEntityType(std::string_view s);

// ChemProt relation group, CPR:1 .. CPR:10.
enum class CprGroup : std::uint8_t {
  kCpr1 = 1, kCpr2, kCpr3, kCpr4, kCpr5, kCpr6, kCpr7, kCpr8, kCpr9, kCpr10
};

std::string ToString(CprGroup group);
// Accepts "CPR:3", "CPR3" and "3".
std::optional<CprGroup> ParseCprGroup(std::string_view s);

// Only CPR:3, 4, 5, 6 and 9 take part in evaluation.
bool IsEvalGroup(CprGroup group);

// Output classes of the relation model. kNull is the "no relation" class.
enum class RelationLabel : std::uint8_t {
  kNull = 0, kCpr3, kCpr4, kCpr5, kCpr6, kCpr9
};

constexpr int kNumRelationLabels = 6;

constexpr std::array<RelationLabel, 5> kEvalLabels = {
    RelationLabel::kCpr3, RelationLabel::kCpr4, RelationLabel::kCpr5,
    RelationLabel::kCpr6, RelationLabel::kCpr9};

std::string_view ToString(RelationLabel label);
// Accepts the ToString() form ("null", "CPR:3", ...) and anything
// ParseCprGroup accepts for an eval group.
std::optional<RelationLabel> ParseRelationLabel(std::string_view s);

// Non-eval groups map to kNull.
RelationLabel LabelForGroup(CprGroup group);

// Half-open interval of character (code point) offsets.
struct CharSpan {
  int start = 0;
  int end = 0;

  int length() const { return end - start; }
  bool operator==(const CharSpan &) const = default;
  auto operator<=>(const CharSpan &) const = default;
};

}  // namespace chemprot

#endif  // CHEMPROT_TYPES_H_
