#include "chemprot/types.h"

#include <charconv>

namespace chemprot {

ParseError::ParseError(std::string file, int line, std::string field,
                       const std::string &what)
    : Error(file + ":" + std::to_string(line) + ": field '" + field + "': " + what),
      file_(std::move(file)),
      line_(line),
      field_(std::move(field)) {}

std::string_view ToString(EntityType type) {
  switch (type) {
    case EntityType::kChemical: return "CHEMICAL";
    case EntityType::kGene: return "GENE";
  }
  return "?";
}

std::optional<EntityType> ParseEntityType(std::string_view s) {
  if (s == "CHEMICAL") return EntityType::kChemical;
  if (s == "GENE") return EntityType::kGene;
  return std::nullopt;
}

std::string ToString(CprGroup group) {
  return "CPR:" + std::to_string(static_cast<int>(group));
}

std::optional<CprGroup> ParseCprGroup(std::string_view s) {
  if (s.starts_with("CPR:")) {
    s.remove_prefix(4);
  } else if (s.starts_with("CPR")) {
    s.remove_prefix(3);
  }
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  if (value < 1 || value > 10) return std::nullopt;
  return static_cast<CprGroup>(value);
}

bool IsEvalGroup(CprGroup group) {
  switch (group) {
    case CprGroup::kCpr3:
    case CprGroup::kCpr4:
    case CprGroup::kCpr5:
    case CprGroup::kCpr6:
    case CprGroup::kCpr9:
      return true;
    default:
      return false;
  }
}

std::string_view ToString(RelationLabel label) {
  switch (label) {
    case RelationLabel::kNull: return "null";
    case RelationLabel::kCpr3: return "CPR:3";
    case RelationLabel::kCpr4: return "CPR:4";
    case RelationLabel::kCpr5: return "CPR:5";
    case RelationLabel::kCpr6: return "CPR:6";
    case RelationLabel::kCpr9: return "CPR:9";
  }
  return "?";
}

std::optional<RelationLabel> ParseRelationLabel(std::string_view s) {
  if (s == "null") return RelationLabel::kNull;
  auto group = ParseCprGroup(s);
  if (!group || !IsEvalGroup(*group)) return std::nullopt;
  return LabelForGroup(*group);
}

RelationLabel LabelForGroup(CprGroup group) {
  switch (group) {
    case CprGroup::kCpr3: return RelationLabel::kCpr3;
    case CprGroup::kCpr4: return RelationLabel::kCpr4;
    case CprGroup::kCpr5: return RelationLabel::kCpr5;
    case CprGroup::kCpr6: return RelationLabel::kCpr6;
    case CprGroup::kCpr9: return RelationLabel::kCpr9;
    default: return RelationLabel::kNull;
  }
}

}  // namespace chemprot
