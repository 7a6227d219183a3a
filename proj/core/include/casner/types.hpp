#ifndef CASNER_TYPES_HPP
#define CASNER_TYPES_HPP

#include <compare>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace casner {

/// A corpus sentence. `text` is UTF-8; all span offsets into it count
/// Unicode scalar values.
struct Sentence {
  std::string id;
  std::string text;
  std::string language = "other";  // ISO-639-1 tag or "other"
};

/// Half-open character range [start, end) plus the covered surface text.
struct EntitySpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string surface;

  std::size_t length() const { return end - start; }
  auto operator<=>(const EntitySpan&) const = default;
};

enum class LabelLevel { Coarse, Medium, Fine, Flat };

std::string_view level_name(LabelLevel level);
LabelLevel level_from_name(std::string_view name);  // throws ParseError

/// An entity type name at a taxonomy level, or the distinguished Unknown
/// sentinel used for zero-shot escapes.
class Label {
public:
  Label() = default;
  Label(std::string name, LabelLevel level)
      : name_(std::move(name)), level_(level) {}

  static Label unknown() {
    Label l;
    l.unknown_ = true;
    return l;
  }

  bool is_unknown() const { return unknown_; }
  const std::string& name() const { return name_; }
  LabelLevel level() const { return level_; }

  bool operator==(const Label& o) const {
    if (unknown_ || o.unknown_) return unknown_ == o.unknown_;
    return name_ == o.name_ && level_ == o.level_;
  }

private:
  std::string name_;
  LabelLevel level_ = LabelLevel::Flat;
  bool unknown_ = false;
};

/// Ordered candidate type names offered to the classifier. Order matters; it
/// is preserved from the taxonomy file or the record that carried the list.
struct TypeList {
  std::vector<std::string> names;
  bool allow_unknown = false;

  bool contains(std::string_view name) const {
    for (const auto& n : names)
      if (n == name) return true;
    return false;
  }
};

struct Entity {
  EntitySpan span;
  Label label;
};

/// A sentence with its (flat, non-overlapping) entities and the type list
/// that applies to this record.
struct AnnotatedSentence {
  Sentence sentence;
  std::vector<Entity> entities;
  TypeList type_list;
};

}  // namespace casner

#endif  // CASNER_TYPES_HPP
