#ifndef CASNER_TAXONOMY_HPP
#define CASNER_TAXONOMY_HPP

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "casner/types.hpp"

namespace casner {

struct TaxonomyNode {
  std::string name;
  LabelLevel level = LabelLevel::Coarse;
  int parent = -1;             // index into nodes, -1 for coarse
  std::vector<int> children;   // file order
};

/// Three-level category tree (coarse -> medium -> fine). Node order is file
/// order, which makes every derived type list deterministic.
class Taxonomy {
public:
  /// Parses the line-oriented taxonomy format:
  ///   coarse<TAB>name
  ///   medium<TAB>name<TAB>parent
  ///   fine<TAB>name<TAB>parent
  /// Lines starting with '#' and blank lines are ignored.
  static Taxonomy parse(std::istream& in);
  static Taxonomy load(const std::filesystem::path& path);

  std::size_t count(LabelLevel level) const;
  const std::vector<TaxonomyNode>& nodes() const { return nodes_; }

  /// Node lookup by (name, level); names are unique per level.
  const TaxonomyNode* find(std::string_view name, LabelLevel level) const;
  /// Lookup for Flat labels: the name must be unique across all levels.
  const TaxonomyNode* find_unique(std::string_view name) const;

  bool contains(std::string_view name) const;  // any level

  /// Direct children of the labeled node, in file order. Leaves yield an
  /// empty list. Throws UnknownNode when the label names no node.
  TypeList subcategories_of(const Label& label) const;

  /// All names at one level, in file order.
  TypeList level_names(LabelLevel level) const;

  std::optional<Label> parent_of(const Label& label) const;
  /// Ancestor of `label` at `level` (identity when levels match); nullopt
  /// when `level` is finer than the label's own level.
  std::optional<Label> ancestor_at(const Label& label, LabelLevel level) const;

private:
  const TaxonomyNode* resolve(const Label& label) const;  // throws UnknownNode

  std::vector<TaxonomyNode> nodes_;
};

/// Loads and validates a taxonomy file. Throws ParseError on malformed lines
/// and IntegrityError on orphan nodes, duplicate names within a level, or
/// level violations.
Taxonomy load_taxonomy(const std::filesystem::path& path);

}  // namespace casner

#endif  // CASNER_TAXONOMY_HPP
