#include "casner/taxonomy.hpp"

#include <fstream>
#include <istream>
#include <map>
#include <sstream>

#include "casner/errors.hpp"

namespace casner {

std::string_view level_name(LabelLevel level) {
  switch (level) {
    case LabelLevel::Coarse: return "coarse";
    case LabelLevel::Medium: return "medium";
    case LabelLevel::Fine: return "fine";
    case LabelLevel::Flat: return "flat";
  }
  return "flat";
}

LabelLevel level_from_name(std::string_view name) {
  if (name == "coarse") return LabelLevel::Coarse;
  if (name == "medium") return LabelLevel::Medium;
  if (name == "fine") return LabelLevel::Fine;
  if (name == "flat") return LabelLevel::Flat;
  throw ParseError("unknown label level '" + std::string(name) + "'");
}

namespace {

LabelLevel parent_level(LabelLevel level) {
  switch (level) {
    case LabelLevel::Medium: return LabelLevel::Coarse;
    case LabelLevel::Fine: return LabelLevel::Medium;
    default: throw IntegrityError("node level has no parent level");
  }
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, '\t')) out.push_back(field);
  return out;
}

}  // namespace

Taxonomy Taxonomy::parse(std::istream& in) {
  Taxonomy tax;
  std::map<std::pair<std::string, int>, int> index;  // (name, level) -> node
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    LabelLevel level;
    try {
      level = level_from_name(fields[0]);
    } catch (const ParseError&) {
      throw ParseError("bad level field '" + fields[0] + "'", lineno);
    }
    if (level == LabelLevel::Flat)
      throw ParseError("'flat' is not a taxonomy level", lineno);
    const std::size_t want = level == LabelLevel::Coarse ? 2 : 3;
    if (fields.size() != want)
      throw ParseError("expected " + std::to_string(want) + " tab-separated fields",
                       lineno);
    const std::string& name = fields[1];
    if (name.empty()) throw ParseError("empty node name", lineno);

    TaxonomyNode node;
    node.name = name;
    node.level = level;
    if (level != LabelLevel::Coarse) {
      auto it = index.find({fields[2], static_cast<int>(parent_level(level))});
      if (it == index.end())
        throw IntegrityError("orphan node '" + name + "': parent '" + fields[2] +
                             "' not defined at the level above");
      node.parent = it->second;
    }
    auto key = std::make_pair(name, static_cast<int>(level));
    if (index.count(key))
      throw IntegrityError("duplicate name '" + name + "' within level " +
                           std::string(level_name(level)));
    int id = static_cast<int>(tax.nodes_.size());
    index.emplace(key, id);
    tax.nodes_.push_back(std::move(node));
    if (tax.nodes_.back().parent >= 0)
      tax.nodes_[static_cast<std::size_t>(tax.nodes_.back().parent)]
          .children.push_back(id);
  }
  return tax;
}

Taxonomy Taxonomy::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open taxonomy file " + path.string());
  return parse(in);
}

Taxonomy load_taxonomy(const std::filesystem::path& path) {
  return Taxonomy::load(path);
}

std::size_t Taxonomy::count(LabelLevel level) const {
  std::size_t n = 0;
  for (const auto& node : nodes_)
    if (node.level == level) ++n;
  return n;
}

const TaxonomyNode* Taxonomy::find(std::string_view name,
                                   LabelLevel level) const {
  for (const auto& node : nodes_)
    if (node.level == level && node.name == name) return &node;
  return nullptr;
}

const TaxonomyNode* Taxonomy::find_unique(std::string_view name) const {
  const TaxonomyNode* found = nullptr;
  for (const auto& node : nodes_) {
    if (node.name == name) {
      if (found) return nullptr;  // ambiguous across levels
      found = &node;
    }
  }
  return found;
}

bool Taxonomy::contains(std::string_view name) const {
  for (const auto& node : nodes_)
    if (node.name == name) return true;
  return false;
}

const TaxonomyNode* Taxonomy::resolve(const Label& label) const {
  if (label.is_unknown()) throw UnknownNode("the Unknown sentinel names no node");
  const TaxonomyNode* node = label.level() == LabelLevel::Flat
                                 ? find_unique(label.name())
                                 : find(label.name(), label.level());
  if (!node)
    throw UnknownNode("no taxonomy node for '" + label.name() + "' at level " +
                      std::string(level_name(label.level())));
  return node;
}

TypeList Taxonomy::subcategories_of(const Label& label) const {
  const TaxonomyNode* node = resolve(label);
  TypeList out;
  for (int child : node->children)
    out.names.push_back(nodes_[static_cast<std::size_t>(child)].name);
  return out;
}

TypeList Taxonomy::level_names(LabelLevel level) const {
  TypeList out;
  for (const auto& node : nodes_)
    if (node.level == level) out.names.push_back(node.name);
  return out;
}

std::optional<Label> Taxonomy::parent_of(const Label& label) const {
  const TaxonomyNode* node = resolve(label);
  if (node->parent < 0) return std::nullopt;
  const auto& p = nodes_[static_cast<std::size_t>(node->parent)];
  return Label(p.name, p.level);
}

std::optional<Label> Taxonomy::ancestor_at(const Label& label,
                                           LabelLevel level) const {
  const TaxonomyNode* node = resolve(label);
  while (node && node->level != level) {
    node = node->parent >= 0 ? &nodes_[static_cast<std::size_t>(node->parent)]
                             : nullptr;
  }
  if (!node) return std::nullopt;
  return Label(node->name, node->level);
}

}  // namespace casner
