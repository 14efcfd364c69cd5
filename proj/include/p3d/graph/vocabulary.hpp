#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "p3d/core/error.hpp"

namespace p3d {

enum class Tier { Easy, Hard };

/// Geometric rule attached to a relation. `None` marks relations that the
/// consistency checker skips.
enum class Rule {
  None,
  LeftOf,
  RightOf,
  FrontOf,
  BehindOf,
  BiggerThan,
  SmallerThan,
  TallerThan,
  ShorterThan,
  CloseBy,
  SymmetricalTo,
};

/// Report columns: each pair of opposite rules shares one accuracy column.
enum class RuleColumn { LeftRight, FrontBehind, BigSmall, TallShort, Close, Symmetrical };
inline constexpr std::size_t kRuleColumns = 6;
inline constexpr std::array<std::string_view, kRuleColumns> kRuleColumnNames = {
    "left/right", "front/behind", "big/small", "tall/short", "close", "symmetrical"};

inline std::optional<RuleColumn> column_of(Rule r) {
  switch (r) {
    case Rule::LeftOf:
    case Rule::RightOf: return RuleColumn::LeftRight;
    case Rule::FrontOf:
    case Rule::BehindOf: return RuleColumn::FrontBehind;
    case Rule::BiggerThan:
    case Rule::SmallerThan: return RuleColumn::BigSmall;
    case Rule::TallerThan:
    case Rule::ShorterThan: return RuleColumn::TallShort;
    case Rule::CloseBy: return RuleColumn::Close;
    case Rule::SymmetricalTo: return RuleColumn::Symmetrical;
    case Rule::None: break;
  }
  return std::nullopt;
}

inline Tier tier_of(RuleColumn c) {
  return (c == RuleColumn::Close || c == RuleColumn::Symmetrical) ? Tier::Hard : Tier::Easy;
}

inline constexpr std::array<std::pair<std::string_view, Rule>, 11> kRuleNames = {{
    {"none", Rule::None},
    {"left_of", Rule::LeftOf},
    {"right_of", Rule::RightOf},
    {"front_of", Rule::FrontOf},
    {"behind_of", Rule::BehindOf},
    {"bigger_than", Rule::BiggerThan},
    {"smaller_than", Rule::SmallerThan},
    {"taller_than", Rule::TallerThan},
    {"shorter_than", Rule::ShorterThan},
    {"close_by", Rule::CloseBy},
    {"symmetrical_to", Rule::SymmetricalTo},
}};

inline std::string_view to_string(Rule r) {
  for (const auto& [name, rule] : kRuleNames)
    if (rule == r) return name;
  return "none";
}

inline std::optional<Rule> rule_from_string(std::string_view s) {
  for (const auto& [name, rule] : kRuleNames)
    if (name == s) return rule;
  return std::nullopt;
}

struct ObjectCategory {
  int id = 0;
  std::string name;
  friend bool operator==(const ObjectCategory&, const ObjectCategory&) = default;
};

struct RelationCategory {
  int id = 0;
  std::string name;
  Rule rule = Rule::None;
  std::optional<Tier> tier;  // set for ruled relations
  friend bool operator==(const RelationCategory&, const RelationCategory&) = default;
};

/// Object and relation category lists. Ids are dense indices.
class Vocabulary {
 public:
  Vocabulary(std::vector<std::string> objects, std::vector<std::pair<std::string, Rule>> relations) {
    for (auto& name : objects) {
      const int id = static_cast<int>(objects_.size());
      if (!object_index_.emplace(name, id).second) throw ValidationError("duplicate object category '" + name + "'");
      objects_.push_back({id, std::move(name)});
    }
    for (auto& [name, rule] : relations) {
      const int id = static_cast<int>(relations_.size());
      if (!relation_index_.emplace(name, id).second)
        throw ValidationError("duplicate relation category '" + name + "'");
      std::optional<Tier> tier;
      if (auto col = column_of(rule)) tier = tier_of(*col);
      relations_.push_back({id, std::move(name), rule, tier});
    }
    if (objects_.empty() || relations_.empty()) throw ValidationError("vocabulary lists must be nonempty");
  }

  const std::vector<ObjectCategory>& objects() const noexcept { return objects_; }
  const std::vector<RelationCategory>& relations() const noexcept { return relations_; }

  std::optional<int> object_id(std::string_view name) const {
    auto it = object_index_.find(std::string(name));
    return it == object_index_.end() ? std::nullopt : std::optional<int>(it->second);
  }
  std::optional<int> relation_id(std::string_view name) const {
    auto it = relation_index_.find(std::string(name));
    return it == relation_index_.end() ? std::nullopt : std::optional<int>(it->second);
  }

  const ObjectCategory& object(int id) const { return objects_.at(static_cast<std::size_t>(id)); }
  const RelationCategory& relation(int id) const { return relations_.at(static_cast<std::size_t>(id)); }

  /// First relation carrying the given rule, if any.
  std::optional<int> relation_for_rule(Rule r) const {
    for (const auto& rel : relations_)
      if (rel.rule == r) return rel.id;
    return std::nullopt;
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.objects_ == b.objects_ && a.relations_ == b.relations_;
  }

 private:
  std::vector<ObjectCategory> objects_;
  std::vector<RelationCategory> relations_;
  std::unordered_map<std::string, int> object_index_;
  std::unordered_map<std::string, int> relation_index_;
};

/// 35 object / 15 relation categories following the SG-FRONT naming.
/// Mirrors data/vocab.json.
inline std::shared_ptr<const Vocabulary> default_vocabulary() {
  static const auto vocab = std::make_shared<const Vocabulary>(
      std::vector<std::string>{
          "armchair",        "bed",           "bookshelf",      "cabinet",         "ceiling_lamp",
          "chair",           "children_cabinet", "chinese_chair", "coffee_table",  "console_table",
          "corner_side_table", "desk",        "dining_chair",   "dining_table",    "double_bed",
          "dressing_chair",  "dressing_table", "kids_bed",      "l_shaped_sofa",   "lamp",
          "lazy_sofa",       "lounge_chair",  "loveseat_sofa",  "multi_seat_sofa", "nightstand",
          "pendant_lamp",    "round_end_table", "shelf",        "single_bed",      "sofa",
          "stool",           "table",         "tv_stand",       "wardrobe",        "wine_cabinet"},
      std::vector<std::pair<std::string, Rule>>{
          {"left of", Rule::LeftOf},
          {"right of", Rule::RightOf},
          {"front of", Rule::FrontOf},
          {"behind of", Rule::BehindOf},
          {"close by", Rule::CloseBy},
          {"above", Rule::None},
          {"standing on", Rule::None},
          {"bigger than", Rule::BiggerThan},
          {"smaller than", Rule::SmallerThan},
          {"taller than", Rule::TallerThan},
          {"shorter than", Rule::ShorterThan},
          {"symmetrical to", Rule::SymmetricalTo},
          {"same style as", Rule::None},
          {"same super category as", Rule::None},
          {"same material as", Rule::None},
      });
  return vocab;
}

/// Loads `{"objects": [name...], "relations": [{"name": str, "rule": str}...]}`.
inline std::shared_ptr<const Vocabulary> vocabulary_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("objects") || !doc["objects"].is_array() || !doc.contains("relations") ||
      !doc["relations"].is_array())
    throw SchemaError("vocabulary must have 'objects' and 'relations' arrays");
  std::vector<std::string> objects;
  for (std::size_t i = 0; i < doc["objects"].size(); ++i) {
    const auto& o = doc["objects"][i];
    if (!o.is_string()) throw SchemaError("expected string", "/objects/" + std::to_string(i));
    objects.push_back(o.get<std::string>());
  }
  std::vector<std::pair<std::string, Rule>> relations;
  for (std::size_t i = 0; i < doc["relations"].size(); ++i) {
    const auto& r = doc["relations"][i];
    const std::string path = "/relations/" + std::to_string(i);
    if (!r.is_object() || !r.contains("name") || !r["name"].is_string())
      throw SchemaError("expected {name, rule}", path);
    Rule rule = Rule::None;
    if (r.contains("rule")) {
      if (!r["rule"].is_string()) throw SchemaError("rule must be a string", path + "/rule");
      auto parsed = rule_from_string(r["rule"].get<std::string>());
      if (!parsed) throw ValidationError("unknown rule '" + r["rule"].get<std::string>() + "'", path + "/rule");
      rule = *parsed;
    }
    relations.emplace_back(r["name"].get<std::string>(), rule);
  }
  return std::make_shared<const Vocabulary>(std::move(objects), std::move(relations));
}

inline nlohmann::json vocabulary_to_json(const Vocabulary& v) {
  nlohmann::json doc;
  doc["objects"] = nlohmann::json::array();
  for (const auto& o : v.objects()) doc["objects"].push_back(o.name);
  doc["relations"] = nlohmann::json::array();
  for (const auto& r : v.relations()) {
    nlohmann::json e{{"name", r.name}, {"rule", std::string(to_string(r.rule))}};
    if (r.tier) e["tier"] = *r.tier == Tier::Easy ? "easy" : "hard";
    doc["relations"].push_back(std::move(e));
  }
  return doc;
}

}  // namespace p3d
