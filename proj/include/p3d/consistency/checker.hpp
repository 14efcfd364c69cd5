#pragma once

#include <array>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "p3d/core/error.hpp"
#include "p3d/geometry/layout.hpp"
#include "p3d/graph/scene_graph.hpp"

namespace p3d {

/// Rule thresholds (meters / ratios) and the corner-distance definitions.
struct RuleThresholds {
  double iou = 0.3;
  double volume_ratio = 0.15;
  double height_ratio = 0.1;
  double close_distance = 0.45;
  double symmetry_distance = 0.45;
  CornerDistanceMode close_mode = CornerDistanceMode::MinPair;
  CornerDistanceMode symmetry_mode = CornerDistanceMode::MatchedMean;
};

/// (V_i - V_j) / V_i.
inline double volume_ratio(const Layout7DoF& bi, const Layout7DoF& bj) {
  const double vi = box_volume(bi);
  return (vi - box_volume(bj)) / vi;
}

/// ((z_i + h_i) - (z_j + h_j)) / (z_i + h_i).
inline double height_ratio(const Layout7DoF& bi, const Layout7DoF& bj) {
  const double ti = bi.cz + bi.h;
  return (ti - (bj.cz + bj.h)) / ti;
}

/// Distance between corners of a flipped b_i and b_j, minimized over the
/// two flip axes.
inline double symmetry_distance(const Layout7DoF& bi, const Layout7DoF& bj, CornerDistanceMode mode) {
  const auto cj = corners(bj);
  const double dx = corner_set_distance(corners(flip(bi, FlipAxis::X)), cj, mode);
  const double dy = corner_set_distance(corners(flip(bi, FlipAxis::Y)), cj, mode);
  return std::min(dx, dy);
}

/// True iff the ordered pair (b_i, b_j) satisfies the rule.
inline bool check_rule(Rule rule, const Layout7DoF& bi, const Layout7DoF& bj, const RuleThresholds& th = {}) {
  switch (rule) {
    case Rule::LeftOf: return bi.cx < bj.cx && aabb_iou(bi, bj) < th.iou;
    case Rule::RightOf: return bi.cx > bj.cx && aabb_iou(bi, bj) < th.iou;
    case Rule::FrontOf: return bi.cy < bj.cy && aabb_iou(bi, bj) < th.iou;
    case Rule::BehindOf: return bi.cy > bj.cy && aabb_iou(bi, bj) < th.iou;
    case Rule::BiggerThan: return volume_ratio(bi, bj) > th.volume_ratio;
    case Rule::SmallerThan: return volume_ratio(bi, bj) < -th.volume_ratio;
    case Rule::TallerThan: return height_ratio(bi, bj) > th.height_ratio;
    case Rule::ShorterThan: return height_ratio(bi, bj) < -th.height_ratio;
    case Rule::CloseBy: return corner_set_distance(corners(bi), corners(bj), th.close_mode) < th.close_distance;
    case Rule::SymmetricalTo: return symmetry_distance(bi, bj, th.symmetry_mode) < th.symmetry_distance;
    case Rule::None: break;
  }
  throw ValidationError("relation has no geometric rule");
}

/// Checks one relation category; nullopt when it carries no rule.
inline std::optional<bool> check_edge(const RelationCategory& predicate, const Layout7DoF& bi, const Layout7DoF& bj,
                                      const RuleThresholds& th = {}) {
  if (predicate.rule == Rule::None) return std::nullopt;
  return check_rule(predicate.rule, bi, bj, th);
}

struct RuleTally {
  std::size_t checked = 0;
  std::size_t satisfied = 0;
  double accuracy() const { return checked ? static_cast<double>(satisfied) / static_cast<double>(checked) : 0.0; }
};

/// Unweighted mean of the given accuracies (empty -> 0).
inline double macro_mean(std::span<const double> accuracies) {
  if (accuracies.empty()) return 0.0;
  return std::accumulate(accuracies.begin(), accuracies.end(), 0.0) / static_cast<double>(accuracies.size());
}

struct ConsistencyReport {
  std::map<std::string, RuleTally> per_relation;
  std::array<RuleTally, kRuleColumns> per_column{};
  std::vector<bool> edge_satisfied;  // per edge; false for unruled edges
  std::vector<bool> edge_ruled;
  std::size_t skipped_unruled = 0;
  double easy_mean = 0.0;
  double hard_mean = 0.0;
  double msg_macro = 0.0;
  double msg_micro = 0.0;
  RuleThresholds thresholds;

  std::size_t total_checked() const {
    std::size_t n = 0;
    for (const auto& c : per_column) n += c.checked;
    return n;
  }
  std::size_t total_satisfied() const {
    std::size_t n = 0;
    for (const auto& c : per_column) n += c.satisfied;
    return n;
  }
  std::size_t violations() const { return total_checked() - total_satisfied(); }
};

/// Checks every ruled edge of `g` against `layouts` (indexed by node id).
/// Columns with no checked edges are left out of the means.
inline ConsistencyReport consistency_report(const SceneGraph& g, std::span<const Layout7DoF> layouts,
                                            const RuleThresholds& th = {}) {
  if (layouts.size() != g.node_count())
    throw ValidationError("layout count " + std::to_string(layouts.size()) + " != node count " +
                          std::to_string(g.node_count()));
  ConsistencyReport r;
  r.thresholds = th;
  r.edge_satisfied.assign(g.edge_count(), false);
  r.edge_ruled.assign(g.edge_count(), false);
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const auto& edge = g.edges()[e];
    const auto& rel = g.vocab().relation(edge.predicate);
    const auto col = column_of(rel.rule);
    if (!col) {
      ++r.skipped_unruled;
      continue;
    }
    const bool ok = check_rule(rel.rule, layouts[static_cast<std::size_t>(edge.subject)],
                               layouts[static_cast<std::size_t>(edge.object)], th);
    r.edge_ruled[e] = true;
    r.edge_satisfied[e] = ok;
    auto& tally = r.per_relation[rel.name];
    auto& column = r.per_column[static_cast<std::size_t>(*col)];
    ++tally.checked;
    ++column.checked;
    if (ok) {
      ++tally.satisfied;
      ++column.satisfied;
    }
  }
  std::vector<double> all, easy, hard;
  for (std::size_t c = 0; c < kRuleColumns; ++c) {
    if (!r.per_column[c].checked) continue;
    const double acc = r.per_column[c].accuracy();
    all.push_back(acc);
    (tier_of(static_cast<RuleColumn>(c)) == Tier::Easy ? easy : hard).push_back(acc);
  }
  r.msg_macro = macro_mean(all);
  r.easy_mean = macro_mean(easy);
  r.hard_mean = macro_mean(hard);
  const std::size_t checked = r.total_checked();
  r.msg_micro = checked ? static_cast<double>(r.total_satisfied()) / static_cast<double>(checked) : 0.0;
  return r;
}

inline nlohmann::json report_to_json(const ConsistencyReport& r) {
  nlohmann::json doc;
  nlohmann::json rel = nlohmann::json::object();
  for (const auto& [name, t] : r.per_relation)
    rel[name] = {{"checked", t.checked}, {"satisfied", t.satisfied}, {"accuracy", t.accuracy()}};
  doc["per_relation"] = std::move(rel);
  nlohmann::json cols = nlohmann::json::object();
  for (std::size_t c = 0; c < kRuleColumns; ++c) {
    const auto& t = r.per_column[c];
    cols[std::string(kRuleColumnNames[c])] = {
        {"checked", t.checked}, {"satisfied", t.satisfied}, {"accuracy", t.checked ? nlohmann::json(t.accuracy()) : nlohmann::json()}};
  }
  doc["per_column"] = std::move(cols);
  doc["edges"] = nlohmann::json::array();
  for (std::size_t e = 0; e < r.edge_satisfied.size(); ++e)
    doc["edges"].push_back(r.edge_ruled[e] ? nlohmann::json(static_cast<bool>(r.edge_satisfied[e])) : nlohmann::json());
  doc["easy_mean"] = r.easy_mean;
  doc["hard_mean"] = r.hard_mean;
  doc["msg_macro"] = r.msg_macro;
  doc["msg_micro"] = r.msg_micro;
  doc["checked"] = r.total_checked();
  doc["satisfied"] = r.total_satisfied();
  doc["skipped_unruled"] = r.skipped_unruled;
  doc["distance_modes"] = {{"close by", to_string(r.thresholds.close_mode)},
                           {"symmetrical to", to_string(r.thresholds.symmetry_mode)}};
  return doc;
}

inline std::string report_to_text(const ConsistencyReport& r) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "%-14s %8s %10s %9s\n", "column", "checked", "satisfied", "accuracy");
  out << line;
  for (std::size_t c = 0; c < kRuleColumns; ++c) {
    const auto& t = r.per_column[c];
    if (t.checked)
      std::snprintf(line, sizeof line, "%-14s %8zu %10zu %9.4f\n", kRuleColumnNames[c].data(), t.checked, t.satisfied,
                    t.accuracy());
    else
      std::snprintf(line, sizeof line, "%-14s %8zu %10zu %9s\n", kRuleColumnNames[c].data(), t.checked, t.satisfied, "-");
    out << line;
  }
  std::snprintf(line, sizeof line, "easy %.4f  hard %.4f  mSG(macro) %.4f  mSG(micro) %.4f  skipped %zu\n", r.easy_mean,
                r.hard_mean, r.msg_macro, r.msg_micro, r.skipped_unruled);
  out << line;
  std::snprintf(line, sizeof line, "distance modes: close by=%s, symmetrical to=%s\n", to_string(r.thresholds.close_mode),
                to_string(r.thresholds.symmetry_mode));
  out << line;
  return out.str();
}

}  // namespace p3d
