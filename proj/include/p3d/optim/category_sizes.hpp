#pragma once

#include <array>
#include <map>
#include <string>

#include <json.hpp>

#include "p3d/core/error.hpp"

namespace p3d {

using Extents = std::array<double, 3>;  // w, l, h in meters

/// Default box extents per object category; mirrors data/category_sizes.json.
class CategorySizes {
 public:
  CategorySizes() : sizes_(defaults()) {}
  explicit CategorySizes(std::map<std::string, Extents> sizes) : sizes_(std::move(sizes)) {}

  static CategorySizes from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw SchemaError("category sizes must be an object of name -> [w,l,h]");
    std::map<std::string, Extents> out;
    for (const auto& [name, v] : doc.items()) {
      if (!v.is_array() || v.size() != 3) throw SchemaError("expected [w,l,h]", "/" + name);
      Extents e{};
      for (std::size_t k = 0; k < 3; ++k) {
        if (!v[k].is_number() || !(v[k].get<double>() > 0)) throw ValidationError("extent must be positive", "/" + name);
        e[k] = v[k].get<double>();
      }
      out[name] = e;
    }
    return CategorySizes(std::move(out));
  }

  Extents at(const std::string& category) const {
    auto it = sizes_.find(category);
    return it == sizes_.end() ? Extents{0.8, 0.8, 0.8} : it->second;
  }

  const std::map<std::string, Extents>& all() const noexcept { return sizes_; }

 private:
  static std::map<std::string, Extents> defaults() {
    return {
        {"armchair", {0.85, 0.85, 0.85}},       {"bed", {1.6, 2.1, 1.0}},
        {"bookshelf", {1.0, 0.35, 1.9}},        {"cabinet", {1.0, 0.5, 1.0}},
        {"ceiling_lamp", {0.5, 0.5, 0.3}},      {"chair", {0.5, 0.5, 0.9}},
        {"children_cabinet", {0.8, 0.45, 0.9}}, {"chinese_chair", {0.55, 0.55, 1.0}},
        {"coffee_table", {1.2, 0.6, 0.45}},     {"console_table", {1.2, 0.4, 0.8}},
        {"corner_side_table", {0.5, 0.5, 0.55}}, {"desk", {1.3, 0.65, 0.75}},
        {"dining_chair", {0.5, 0.55, 0.95}},    {"dining_table", {1.6, 0.9, 0.75}},
        {"double_bed", {1.8, 2.1, 1.05}},       {"dressing_chair", {0.45, 0.45, 0.8}},
        {"dressing_table", {1.0, 0.45, 0.8}},   {"kids_bed", {1.0, 1.9, 0.9}},
        {"l_shaped_sofa", {2.6, 1.7, 0.85}},    {"lamp", {0.4, 0.4, 0.6}},
        {"lazy_sofa", {0.9, 0.9, 0.7}},         {"lounge_chair", {0.75, 0.9, 0.9}},
        {"loveseat_sofa", {1.6, 0.85, 0.85}},   {"multi_seat_sofa", {2.3, 0.95, 0.85}},
        {"nightstand", {0.5, 0.4, 0.55}},       {"pendant_lamp", {0.5, 0.5, 0.6}},
        {"round_end_table", {0.55, 0.55, 0.6}}, {"shelf", {0.9, 0.35, 1.2}},
        {"single_bed", {1.0, 2.0, 0.95}},       {"sofa", {2.0, 0.9, 0.85}},
        {"stool", {0.4, 0.4, 0.45}},            {"table", {1.2, 0.75, 0.75}},
        {"tv_stand", {1.6, 0.45, 0.5}},         {"wardrobe", {1.6, 0.6, 2.1}},
        {"wine_cabinet", {0.9, 0.45, 1.8}},
    };
  }

  std::map<std::string, Extents> sizes_;
};

}  // namespace p3d
