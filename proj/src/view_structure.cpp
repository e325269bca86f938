#include "agglo/view_structure.hpp"

#include "agglo/error.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <unordered_map>

namespace agglo {

namespace {

constexpr std::size_t kNoParent = static_cast<std::size_t>(-1);

}  // namespace

ViewStructure::ViewStructure(std::vector<ViewNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) {
    throw Error(ErrorCode::empty_layer, "view structure has no nodes");
  }
  std::unordered_map<std::string, std::size_t> by_id;
  int top = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const ViewNode& v = nodes_[i];
    if (v.layer < 0) {
      throw Error(ErrorCode::bad_layering, "node '" + v.id + "' has negative layer");
    }
    if (!by_id.emplace(v.id, i).second) {
      throw Error(ErrorCode::duplicate_node, "duplicate node id '" + v.id + "'");
    }
    top = std::max(top, v.layer);
  }

  std::vector<std::size_t> per_layer(static_cast<std::size_t>(top) + 1, 0);
  for (const ViewNode& v : nodes_) ++per_layer[static_cast<std::size_t>(v.layer)];
  for (int i = 0; i <= top; ++i) {
    if (per_layer[static_cast<std::size_t>(i)] == 0) {
      throw Error(ErrorCode::empty_layer, "layer " + std::to_string(i) + " has no views");
    }
  }
  if (per_layer[static_cast<std::size_t>(top)] != 1) {
    throw Error(ErrorCode::root_count, "top layer " + std::to_string(top) + " must hold exactly one view, found " +
                                           std::to_string(per_layer[static_cast<std::size_t>(top)]));
  }
  if (top == 0) {
    throw Error(ErrorCode::bad_layering, "view structure needs at least one layer above the leaves");
  }

  child_idx_.assign(nodes_.size(), {});
  parent_.assign(nodes_.size(), kNoParent);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const ViewNode& v = nodes_[i];
    if (v.layer == 0) {
      if (!v.children.empty()) {
        throw Error(ErrorCode::bad_layering, "leaf '" + v.id + "' must not have children");
      }
      if (v.data.empty()) {
        throw Error(ErrorCode::missing_view, "leaf '" + v.id + "' does not reference a data view");
      }
      continue;
    }
    if (v.children.empty()) {
      throw Error(ErrorCode::bad_layering, "internal view '" + v.id + "' has no subviews");
    }
    for (const std::string& cid : v.children) {
      auto it = by_id.find(cid);
      if (it == by_id.end()) {
        throw Error(ErrorCode::unknown_node, "view '" + v.id + "' lists unknown subview '" + cid + "'");
      }
      const std::size_t c = it->second;
      if (nodes_[c].layer != v.layer - 1) {
        throw Error(ErrorCode::bad_layering, "subview '" + cid + "' of '" + v.id + "' is on layer " +
                                                 std::to_string(nodes_[c].layer) + ", expected " +
                                                 std::to_string(v.layer - 1));
      }
      if (parent_[c] != kNoParent) {
        throw Error(ErrorCode::multi_parent, "view '" + cid + "' is a subview of both '" + nodes_[parent_[c]].id +
                                                 "' and '" + v.id + "'");
      }
      parent_[c] = i;
      child_idx_[i].push_back(c);
    }
  }

  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].layer == top) {
      root_ = i;
      parent_[i] = i;
    } else if (parent_[i] == kNoParent) {
      throw Error(ErrorCode::orphan_node, "view '" + nodes_[i].id + "' on layer " +
                                              std::to_string(nodes_[i].layer) + " has no parent");
    }
  }

  position_.assign(nodes_.size(), 0);
  for (int l = 0; l <= top; ++l) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].layer != l) continue;
      if (l == 0) {
        position_[i] = leaves_.size();
        leaves_.push_back(i);
      } else {
        position_[i] = internal_.size();
        internal_.push_back(i);
      }
    }
  }
}

ViewStructure ViewStructure::flat(const std::vector<std::string>& views) {
  std::vector<ViewNode> nodes;
  ViewNode root{"consensus", 1, {}, {}};
  for (const std::string& name : views) {
    nodes.push_back({name, 0, {}, name});
    root.children.push_back(name);
  }
  nodes.push_back(std::move(root));
  return ViewStructure(std::move(nodes));
}

ViewStructure ViewStructure::from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array()) {
    throw Error(ErrorCode::parse, "view structure JSON must be an object with a \"nodes\" array");
  }
  std::vector<ViewNode> nodes;
  try {
    for (const auto& item : doc["nodes"]) {
      ViewNode v;
      v.id = item.at("id").get<std::string>();
      v.layer = item.at("layer").get<int>();
      if (item.contains("children")) v.children = item["children"].get<std::vector<std::string>>();
      if (item.contains("data") && !item["data"].is_null()) v.data = item["data"].get<std::string>();
      nodes.push_back(std::move(v));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("view structure JSON: ") + e.what());
  }
  return ViewStructure(std::move(nodes));
}

ViewStructure ViewStructure::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::missing_file, "cannot open view structure " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, path.string() + ": " + e.what());
  }
  return from_json(doc);
}

nlohmann::json ViewStructure::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const ViewNode& v : nodes_) {
    nlohmann::json item{{"id", v.id}, {"layer", v.layer}, {"children", v.children}};
    if (v.layer == 0) item["data"] = v.data;
    arr.push_back(std::move(item));
  }
  return {{"nodes", std::move(arr)}};
}

void ViewStructure::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write view structure " + path.string());
  out << to_json().dump(2) << '\n';
  if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

std::size_t ViewStructure::node_index(const std::string& id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id == id) return i;
  }
  throw Error(ErrorCode::unknown_node, "no view named '" + id + "'");
}

std::size_t ViewStructure::leaf_position(std::size_t idx) const {
  if (!is_leaf(idx)) throw Error(ErrorCode::invalid_argument, "'" + nodes_[idx].id + "' is not a leaf");
  return position_[idx];
}

std::size_t ViewStructure::internal_position(std::size_t idx) const {
  if (is_leaf(idx)) throw Error(ErrorCode::invalid_argument, "'" + nodes_[idx].id + "' is a leaf");
  return position_[idx];
}

std::vector<std::size_t> ViewStructure::layer(int i) const {
  std::vector<std::size_t> out;
  for (std::size_t idx = 0; idx < nodes_.size(); ++idx) {
    if (nodes_[idx].layer == i) out.push_back(idx);
  }
  return out;
}

std::size_t subview_count(const ViewStructure& structure, std::size_t node) {
  if (structure.is_leaf(node)) {
    throw Error(ErrorCode::invalid_argument,
                "subview_count: '" + structure.node(node).id + "' is a leaf and has no subviews");
  }
  return structure.children(node).size();
}

StructureReport validate(const ViewStructure& structure, const Dataset& dataset) {
  StructureReport report;
  report.depth = structure.depth();
  report.leaf_count = structure.leaves().size();
  std::string first;
  for (std::size_t leaf : structure.leaves()) {
    const ViewNode& v = structure.node(leaf);
    auto it = dataset.views.find(v.data);
    if (it == dataset.views.end()) {
      throw Error(ErrorCode::missing_view, "leaf '" + v.id + "' references unknown view '" + v.data + "'");
    }
    const Index rows = it->second.rows();
    if (first.empty()) {
      first = v.data;
      report.samples = rows;
    } else if (rows != report.samples) {
      throw Error(ErrorCode::sample_count_mismatch, "view '" + v.data + "' has " + std::to_string(rows) +
                                                        " samples but view '" + first + "' has " +
                                                        std::to_string(report.samples));
    }
  }
  if (dataset.labels && static_cast<Index>(dataset.labels->size()) != report.samples) {
    throw Error(ErrorCode::sample_count_mismatch, "labels have " + std::to_string(dataset.labels->size()) +
                                                      " entries but views have " + std::to_string(report.samples) +
                                                      " samples");
  }
  return report;
}

}  // namespace agglo
