#pragma once

#include "agglo/dataset.hpp"

#include <json.hpp>

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace agglo {

/// One view in the hierarchy. Leaves (layer 0) name a dataset view in
/// `data`; internal nodes list the ids of their subviews.
struct ViewNode {
  std::string id;
  int layer = 0;
  std::vector<std::string> children;
  std::string data;
};

/// An m-layer tree of views. Layer 0 holds the independent subviews, layer m
/// the single consensus view. Every node below the root has exactly one
/// parent, one layer up.
///
/// Construction validates the tree shape; a ViewStructure object is always
/// well formed. Nodes are addressed by their position in `nodes()`.
class ViewStructure {
 public:
  explicit ViewStructure(std::vector<ViewNode> nodes);

  /// root <- [leaf views...], m = 1.
  static ViewStructure flat(const std::vector<std::string>& views);

  static ViewStructure from_json(const nlohmann::json& doc);
  static ViewStructure load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void save(const std::filesystem::path& path) const;

  std::span<const ViewNode> nodes() const { return nodes_; }
  const ViewNode& node(std::size_t idx) const { return nodes_.at(idx); }
  std::size_t node_index(const std::string& id) const;

  /// m, the layer of the root.
  int depth() const { return nodes_[root_].layer; }
  std::size_t root() const { return root_; }

  /// Leaf node indices; their order fixes the order of per-leaf parameters.
  std::span<const std::size_t> leaves() const { return leaves_; }
  /// Internal node indices ordered by ascending layer (children before
  /// parents). The root is last.
  std::span<const std::size_t> internal_bottom_up() const { return internal_; }
  std::span<const std::size_t> children(std::size_t idx) const { return child_idx_.at(idx); }
  /// Parent index; equals the node's own index for the root.
  std::size_t parent(std::size_t idx) const { return parent_.at(idx); }
  bool is_leaf(std::size_t idx) const { return nodes_.at(idx).layer == 0; }
  /// Position of a leaf node in leaves().
  std::size_t leaf_position(std::size_t idx) const;
  /// Position of an internal node in internal_bottom_up().
  std::size_t internal_position(std::size_t idx) const;
  /// Node indices of layer i.
  std::vector<std::size_t> layer(int i) const;

 private:
  std::vector<ViewNode> nodes_;
  std::size_t root_ = 0;
  std::vector<std::size_t> leaves_;
  std::vector<std::size_t> internal_;
  std::vector<std::vector<std::size_t>> child_idx_;
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> position_;
};

/// |v|: number of subviews agglomerated into an internal node.
std::size_t subview_count(const ViewStructure& structure, std::size_t node);

struct StructureReport {
  Index samples = 0;
  std::size_t leaf_count = 0;
  int depth = 0;
};

/// Checks that every leaf references a dataset view and that all referenced
/// views share one sample count.
StructureReport validate(const ViewStructure& structure, const Dataset& dataset);

}  // namespace agglo
