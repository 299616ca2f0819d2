#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "dtx/criteria.hpp"
#include "dtx/data.hpp"

namespace dtx {

/// Boolean test x[feature] <= threshold; true routes left.
struct NodeFunction {
  std::size_t feature = 0;
  double threshold = 0.0;

  bool goes_left(std::span<const double> x) const { return x[feature] <= threshold; }
  bool operator==(const NodeFunction&) const = default;
};

/// Finite node function class F in a fixed order (feature-major, threshold
/// ascending). The order is the tie-breaking order of the learner.
class NodeFunctionClass {
 public:
  NodeFunctionClass() = default;
  /// Sorts into canonical order; throws ParamError on duplicates.
  explicit NodeFunctionClass(std::vector<NodeFunction> functions);

  std::size_t size() const { return functions_.size(); }
  bool empty() const { return functions_.empty(); }
  const NodeFunction& operator[](std::size_t i) const { return functions_[i]; }
  const std::vector<NodeFunction>& functions() const { return functions_; }
  auto begin() const { return functions_.begin(); }
  auto end() const { return functions_.end(); }

 private:
  std::vector<NodeFunction> functions_;
};

/// Midpoints of consecutive distinct sorted values, per feature. Throws
/// DataError when every feature is constant.
NodeFunctionClass build_node_functions(const Dataset& d);

/// Training statistics of the examples reaching a node. Classification uses
/// `counts`; regression uses `sum` and `sum_sq`. `weight` is the raw count.
struct NodeStats {
  double weight = 0.0;
  std::vector<double> counts;
  double sum = 0.0;
  double sum_sq = 0.0;

  bool operator==(const NodeStats&) const = default;
};

struct TreeNode {
  std::optional<NodeFunction> split;  ///< empty for leaves
  int left = -1;
  int right = -1;
  NodeStats stats;

  bool is_leaf() const { return !split.has_value(); }
  bool operator==(const TreeNode&) const = default;
};

/// Binary threshold tree. Nodes are stored in preorder with the root at index
/// 0; internal-node statistics are always the sum of their children's.
class DecisionTree {
 public:
  /// Validates structure and recomputes internal statistics from the leaves.
  DecisionTree(Task task, std::size_t classes, std::size_t attributes, std::vector<TreeNode> nodes);

  static DecisionTree leaf(Task task, std::size_t classes, std::size_t attributes, NodeStats stats);

  Task task() const { return task_; }
  std::size_t classes() const { return classes_; }
  std::size_t attributes() const { return attributes_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t leaf_count() const;
  std::size_t internal_count() const { return nodes_.size() - leaf_count(); }
  std::size_t depth() const;
  std::vector<int> parents() const;

  /// Majority class of a node's training examples (ties -> smallest index).
  int node_label(int id) const;
  /// Mean target of a node's training examples.
  double node_prediction(int id) const;
  /// Training examples at `id` that disagree with its majority label.
  double node_errors(int id) const;

  int route(std::span<const double> x) const;
  int predict_class(std::span<const double> x) const;
  double predict_value(std::span<const double> x) const;

  /// Copy in which every listed node becomes a leaf (descendants dropped).
  DecisionTree collapse(std::span<const int> ids) const;
  /// Same structure, statistics recomputed from `d`.
  DecisionTree refit(const Dataset& d) const;

  /// Structural subtree check: same root and every node of this tree is
  /// present in `other` with the same test (leaves may be internal in other).
  bool is_pruned_subtree_of(const DecisionTree& other) const;

  bool operator==(const DecisionTree&) const = default;

 private:
  DecisionTree() = default;
  void check_and_refresh();

  Task task_ = Task::classification;
  std::size_t classes_ = 0;
  std::size_t attributes_ = 0;
  std::vector<TreeNode> nodes_;
};

nlohmann::json to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const nlohmann::json& j);

/// Stop after `size` internal nodes, or when every leaf reaches `max_depth`.
struct StopRule {
  std::optional<std::size_t> size;
  std::optional<std::size_t> max_depth;

  static StopRule internal_nodes(std::size_t t) { return {t, std::nullopt}; }
  static StopRule depth(std::size_t m) { return {std::nullopt, m}; }
};

/// Objective values recorded while learning: G(T) before the first split and
/// after each split.
struct LearnTrace {
  std::vector<double> objective;
};

/// Greedy top-down learner. Repeatedly applies the (leaf, node function) pair
/// that minimises the splitting function G(T) = sum_l w(l) g(l), breaking
/// ties by leaf creation order then by F's order. Pure leaves and splits that
/// leave a child empty are never candidates.
DecisionTree top_down_learn(const Dataset& d, const NodeFunctionClass& functions,
                            const CriterionParams& criterion, const StopRule& stop,
                            LearnTrace* trace = nullptr);

/// G(T) of a tree under a criterion, from the stored leaf statistics.
double splitting_objective(const DecisionTree& tree, const CriterionParams& criterion);

double zero_one_loss(const DecisionTree& tree, const Dataset& d);
double mse_loss(const DecisionTree& tree, const Dataset& d);

}  // namespace dtx
