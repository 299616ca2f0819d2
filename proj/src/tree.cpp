#include "dtx/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "dtx/error.hpp"

namespace dtx {

// ---------------------------------------------------------------------------
// Node function class

NodeFunctionClass::NodeFunctionClass(std::vector<NodeFunction> functions)
    : functions_(std::move(functions)) {
  std::sort(functions_.begin(), functions_.end(), [](const NodeFunction& a, const NodeFunction& b) {
    return a.feature != b.feature ? a.feature < b.feature : a.threshold < b.threshold;
  });
  if (std::adjacent_find(functions_.begin(), functions_.end()) != functions_.end())
    throw ParamError("node function class contains duplicates");
}

NodeFunctionClass build_node_functions(const Dataset& d) {
  std::vector<NodeFunction> out;
  std::vector<double> column(d.size());
  for (std::size_t j = 0; j < d.attributes(); ++j) {
    for (std::size_t i = 0; i < d.size(); ++i) column[i] = d.feature(i, j);
    std::sort(column.begin(), column.end());
    for (std::size_t i = 1; i < column.size(); ++i)
      if (column[i] != column[i - 1])
        out.push_back({j, column[i - 1] + (column[i] - column[i - 1]) / 2.0});
  }
  if (out.empty()) throw DataError("every feature is constant; the node function class is empty");
  return NodeFunctionClass(std::move(out));
}

// ---------------------------------------------------------------------------
// DecisionTree

namespace {

void add_stats(NodeStats& into, const NodeStats& from) {
  into.weight += from.weight;
  if (into.counts.size() < from.counts.size()) into.counts.resize(from.counts.size(), 0.0);
  for (std::size_t i = 0; i < from.counts.size(); ++i) into.counts[i] += from.counts[i];
  into.sum += from.sum;
  into.sum_sq += from.sum_sq;
}

NodeStats empty_stats(Task task, std::size_t classes) {
  NodeStats s;
  if (task == Task::classification) s.counts.assign(classes, 0.0);
  return s;
}

}  // namespace

DecisionTree::DecisionTree(Task task, std::size_t classes, std::size_t attributes,
                           std::vector<TreeNode> nodes)
    : task_(task), classes_(classes), attributes_(attributes), nodes_(std::move(nodes)) {
  check_and_refresh();
}

DecisionTree DecisionTree::leaf(Task task, std::size_t classes, std::size_t attributes,
                                NodeStats stats) {
  TreeNode n;
  n.stats = std::move(stats);
  return DecisionTree(task, classes, attributes, {std::move(n)});
}

// Renumbers into preorder, verifies the binary structure and recomputes every
// internal node's statistics as the sum of its children.
void DecisionTree::check_and_refresh() {
  if (nodes_.empty()) throw ParamError("a tree needs at least one node");
  if (task_ == Task::classification && classes_ < 2)
    throw ParamError("classification trees need at least two classes");
  const int total = static_cast<int>(nodes_.size());

  std::vector<TreeNode> ordered;
  ordered.reserve(nodes_.size());
  std::vector<char> seen(nodes_.size(), 0);
  // Iterative preorder; children are patched once their new index is known.
  struct Frame {
    int old_id;
    int parent_new;
    bool is_left;
  };
  std::vector<Frame> stack{{0, -1, false}};
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    if (f.old_id < 0 || f.old_id >= total) throw ParamError("tree child index out of range");
    if (seen[static_cast<std::size_t>(f.old_id)]++) throw ParamError("tree node reachable twice");
    const TreeNode& src = nodes_[static_cast<std::size_t>(f.old_id)];
    const int new_id = static_cast<int>(ordered.size());
    ordered.push_back(src);
    if (f.parent_new >= 0)
      (f.is_left ? ordered[static_cast<std::size_t>(f.parent_new)].left
                 : ordered[static_cast<std::size_t>(f.parent_new)].right) = new_id;
    if (src.is_leaf()) {
      ordered.back().left = ordered.back().right = -1;
      const NodeStats& s = src.stats;
      if (!(s.weight >= 0.0)) throw ParamError("leaf weight must be nonnegative");
      if (task_ == Task::classification) {
        if (s.counts.size() != classes_) throw ParamError("leaf class counts have wrong length");
        double total_count = 0.0;
        for (double c : s.counts) {
          if (!(c >= 0.0)) throw ParamError("leaf class counts must be nonnegative");
          total_count += c;
        }
        if (std::abs(total_count - s.weight) > 1e-9 * std::max(1.0, s.weight))
          throw ParamError("leaf class counts do not sum to the leaf weight");
      }
    } else {
      if (src.split->feature >= attributes_) throw ParamError("node function feature out of range");
      stack.push_back({src.right, new_id, false});
      stack.push_back({src.left, new_id, true});
    }
  }
  if (ordered.size() != nodes_.size()) throw ParamError("tree contains unreachable nodes");
  nodes_ = std::move(ordered);

  for (std::size_t i = nodes_.size(); i-- > 0;) {
    TreeNode& n = nodes_[i];
    if (n.is_leaf()) continue;
    NodeStats s = empty_stats(task_, classes_);
    add_stats(s, nodes_[static_cast<std::size_t>(n.left)].stats);
    add_stats(s, nodes_[static_cast<std::size_t>(n.right)].stats);
    n.stats = std::move(s);
  }
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes_[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return best;
}

std::vector<int> DecisionTree::parents() const {
  std::vector<int> p(nodes_.size(), -1);
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (!nodes_[i].is_leaf()) {
      p[static_cast<std::size_t>(nodes_[i].left)] = static_cast<int>(i);
      p[static_cast<std::size_t>(nodes_[i].right)] = static_cast<int>(i);
    }
  return p;
}

int DecisionTree::node_label(int id) const {
  const auto& counts = node(id).stats.counts;
  if (counts.empty()) throw ParamError("node labels are defined for classification trees only");
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

double DecisionTree::node_prediction(int id) const {
  const NodeStats& s = node(id).stats;
  return s.weight > 0.0 ? s.sum / s.weight : 0.0;
}

double DecisionTree::node_errors(int id) const {
  const NodeStats& s = node(id).stats;
  return s.weight - s.counts[static_cast<std::size_t>(node_label(id))];
}

int DecisionTree::route(std::span<const double> x) const {
  if (x.size() != attributes_)
    throw ParamError("feature vector has " + std::to_string(x.size()) + " entries, tree expects " +
                     std::to_string(attributes_));
  int id = 0;
  while (!node(id).is_leaf()) id = node(id).split->goes_left(x) ? node(id).left : node(id).right;
  return id;
}

int DecisionTree::predict_class(std::span<const double> x) const {
  if (task_ != Task::classification) throw ParamError("predict_class on a regression tree");
  return node_label(route(x));
}

double DecisionTree::predict_value(std::span<const double> x) const {
  if (task_ != Task::regression) throw ParamError("predict_value on a classification tree");
  return node_prediction(route(x));
}

DecisionTree DecisionTree::collapse(std::span<const int> ids) const {
  std::vector<TreeNode> nodes = nodes_;
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes.size())
      throw ParamError("collapse id out of range");
    TreeNode& n = nodes[static_cast<std::size_t>(id)];
    n.split.reset();
  }
  // Drop nodes that are no longer reachable.
  std::vector<int> remap(nodes.size(), -1);
  std::vector<TreeNode> kept;
  std::vector<int> stack{0};
  std::vector<int> order;
  while (!stack.empty()) {
    int id = stack.back();
    stack.pop_back();
    order.push_back(id);
    const TreeNode& n = nodes[static_cast<std::size_t>(id)];
    if (!n.is_leaf()) {
      stack.push_back(n.right);
      stack.push_back(n.left);
    }
  }
  for (int id : order) {
    remap[static_cast<std::size_t>(id)] = static_cast<int>(kept.size());
    kept.push_back(nodes[static_cast<std::size_t>(id)]);
  }
  for (TreeNode& n : kept) {
    if (n.is_leaf()) {
      n.left = n.right = -1;
    } else {
      n.left = remap[static_cast<std::size_t>(n.left)];
      n.right = remap[static_cast<std::size_t>(n.right)];
    }
  }
  return DecisionTree(task_, classes_, attributes_, std::move(kept));
}

DecisionTree DecisionTree::refit(const Dataset& d) const {
  if (d.task() != task_) throw ParamError("refit dataset task does not match the tree");
  if (task_ == Task::classification && d.classes() != classes_)
    throw ParamError("refit dataset class count does not match the tree");
  std::vector<TreeNode> nodes = nodes_;
  for (TreeNode& n : nodes) n.stats = empty_stats(task_, classes_);
  for (std::size_t i = 0; i < d.size(); ++i) {
    NodeStats& s = nodes[static_cast<std::size_t>(route(d.row(i)))].stats;
    s.weight += 1.0;
    if (task_ == Task::classification) {
      s.counts[static_cast<std::size_t>(d.label(i))] += 1.0;
    } else {
      s.sum += d.target(i);
      s.sum_sq += d.target(i) * d.target(i);
    }
  }
  return DecisionTree(task_, classes_, attributes_, std::move(nodes));
}

bool DecisionTree::is_pruned_subtree_of(const DecisionTree& other) const {
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [a, b] = stack.back();
    stack.pop_back();
    const TreeNode& na = node(a);
    if (na.is_leaf()) continue;
    const TreeNode& nb = other.node(b);
    if (nb.is_leaf() || *na.split != *nb.split) return false;
    stack.push_back({na.left, nb.left});
    stack.push_back({na.right, nb.right});
  }
  return true;
}

// ---------------------------------------------------------------------------
// JSON layout: internal nodes and leaves are listed separately in preorder.
// A child reference r >= 0 names nodes[r]; r < 0 names leaves[-r - 1].

nlohmann::json to_json(const DecisionTree& tree) {
  std::vector<int> ref(tree.node_count());
  int internal = 0, leaves = 0;
  for (std::size_t i = 0; i < tree.node_count(); ++i)
    ref[i] = tree.nodes()[i].is_leaf() ? -(++leaves) : internal++;

  nlohmann::json jn = nlohmann::json::array(), jl = nlohmann::json::array();
  for (std::size_t i = 0; i < tree.node_count(); ++i) {
    const TreeNode& n = tree.nodes()[i];
    if (!n.is_leaf()) {
      jn.push_back({{"feature", n.split->feature},
                    {"threshold", n.split->threshold},
                    {"left", ref[static_cast<std::size_t>(n.left)]},
                    {"right", ref[static_cast<std::size_t>(n.right)]}});
      continue;
    }
    nlohmann::json leaf;
    const int id = static_cast<int>(i);
    if (tree.task() == Task::classification) {
      std::vector<double> probs(tree.classes());
      for (std::size_t k = 0; k < probs.size(); ++k)
        probs[k] = n.stats.weight > 0.0 ? n.stats.counts[k] / n.stats.weight
                                        : 1.0 / static_cast<double>(probs.size());
      leaf = {{"label", tree.node_label(id)},
              {"weight", n.stats.weight},
              {"probs", probs},
              {"counts", n.stats.counts}};
    } else {
      leaf = {{"label", tree.node_prediction(id)},
              {"weight", n.stats.weight},
              {"sum", n.stats.sum},
              {"sum_sq", n.stats.sum_sq}};
    }
    jl.push_back(std::move(leaf));
  }
  return {{"task", to_string(tree.task())},
          {"classes", tree.classes()},
          {"attributes", tree.attributes()},
          {"root", ref[0]},
          {"nodes", std::move(jn)},
          {"leaves", std::move(jl)}};
}

DecisionTree tree_from_json(const nlohmann::json& j) {
  const std::string task_name = j.at("task").get<std::string>();
  if (task_name != "classification" && task_name != "regression")
    throw DataError("unknown tree task '" + task_name + "'");
  const Task task = task_name == "classification" ? Task::classification : Task::regression;
  const auto classes = j.at("classes").get<std::size_t>();
  const auto attributes = j.at("attributes").get<std::size_t>();
  const auto& jn = j.at("nodes");
  const auto& jl = j.at("leaves");
  const int n_internal = static_cast<int>(jn.size());

  // Internal nodes occupy ids [0, n_internal), leaves follow.
  auto to_id = [&](int r) {
    if (r >= 0) {
      if (r >= n_internal) throw DataError("tree JSON references a missing node");
      return r;
    }
    int leaf = -r - 1;
    if (leaf >= static_cast<int>(jl.size())) throw DataError("tree JSON references a missing leaf");
    return n_internal + leaf;
  };
  std::vector<TreeNode> nodes(jn.size() + jl.size());
  for (int i = 0; i < n_internal; ++i) {
    const auto& e = jn[static_cast<std::size_t>(i)];
    TreeNode& n = nodes[static_cast<std::size_t>(i)];
    n.split = NodeFunction{e.at("feature").get<std::size_t>(), e.at("threshold").get<double>()};
    n.left = to_id(e.at("left").get<int>());
    n.right = to_id(e.at("right").get<int>());
  }
  for (std::size_t k = 0; k < jl.size(); ++k) {
    const auto& e = jl[k];
    NodeStats& s = nodes[static_cast<std::size_t>(n_internal) + k].stats;
    s.weight = e.at("weight").get<double>();
    if (task == Task::classification) {
      if (e.contains("counts")) {
        s.counts = e.at("counts").get<std::vector<double>>();
      } else {
        for (double p : e.at("probs").get<std::vector<double>>())
          s.counts.push_back(std::round(p * s.weight));
      }
    } else {
      s.sum = e.at("sum").get<double>();
      s.sum_sq = e.value("sum_sq", 0.0);
    }
  }
  if (to_id(j.at("root").get<int>()) != 0) throw DataError("tree JSON root must be the first node");
  try {
    return DecisionTree(task, classes, attributes, std::move(nodes));
  } catch (const ParamError& e) {
    throw DataError(std::string("invalid tree JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Learner

namespace {

struct Candidate {
  double delta = 0.0;
  std::size_t function = 0;
  bool valid = false;
};

struct LeafState {
  int node = -1;
  std::size_t depth = 0;
  double cost = 0.0;  // w(l) * g(l)
  bool pure = false;
  Candidate best;
};

bool objective_is_monotone(const CriterionParams& criterion, std::size_t classes) {
  if (std::holds_alternative<Tweedie>(criterion)) return true;
  if (std::holds_alternative<GammaProduct>(criterion)) return classes == 2;
  return is_permissible(criterion);
}

class Learner {
 public:
  Learner(const Dataset& d, const NodeFunctionClass& functions, const CriterionParams& criterion)
      : d_(d), functions_(functions), criterion_(criterion), classes_(d.classes()) {
    const bool regression = is_regression_criterion(criterion);
    if (regression != (d.task() == Task::regression))
      throw ParamError(regression ? "Tweedie criterion requires a regression dataset"
                                  : "classification criterion requires a classification dataset");
    for (const NodeFunction& f : functions)
      if (f.feature >= d.attributes()) throw ParamError("node function feature out of range");
    if (regression) {
      power_ = std::get<Tweedie>(criterion).power;
      pow_terms_.resize(d.size());
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (d.target(i) < 0.0) throw DataError("Tweedie criterion requires nonnegative targets");
        pow_terms_[i] = detail::tweedie_pow_term(power_, d.target(i));
      }
    }
    // Contiguous F range per feature.
    range_.assign(d.attributes() + 1, 0);
    for (const NodeFunction& f : functions) ++range_[f.feature + 1];
    for (std::size_t j = 1; j < range_.size(); ++j) range_[j] += range_[j - 1];
    order_.resize(d.attributes());
    for (std::size_t j = 0; j < d.attributes(); ++j) {
      if (range_[j] == range_[j + 1]) continue;
      auto& o = order_[j];
      o.resize(d.size());
      std::iota(o.begin(), o.end(), 0);
      std::stable_sort(o.begin(), o.end(),
                       [&](std::size_t a, std::size_t b) { return d.feature(a, j) < d.feature(b, j); });
    }
    probs_.resize(classes_);
    left_counts_.resize(classes_);
    right_counts_.resize(classes_);
  }

  double class_cost(std::span<const double> counts, double weight) {
    if (weight <= 0.0) return 0.0;
    for (std::size_t k = 0; k < classes_; ++k) probs_[k] = counts[k] / weight;
    return weight * detail::impurity_unchecked(criterion_, probs_);
  }

  double regression_cost(const detail::TweedieSums& s) const {
    return detail::tweedie_total_deviance(power_, s);
  }

  NodeStats leaf_stats(int node) const {
    NodeStats s;
    if (d_.is_classification()) s.counts.assign(classes_, 0.0);
    for (std::size_t i = 0; i < d_.size(); ++i) {
      if (leaf_of_[i] != node) continue;
      s.weight += 1.0;
      if (d_.is_classification()) {
        s.counts[static_cast<std::size_t>(d_.label(i))] += 1.0;
      } else {
        s.sum += d_.target(i);
        s.sum_sq += d_.target(i) * d_.target(i);
      }
    }
    return s;
  }

  // Fills cost, purity and the best split of a leaf.
  void evaluate(LeafState& leaf, bool may_split) {
    const int node = leaf.node;
    std::size_t members = 0;
    double lo = 0.0, hi = 0.0;
    detail::TweedieSums total;
    std::fill(right_counts_.begin(), right_counts_.end(), 0.0);
    for (std::size_t i = 0; i < d_.size(); ++i) {
      if (leaf_of_[i] != node) continue;
      if (d_.is_classification()) {
        right_counts_[static_cast<std::size_t>(d_.label(i))] += 1.0;
      } else {
        double y = d_.target(i);
        lo = members == 0 ? y : std::min(lo, y);
        hi = members == 0 ? y : std::max(hi, y);
        total.add(y, pow_terms_[i]);
      }
      ++members;
    }
    const double weight = static_cast<double>(members);
    std::vector<double> parent_counts = right_counts_;
    if (d_.is_classification()) {
      leaf.cost = class_cost(parent_counts, weight);
      leaf.pure = std::count_if(parent_counts.begin(), parent_counts.end(),
                                [](double c) { return c > 0.0; }) <= 1;
    } else {
      leaf.cost = regression_cost(total);
      leaf.pure = lo == hi;
    }
    leaf.best = Candidate{};
    if (!may_split || leaf.pure || members < 2) return;

    const double tol = 1e-12 * leaf.cost;
    std::vector<std::size_t> sorted;
    sorted.reserve(members);
    for (std::size_t j = 0; j < d_.attributes(); ++j) {
      if (range_[j] == range_[j + 1]) continue;
      sorted.clear();
      for (std::size_t i : order_[j])
        if (leaf_of_[i] == node) sorted.push_back(i);
      std::fill(left_counts_.begin(), left_counts_.end(), 0.0);
      detail::TweedieSums left;
      std::size_t pos = 0, last_pos = 0;
      for (std::size_t f = range_[j]; f < range_[j + 1]; ++f) {
        const double theta = functions_[f].threshold;
        while (pos < members && d_.feature(sorted[pos], j) <= theta) {
          const std::size_t i = sorted[pos];
          if (d_.is_classification())
            left_counts_[static_cast<std::size_t>(d_.label(i))] += 1.0;
          else
            left.add(d_.target(i), pow_terms_[i]);
          ++pos;
        }
        if (pos == 0 || pos == members) continue;  // empty child
        if (pos == last_pos) continue;             // same partition as the previous threshold
        last_pos = pos;
        const double wl = static_cast<double>(pos);
        double children;
        if (d_.is_classification()) {
          for (std::size_t k = 0; k < classes_; ++k)
            right_counts_[k] = parent_counts[k] - left_counts_[k];
          children = class_cost(left_counts_, wl) + class_cost(right_counts_, weight - wl);
        } else {
          detail::TweedieSums right{total.count - left.count, total.sum - left.sum,
                                    total.sum_pow - left.sum_pow};
          children = regression_cost(left) + regression_cost(right);
        }
        const double delta = children - leaf.cost;
        if (!leaf.best.valid || delta < leaf.best.delta - tol) leaf.best = {delta, f, true};
      }
    }
  }

  DecisionTree run(const StopRule& stop, LearnTrace* trace) {
    if (!stop.size && !stop.max_depth) throw ParamError("stop rule needs a size or a depth cap");
    const bool monotone = objective_is_monotone(criterion_, classes_);
    const std::size_t max_depth = stop.max_depth.value_or(static_cast<std::size_t>(-1));
    leaf_of_.assign(d_.size(), 0);

    std::vector<TreeNode> nodes(1);
    std::vector<LeafState> leaves;  // creation order
    std::vector<char> alive;
    leaves.push_back({0, 0, 0.0, false, {}});
    alive.push_back(1);
    evaluate(leaves[0], max_depth > 0);
    double objective = leaves[0].cost;
    if (trace) trace->objective.assign(1, objective);

    std::size_t internal = 0;
    while (!stop.size || internal < *stop.size) {
      const double tol = 1e-12 * objective;
      std::size_t chosen = leaves.size();
      for (std::size_t k = 0; k < leaves.size(); ++k) {
        if (!alive[k] || !leaves[k].best.valid) continue;
        if (chosen == leaves.size() || leaves[k].best.delta < leaves[chosen].best.delta - tol)
          chosen = k;
      }
      if (chosen == leaves.size()) break;

      const LeafState parent = leaves[chosen];
      alive[chosen] = 0;
      const NodeFunction f = functions_[parent.best.function];
      const int left_id = static_cast<int>(nodes.size());
      const int right_id = left_id + 1;
      nodes[static_cast<std::size_t>(parent.node)].split = f;
      nodes[static_cast<std::size_t>(parent.node)].left = left_id;
      nodes[static_cast<std::size_t>(parent.node)].right = right_id;
      nodes.resize(nodes.size() + 2);
      for (std::size_t i = 0; i < d_.size(); ++i)
        if (leaf_of_[i] == parent.node) leaf_of_[i] = f.goes_left(d_.row(i)) ? left_id : right_id;
      ++internal;

      double children = 0.0;
      for (int child : {left_id, right_id}) {
        LeafState s{child, parent.depth + 1, 0.0, false, {}};
        evaluate(s, s.depth < max_depth);
        children += s.cost;
        leaves.push_back(s);
        alive.push_back(1);
      }
      const double delta = children - parent.cost;
      if (monotone && delta > 1e-9 * std::max(parent.cost, 1e-300))
        throw std::logic_error("splitting objective increased under a permissible criterion");
      objective += delta;
      if (trace) trace->objective.push_back(objective);
    }

    for (std::size_t k = 0; k < leaves.size(); ++k)
      if (alive[k])
        nodes[static_cast<std::size_t>(leaves[k].node)].stats = leaf_stats(leaves[k].node);
    return DecisionTree(d_.task(), classes_, d_.attributes(), std::move(nodes));
  }

 private:
  const Dataset& d_;
  const NodeFunctionClass& functions_;
  const CriterionParams& criterion_;
  std::size_t classes_;
  double power_ = 0.0;
  std::vector<double> pow_terms_;
  std::vector<std::size_t> range_;
  std::vector<std::vector<std::size_t>> order_;
  std::vector<int> leaf_of_;
  std::vector<double> probs_, left_counts_, right_counts_;
};

}  // namespace

DecisionTree top_down_learn(const Dataset& d, const NodeFunctionClass& functions,
                            const CriterionParams& criterion, const StopRule& stop,
                            LearnTrace* trace) {
  validate(criterion);
  Learner learner(d, functions, criterion);
  return learner.run(stop, trace);
}

double splitting_objective(const DecisionTree& tree, const CriterionParams& criterion) {
  if (tree.task() != Task::classification)
    throw ParamError("splitting_objective needs class statistics");
  double total = 0.0;
  for (const TreeNode& n : tree.nodes()) {
    if (!n.is_leaf() || n.stats.weight <= 0.0) continue;
    auto dist = ClassDistribution::from_counts(n.stats.counts);
    total += n.stats.weight * eval_impurity(criterion, dist);
  }
  return total;
}

double zero_one_loss(const DecisionTree& tree, const Dataset& d) {
  if (!d.is_classification() || tree.task() != Task::classification)
    throw ParamError("0-1 loss needs a classification tree and dataset");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (tree.predict_class(d.row(i)) != d.label(i)) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(d.size());
}

double mse_loss(const DecisionTree& tree, const Dataset& d) {
  if (d.is_classification() || tree.task() != Task::regression)
    throw ParamError("MSE loss needs a regression tree and dataset");
  double total = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double e = tree.predict_value(d.row(i)) - d.target(i);
    total += e * e;
  }
  return total / static_cast<double>(d.size());
}

}  // namespace dtx
