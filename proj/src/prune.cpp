#include "dtx/prune.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "dtx/error.hpp"

namespace dtx {

namespace {

// Per-node error counts of a classification tree: errors if the node were a
// leaf, errors of its subtree, leaves and internal nodes of its subtree.
struct SubtreeCounts {
  std::vector<std::int64_t> node_err, sub_err, leaves, internal;
};

SubtreeCounts count_subtrees(const DecisionTree& tree) {
  const std::size_t m = tree.node_count();
  SubtreeCounts s{std::vector<std::int64_t>(m), std::vector<std::int64_t>(m),
                  std::vector<std::int64_t>(m), std::vector<std::int64_t>(m)};
  for (std::size_t i = m; i-- > 0;) {
    const TreeNode& n = tree.nodes()[i];
    s.node_err[i] = std::llround(tree.node_errors(static_cast<int>(i)));
    if (n.is_leaf()) {
      s.sub_err[i] = s.node_err[i];
      s.leaves[i] = 1;
      s.internal[i] = 0;
    } else {
      auto l = static_cast<std::size_t>(n.left), r = static_cast<std::size_t>(n.right);
      s.sub_err[i] = s.sub_err[l] + s.sub_err[r];
      s.leaves[i] = s.leaves[l] + s.leaves[r];
      s.internal[i] = s.internal[l] + s.internal[r] + 1;
    }
  }
  return s;
}

void require_classification(const DecisionTree& tree) {
  if (tree.task() != Task::classification)
    throw ParamError("pruning needs a classification tree with class counts");
}

// Exact weakest-link value (num / den) / n.
struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 1;
};

bool less(const Ratio& a, const Ratio& b) { return a.num * b.den < b.num * a.den; }
bool less_equal(const Ratio& a, const Ratio& b) { return a.num * b.den <= b.num * a.den; }

// Smallest double not below num / (den * n), so that piece() agrees with exact
// arithmetic for every double alpha.
double breakpoint(const Ratio& r, double n) {
  const double den = static_cast<double>(r.den) * n;
  const double num = static_cast<double>(r.num);
  double alpha = num / den;
  if (std::fma(alpha, den, -num) < 0.0) alpha = std::nextafter(alpha, std::numeric_limits<double>::infinity());
  return alpha;
}

}  // namespace

std::size_t PruningPath::piece(double alpha) const {
  if (!(alpha >= 0.0)) throw ParamError("pruning parameter must be nonnegative");
  if (entries.empty()) throw ParamError("empty pruning path");
  auto it = std::upper_bound(entries.begin(), entries.end(), alpha,
                             [](double a, const PathEntry& e) { return a < e.alpha; });
  return static_cast<std::size_t>(it - entries.begin()) - 1;
}

double PruningPath::representative_alpha(std::size_t k) const {
  const double lo = entries.at(k).alpha;
  if (k + 1 == entries.size()) return 2.0 * lo + 1.0;
  const double hi = entries[k + 1].alpha;
  return lo + (hi - lo) / 2.0;
}

double cost_complexity(const DecisionTree& tree, double alpha) {
  require_classification(tree);
  const double n = tree.node(0).stats.weight;
  double err = 0.0;
  for (std::size_t i = 0; i < tree.node_count(); ++i)
    if (tree.nodes()[i].is_leaf()) err += tree.node_errors(static_cast<int>(i));
  return err / n + alpha * static_cast<double>(tree.leaf_count());
}

PruningPath mccp_path(const DecisionTree& tree) {
  require_classification(tree);
  const double n = tree.node(0).stats.weight;
  if (!(n > 0.0)) throw ParamError("tree carries no training statistics");

  auto entry = [n](double alpha, DecisionTree t) {
    const auto counts = count_subtrees(t);
    const double loss = static_cast<double>(counts.sub_err[0]) / n;
    const std::size_t leaves = t.leaf_count();
    return PathEntry{alpha, std::move(t), loss, leaves};
  };

  PruningPath path;
  path.entries.push_back(entry(0.0, tree));
  DecisionTree current = tree;
  while (current.node_count() > 1) {
    auto counts = count_subtrees(current);
    auto link = [&](std::size_t i) {
      return Ratio{counts.node_err[i] - counts.sub_err[i], counts.leaves[i] - 1};
    };
    bool found = false;
    Ratio weakest;
    for (std::size_t i = 0; i < current.node_count(); ++i) {
      if (current.nodes()[i].is_leaf()) continue;
      if (!found || less(link(i), weakest)) weakest = link(i);
      found = true;
    }
    // Collapse every link at or below the weakest value until none remain.
    for (;;) {
      std::vector<int> ids;
      for (std::size_t i = 0; i < current.node_count(); ++i)
        if (!current.nodes()[i].is_leaf() && less_equal(link(i), weakest))
          ids.push_back(static_cast<int>(i));
      if (ids.empty()) break;
      current = current.collapse(ids);
      counts = count_subtrees(current);
    }
    double alpha = breakpoint(weakest, n);
    if (!(alpha > path.entries.back().alpha)) {
      // Only a zero-gain first link can land here.
      alpha = std::nextafter(path.entries.back().alpha, std::numeric_limits<double>::infinity());
    }
    path.entries.push_back(entry(alpha, current));
  }
  return path;
}

const DecisionTree& prune_at(const PruningPath& path, double alpha) {
  return path.entries[path.piece(alpha)].tree;
}

DecisionTree pessimistic_prune(const DecisionTree& tree, const PessimisticParams& params,
                               std::size_t attributes) {
  require_classification(tree);
  if (!(params.c1 >= 0.0) || !(params.c2 >= 0.0))
    throw ParamError("pessimistic parameters c1, c2 must be nonnegative");
  const double log_a = std::log(static_cast<double>(std::max<std::size_t>(attributes, 2)));
  const auto counts = count_subtrees(tree);

  std::vector<int> ids;
  for (std::size_t i = 0; i < tree.node_count(); ++i) {
    if (tree.nodes()[i].is_leaf()) continue;
    const double n_h = tree.nodes()[i].stats.weight;
    if (!(n_h > 0.0)) throw std::logic_error("internal node reached by no training examples");
    const double e_l = static_cast<double>(counts.node_err[i]) / n_h;
    const double e_h = static_cast<double>(counts.sub_err[i]) / n_h;
    const double t_h = static_cast<double>(counts.internal[i]);
    if (e_l <= e_h + params.c1 * std::sqrt((t_h * log_a + params.c2) / n_h))
      ids.push_back(static_cast<int>(i));
  }
  return tree.collapse(ids);
}

DecisionTree reduced_error_prune(const DecisionTree& tree, const Dataset& holdout) {
  require_classification(tree);
  if (holdout.size() == 0) throw ParamError("reduced-error pruning needs a nonempty holdout set");
  if (!holdout.is_classification() || holdout.attributes() != tree.attributes())
    throw ParamError("holdout set is incompatible with the tree");

  DecisionTree current = tree;
  for (;;) {
    const std::size_t m = current.node_count();
    // Holdout errors of every node if it were a leaf.
    std::vector<double> leaf_err(m, 0.0);
    for (std::size_t k = 0; k < holdout.size(); ++k) {
      int id = 0;
      for (;;) {
        if (current.node_label(id) != holdout.label(k)) leaf_err[static_cast<std::size_t>(id)] += 1.0;
        const TreeNode& n = current.node(id);
        if (n.is_leaf()) break;
        id = n.split->goes_left(holdout.row(k)) ? n.left : n.right;
      }
    }
    std::vector<double> sub_err(m);
    std::vector<char> pruned(m, 0);
    std::vector<int> ids;
    for (std::size_t i = m; i-- > 0;) {
      const TreeNode& n = current.nodes()[i];
      if (n.is_leaf()) {
        sub_err[i] = leaf_err[i];
        continue;
      }
      sub_err[i] = sub_err[static_cast<std::size_t>(n.left)] + sub_err[static_cast<std::size_t>(n.right)];
      if (leaf_err[i] <= sub_err[i]) {
        sub_err[i] = leaf_err[i];
        ids.push_back(static_cast<int>(i));
      }
    }
    if (ids.empty()) return current;
    current = current.collapse(ids);
  }
}

nlohmann::json to_json(const PruningPath& path) {
  nlohmann::json out = nlohmann::json::array();
  for (const PathEntry& e : path.entries)
    out.push_back({{"alpha", e.alpha},
                   {"leaves", e.leaves},
                   {"train_loss", e.train_loss},
                   {"tree", to_json(e.tree)}});
  return out;
}

PruningPath pruning_path_from_json(const nlohmann::json& j) {
  PruningPath path;
  for (const auto& e : j)
    path.entries.push_back({e.at("alpha").get<double>(), tree_from_json(e.at("tree")),
                            e.at("train_loss").get<double>(), e.at("leaves").get<std::size_t>()});
  return path;
}

}  // namespace dtx
