// Independent oracles and generators shared by the unit and acceptance tests.
// Nothing here calls the code under test for the quantity it checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "dtx/data.hpp"
#include "dtx/tree.hpp"

namespace oracle {

inline std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t c, double zero_prob = 0.1) {
  std::exponential_distribution<double> e(1.0);
  std::bernoulli_distribution zero(zero_prob);
  std::vector<double> p(c);
  double s = 0.0;
  for (auto& v : p) {
    v = zero(rng) ? 0.0 : e(rng);
    s += v;
  }
  if (s == 0.0) {
    p[0] = 1.0;
    return p;
  }
  for (auto& v : p) v /= s;
  return p;
}

/// Random classification dataset with small integer features, so ties and
/// repeated values are common.
inline dtx::Dataset random_dataset(std::mt19937_64& rng, std::size_t n, std::size_t a, std::size_t c) {
  std::uniform_int_distribution<int> fv(0, 9), lab(0, static_cast<int>(c) - 1);
  std::vector<double> x(n * a);
  std::vector<int> y(n);
  for (auto& v : x) v = fv(rng);
  for (auto& v : y) v = lab(rng);
  // Make sure every class appears.
  for (std::size_t k = 0; k < c && k < n; ++k) y[k] = static_cast<int>(k);
  std::vector<std::string> names;
  for (std::size_t k = 0; k < c; ++k) names.push_back("k" + std::to_string(k));
  return dtx::Dataset::classification(std::move(x), a, std::move(y), std::move(names));
}

/// A tree with up to `internal` random splits, fitted to `d`. Every split
/// sends examples to both children, so no node is empty.
inline dtx::DecisionTree random_tree(std::mt19937_64& rng, const dtx::Dataset& d,
                                     const dtx::NodeFunctionClass& functions, std::size_t internal) {
  std::vector<dtx::TreeNode> nodes(1);
  nodes[0].stats.counts.assign(d.classes(), 0.0);
  std::vector<std::size_t> all(d.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::pair<int, std::vector<std::size_t>>> leaves{{0, all}};
  auto side = [&](const std::vector<std::size_t>& idx, const dtx::NodeFunction& f, bool left) {
    std::vector<std::size_t> out;
    for (auto i : idx)
      if ((d.feature(i, f.feature) <= f.threshold) == left) out.push_back(i);
    return out;
  };
  for (std::size_t k = 0; k < internal; ++k) {
    std::vector<std::pair<std::size_t, std::size_t>> options;  // (leaf slot, function)
    for (std::size_t li = 0; li < leaves.size(); ++li)
      for (std::size_t fi = 0; fi < functions.size(); ++fi) {
        const auto l = side(leaves[li].second, functions[fi], true);
        if (!l.empty() && l.size() < leaves[li].second.size()) options.emplace_back(li, fi);
      }
    if (options.empty()) break;
    const auto [li, fi] = options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
    auto [leaf, idx] = leaves[li];
    const int l = static_cast<int>(nodes.size());
    nodes[static_cast<std::size_t>(leaf)].split = functions[fi];
    nodes[static_cast<std::size_t>(leaf)].left = l;
    nodes[static_cast<std::size_t>(leaf)].right = l + 1;
    for (int j = 0; j < 2; ++j) {
      dtx::TreeNode child;
      child.stats.counts.assign(d.classes(), 0.0);
      nodes.push_back(child);
    }
    leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(li));
    leaves.emplace_back(l, side(idx, functions[fi], true));
    leaves.emplace_back(l + 1, side(idx, functions[fi], false));
  }
  return dtx::DecisionTree(dtx::Task::classification, d.classes(), d.attributes(), std::move(nodes)).refit(d);
}

/// Training errors at a node if it were a leaf, straight from its counts.
inline double leaf_errors(const dtx::NodeStats& s) {
  return s.weight - *std::max_element(s.counts.begin(), s.counts.end());
}

/// Bottom-up dynamic programme: min over pruned subtrees of errors/n + alpha * leaves.
inline double dp_min_cost(const dtx::DecisionTree& t, double alpha) {
  const double n = t.node(0).stats.weight;
  std::vector<double> best(t.node_count());
  for (std::size_t i = t.node_count(); i-- > 0;) {
    const auto& node = t.nodes()[i];
    const double as_leaf = leaf_errors(node.stats) / n + alpha;
    best[i] = node.is_leaf() ? as_leaf
                             : std::min(as_leaf, best[static_cast<std::size_t>(node.left)] +
                                                     best[static_cast<std::size_t>(node.right)]);
  }
  return best[0];
}

/// Cost of a tree by recounting leaf errors.
inline double cost_of(const dtx::DecisionTree& t, double alpha) {
  const double n = t.node(0).stats.weight;
  double err = 0.0, leaves = 0.0;
  for (const auto& node : t.nodes())
    if (node.is_leaf()) {
      err += leaf_errors(node.stats);
      leaves += 1.0;
    }
  return err / n + alpha * leaves;
}

/// Per-example recount of misclassifications, routing by hand.
inline double recount_zero_one(const dtx::DecisionTree& t, const dtx::Dataset& d) {
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    int id = 0;
    while (!t.node(id).is_leaf()) {
      const auto& f = *t.node(id).split;
      id = d.feature(i, f.feature) <= f.threshold ? t.node(id).left : t.node(id).right;
    }
    const auto& c = t.node(id).stats.counts;
    const int label = static_cast<int>(std::max_element(c.begin(), c.end()) - c.begin());
    if (label != d.label(i)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(d.size());
}

/// Log Dirichlet-multinomial probability by the sequential Polya-urn product.
inline double polya_log_prob(const std::vector<int>& counts, const std::vector<double>& a) {
  const double a0 = std::accumulate(a.begin(), a.end(), 0.0);
  double lp = 0.0, seen = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i)
    for (int k = 0; k < counts[i]; ++k) {
      lp += std::log((a[i] + k) / (a0 + seen));
      seen += 1.0;
    }
  return lp;
}

/// Does a single threshold split separate the labels exactly?
inline bool separable_by_one_threshold(const dtx::Dataset& d) {
  for (std::size_t j = 0; j < d.attributes(); ++j) {
    std::vector<std::size_t> order(d.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return d.feature(a, j) < d.feature(b, j); });
    for (std::size_t cut = 0; cut <= d.size(); ++cut) {
      if (cut > 0 && cut < d.size() && d.feature(order[cut - 1], j) == d.feature(order[cut], j)) continue;
      std::vector<char> left(d.classes(), 0), right(d.classes(), 0);
      for (std::size_t k = 0; k < d.size(); ++k) (k < cut ? left : right)[static_cast<std::size_t>(d.label(order[k]))] = 1;
      if (std::count(left.begin(), left.end(), 1) <= 1 && std::count(right.begin(), right.end(), 1) <= 1)
        return true;
    }
  }
  return false;
}

/// Minimum training errors over all trees of depth <= 2 (exhaustive).
inline std::size_t best_depth2_errors(const dtx::Dataset& d, const dtx::NodeFunctionClass& f) {
  auto errors_of = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::size_t> cnt(d.classes(), 0);
    for (auto i : idx) ++cnt[static_cast<std::size_t>(d.label(i))];
    return idx.size() - *std::max_element(cnt.begin(), cnt.end());
  };
  auto best_stump = [&](const std::vector<std::size_t>& idx) {
    std::size_t best = errors_of(idx);
    for (const auto& fn : f) {
      std::vector<std::size_t> l, r;
      for (auto i : idx) (d.feature(i, fn.feature) <= fn.threshold ? l : r).push_back(i);
      best = std::min(best, errors_of(l) + errors_of(r));
    }
    return best;
  };
  std::vector<std::size_t> all(d.size());
  std::iota(all.begin(), all.end(), 0);
  std::size_t best = best_stump(all);
  for (const auto& fn : f) {
    std::vector<std::size_t> l, r;
    for (auto i : all) (d.feature(i, fn.feature) <= fn.threshold ? l : r).push_back(i);
    best = std::min(best, best_stump(l) + best_stump(r));
  }
  return best;
}

}  // namespace oracle
