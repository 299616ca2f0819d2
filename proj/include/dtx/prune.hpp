#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "dtx/data.hpp"
#include "dtx/tree.hpp"

namespace dtx {

struct PathEntry {
  double alpha = 0.0;  ///< left end of the interval on which `tree` is optimal
  DecisionTree tree;
  double train_loss = 0.0;
  std::size_t leaves = 0;
};

/// Weakest-link pruning path. Entry k is optimal for alpha in
/// [entries[k].alpha, entries[k+1].alpha); the last interval is unbounded.
struct PruningPath {
  std::vector<PathEntry> entries;

  std::size_t size() const { return entries.size(); }
  /// Index of the interval containing alpha. Throws ParamError if alpha < 0.
  std::size_t piece(double alpha) const;
  /// Interval midpoint, or 2 * lo + 1 for the last interval.
  double representative_alpha(std::size_t k) const;
};

/// Training misclassifications / n + alpha * leaves.
double cost_complexity(const DecisionTree& tree, double alpha);

/// Minimum cost-complexity path. All weakest links that tie are collapsed at
/// the same breakpoint, so breakpoints strictly increase. A zero-gain first
/// link is placed at the smallest positive double, keeping entry 0 equal to
/// the input tree. Throws ParamError for regression trees or a zero-weight root.
PruningPath mccp_path(const DecisionTree& tree);

const DecisionTree& prune_at(const PruningPath& path, double alpha);

struct PessimisticParams {
  double c1 = 0.0;
  double c2 = 0.0;
};

/// Replaces an internal node h by a leaf when
///   e_l <= e_h + c1 * sqrt((t_h * ln(max(a, 2)) + c2) / n_h),
/// where e_h and t_h describe h's subtree in the input tree, e_l is the
/// leaf-replacement error rate and n_h the examples reaching h.
DecisionTree pessimistic_prune(const DecisionTree& tree, const PessimisticParams& params,
                               std::size_t attributes);

/// Collapses internal nodes bottom-up while holdout error does not increase,
/// repeating until nothing changes. Leaf labels stay the training majority.
DecisionTree reduced_error_prune(const DecisionTree& tree, const Dataset& holdout);

nlohmann::json to_json(const PruningPath& path);
PruningPath pruning_path_from_json(const nlohmann::json& j);

}  // namespace dtx
