#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dtx/bayes.hpp"
#include "dtx/criteria.hpp"
#include "dtx/data.hpp"
#include "dtx/prune.hpp"
#include "dtx/tree.hpp"

namespace dtx {

/// One tunable parameter and its candidate values.
struct Axis {
  std::string name;
  std::vector<double> values;
};

/// Parses "LO:HI:STEP" (both ends inclusive within 1e-12), a comma list, or a
/// single number. Throws ParamError on malformed input.
Axis parse_axis(std::string name, std::string_view spec);
Axis integer_axis(std::string name, int lo, int hi);

/// Cartesian product of axes; point index i enumerates the product with the
/// first axis varying slowest.
struct ParamGrid {
  std::vector<Axis> axes;

  std::size_t size() const;
  std::vector<double> point(std::size_t index) const;
  std::vector<std::string> names() const;
};

/// alpha in {0.05, 0.15, ..., 3.95} and beta in {1, ..., 8}.
ParamGrid default_tsallis_grid();

struct SurfaceRow {
  std::vector<double> point;
  double mean_loss = 0.0;
  std::vector<double> losses;  ///< per instance
};

/// A cell [lo, hi) of the merged pruning-parameter partition.
struct AlphaPiece {
  double lo = 0.0;
  double hi = 0.0;  ///< +inf for the last piece
  double mean_loss = 0.0;
  double mean_leaves = 0.0;
  double score = 0.0;  ///< mean_loss + eta * mean_leaves
  std::vector<double> losses;

  double representative() const;
};

struct TuningResult {
  std::vector<std::string> axes;
  std::vector<SurfaceRow> surface;
  std::size_t best_index = 0;
  std::vector<double> best_point;
  double best_loss = 0.0;
  /// Exact pruning tuners only.
  std::vector<AlphaPiece> pieces;
  std::size_t best_piece = 0;
  double best_alpha = 0.0;
};

enum class ProtocolKind { train_only, k_fold, holdout };

/// How a learned tree is scored on one instance: training loss, mean held-out
/// loss over k folds, or loss on a single held-out fraction. Instance i uses
/// the stream derive_seed(seed, i).
struct Protocol {
  ProtocolKind kind = ProtocolKind::k_fold;
  std::size_t folds = 5;
  double holdout = 0.2;
  std::uint64_t seed = 0;
};

enum class SplitFamily { tsallis, gamma, tweedie };

/// Axis names expected for each family: (alpha, beta), (gamma), (p).
CriterionParams criterion_at(SplitFamily family, std::span<const double> point);

/// 0-1 loss for classification data, mean squared error for regression.
double evaluation_loss(const DecisionTree& tree, const Dataset& d);

/// Node functions of `d`, or an empty class when every feature is constant.
NodeFunctionClass node_functions_or_empty(const Dataset& d);

/// Loss of one criterion on one instance under a protocol.
double protocol_loss(const Dataset& d, std::size_t instance, const CriterionParams& criterion,
                     const StopRule& stop, const Protocol& protocol);

TuningResult erm_grid_split(const InstanceCollection& collection, const ParamGrid& grid,
                            SplitFamily family, const StopRule& stop, const Protocol& protocol,
                            std::size_t workers = 1);

/// Pruning paths of a collection together with each path tree's held-out loss
/// and leaf count; pieces() merges the breakpoints exactly for a given eta.
class ExactPruneProblem {
 public:
  ExactPruneProblem(std::span<const DecisionTree> trees, std::span<const Dataset> eval);

  std::vector<AlphaPiece> pieces(double eta) const;
  std::size_t instances() const { return paths_.size(); }
  const PruningPath& path(std::size_t i) const { return paths_[i]; }
  std::size_t total_internal() const { return total_internal_; }

 private:
  std::vector<PruningPath> paths_;
  std::vector<std::vector<double>> losses_;
  std::vector<std::vector<double>> leaves_;
  std::size_t total_internal_ = 0;
};

/// Lowest-score piece; ties go to the smallest alpha.
std::size_t best_piece(std::span<const AlphaPiece> pieces);

TuningResult erm_mccp_exact(std::span<const DecisionTree> trees, std::span<const Dataset> eval,
                            double eta = 0.0);

TuningResult erm_pessimistic(std::span<const DecisionTree> trees, std::span<const Dataset> eval,
                             const ParamGrid& grid, std::size_t workers = 1);

TuningResult erm_bayes(const InstanceCollection& collection, const ParamGrid& grid,
                       const BayesPrior& base, std::size_t omega, std::size_t replicates,
                       std::uint64_t seed, std::size_t workers = 1);

/// For every (alpha, beta): grow each training set under `stop`,
/// then pick the pruning piece minimising mean held-out loss + eta * leaves.
/// The surface records that minimum; best_alpha is the winning piece's
/// representative value.
TuningResult erm_joint_split_prune(std::span<const Dataset> train, std::span<const Dataset> eval,
                                   const ParamGrid& grid, double eta, const StopRule& stop,
                                   std::size_t workers = 1);

struct FrontierRow {
  double eta = 0.0;
  double alpha_tilde = 0.0;
  double accuracy = 0.0;
  double leaves = 0.0;
  double eta_times_leaves = 0.0;
};

std::vector<FrontierRow> frontier_sweep(std::span<const Dataset> train, std::span<const Dataset> eval,
                                        const CriterionParams& criterion, const StopRule& stop,
                                        std::span<const double> etas);

/// Splits every instance with holdout_split(n, fraction, derive_seed(seed, i)).
void holdout_instances(const InstanceCollection& collection, double fraction, std::uint64_t seed,
                       std::vector<Dataset>& train, std::vector<Dataset>& eval);

}  // namespace dtx
