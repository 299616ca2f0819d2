#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dtx/data.hpp"
#include "dtx/tree.hpp"

namespace dtx {

/// Tree prior: a node at depth d splits with probability sigma * (1 + d)^-phi,
/// up to `t_cap` internal nodes. `dirichlet_a` empty means all ones.
struct BayesPrior {
  double sigma = 0.5;
  double phi = 1.0;
  std::size_t t_cap = 8;
  std::vector<double> dirichlet_a;

  double split_probability(std::size_t depth) const;
  /// Throws ParamError outside sigma > 0, phi >= 0, t_cap >= 1, a_i > 0, or
  /// when a nonempty `dirichlet_a` does not have `classes` entries.
  void validate(std::size_t classes) const;
  std::vector<double> concentration(std::size_t classes) const;
};

/// Explicit randomness of the algorithm: z drives the prior's split
/// decisions, z_prime_seed drives node-function draws and the MH chain.
struct PriorRandomness {
  std::vector<double> z;
  std::uint64_t z_prime_seed = 0;

  /// 2 * t_cap uniform draws, enough for any tree of at most t_cap splits.
  static PriorRandomness draw(std::size_t t_cap, std::uint64_t seed);
};

/// Unlabeled binary tree shape in breadth-first order; root is node 0.
struct TreeShape {
  struct Node {
    int left = -1;
    int right = -1;
    std::size_t depth = 0;
  };
  std::vector<Node> nodes;

  std::size_t internal_count() const;
  /// Preorder encoding, "(LR)" for internal nodes and "." for leaves.
  std::string encode() const;
};

/// Breadth-first expansion: the i-th visited node splits iff
/// split_probability(depth) > z[i]. No draws are consumed once t_cap splits
/// exist. Throws ParamError if z runs out.
TreeShape sample_tree_from_prior(const BayesPrior& prior, std::span<const double> z);

/// Log Dirichlet-multinomial marginal likelihood of per-leaf class counts.
double log_marginal_likelihood(const std::vector<std::vector<double>>& leaf_counts,
                               std::span<const double> a);
double log_marginal_likelihood(const DecisionTree& tree, std::span<const double> a);

/// Unnormalised log prior of a tree: split/no-split factors per node, 1/|F|
/// per node function, minus infinity above t_cap.
double log_tree_prior(const DecisionTree& tree, const BayesPrior& prior, std::size_t functions);

enum class Move { grow, prune, change, swap };

/// Metropolis-Hastings search over trees with grow, prune, change and swap
/// proposals. Infeasible proposals count as rejections.
class MHChain {
 public:
  MHChain(const Dataset& d, const NodeFunctionClass& functions, BayesPrior prior,
          const PriorRandomness& rand);

  /// One iteration. Returns true if the proposal was accepted.
  bool step();

  const DecisionTree& current() const { return current_; }
  const DecisionTree& map_tree() const { return map_; }
  double log_likelihood() const { return log_lik_; }
  double log_posterior() const { return log_lik_ + log_prior_; }
  double map_log_posterior() const { return map_log_post_; }
  std::size_t iteration() const { return iteration_; }
  Move last_move() const { return last_move_; }
  /// Acceptance probability of the last feasible proposal.
  double last_acceptance() const { return last_acceptance_; }

 private:
  std::optional<DecisionTree> propose(Move move, double& log_q_ratio);
  DecisionTree fitted(std::vector<TreeNode> nodes) const;

  const Dataset& d_;
  const NodeFunctionClass& functions_;
  BayesPrior prior_;
  std::vector<double> a_;
  std::mt19937_64 rng_;
  DecisionTree current_;
  DecisionTree map_;
  double log_lik_ = 0.0;
  double log_prior_ = 0.0;
  double map_log_post_ = 0.0;
  std::size_t iteration_ = 0;
  Move last_move_ = Move::grow;
  double last_acceptance_ = 0.0;
};

struct TraceRow {
  std::size_t iteration = 0;
  double log_likelihood = 0.0;
  std::size_t leaves = 0;
  bool accepted = false;
};

struct MHResult {
  DecisionTree final_tree;  ///< T^omega
  DecisionTree map_tree;    ///< highest posterior tree visited
  std::vector<TraceRow> trace;
};

MHResult mh_search(const Dataset& d, const NodeFunctionClass& functions, const BayesPrior& prior,
                   const PriorRandomness& rand, std::size_t omega, bool record_trace = false);

void write_trace_csv(std::ostream& out, std::span<const TraceRow> trace);

/// Mean 0-1 loss of T^omega over the replicates of one instance; replicate r
/// uses PriorRandomness::draw(t_cap, derive_seed(seed, instance, r)).
double bayes_instance_loss(const Dataset& d, const NodeFunctionClass& functions,
                           const BayesPrior& prior, std::size_t omega, std::size_t replicates,
                           std::uint64_t seed, std::size_t instance);

/// Mean 0-1 loss of T^omega over instances x replicates. Replicate r of
/// instance i always uses the randomness derived from (seed, i, r), so
/// different priors share common random numbers.
double bayes_expected_loss(const InstanceCollection& collection, const BayesPrior& prior,
                           std::size_t omega, std::size_t replicates, std::uint64_t seed,
                           std::size_t workers = 1);

}  // namespace dtx
