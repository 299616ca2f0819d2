#include "dtx/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "dtx/error.hpp"
#include "dtx/parallel.hpp"

namespace dtx {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<std::size_t> node_depths(const DecisionTree& tree) {
  std::vector<std::size_t> d(tree.node_count(), 0);
  for (std::size_t i = 0; i < tree.node_count(); ++i) {
    const TreeNode& n = tree.nodes()[i];
    if (n.is_leaf()) continue;
    d[static_cast<std::size_t>(n.left)] = d[i] + 1;
    d[static_cast<std::size_t>(n.right)] = d[i] + 1;
  }
  return d;
}

TreeNode empty_leaf(std::size_t classes) {
  TreeNode n;
  n.stats.counts.assign(classes, 0.0);
  return n;
}

bool is_nog(const DecisionTree& t, std::size_t i) {
  const TreeNode& n = t.nodes()[i];
  return !n.is_leaf() && t.node(n.left).is_leaf() && t.node(n.right).is_leaf();
}

template <class Pred>
std::vector<std::size_t> select(const DecisionTree& t, Pred pred) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < t.node_count(); ++i)
    if (pred(i)) out.push_back(i);
  return out;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace

// ---------------------------------------------------------------------------
// Prior

double BayesPrior::split_probability(std::size_t depth) const {
  return std::min(1.0, sigma * std::pow(1.0 + static_cast<double>(depth), -phi));
}

void BayesPrior::validate(std::size_t classes) const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ParamError("sigma must be positive");
  if (!(phi >= 0.0) || !std::isfinite(phi)) throw ParamError("phi must be nonnegative");
  if (t_cap < 1) throw ParamError("tree size cap must be at least 1");
  if (!dirichlet_a.empty() && dirichlet_a.size() != classes)
    throw ParamError("Dirichlet vector length must equal the class count");
  for (double a : dirichlet_a)
    if (!(a > 0.0)) throw ParamError("Dirichlet parameters must be positive");
}

std::vector<double> BayesPrior::concentration(std::size_t classes) const {
  return dirichlet_a.empty() ? std::vector<double>(classes, 1.0) : dirichlet_a;
}

PriorRandomness PriorRandomness::draw(std::size_t t_cap, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PriorRandomness r;
  r.z.resize(2 * t_cap);
  for (double& z : r.z) z = u(rng);
  r.z_prime_seed = rng();
  return r;
}

std::size_t TreeShape::internal_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.left >= 0; }));
}

std::string TreeShape::encode() const {
  std::string out;
  auto rec = [&](auto&& self, int id) -> void {
    const Node& n = nodes[static_cast<std::size_t>(id)];
    if (n.left < 0) {
      out += '.';
      return;
    }
    out += '(';
    self(self, n.left);
    self(self, n.right);
    out += ')';
  };
  rec(rec, 0);
  return out;
}

TreeShape sample_tree_from_prior(const BayesPrior& prior, std::span<const double> z) {
  TreeShape shape;
  shape.nodes.push_back({});
  std::size_t consumed = 0, internal = 0;
  for (std::size_t i = 0; i < shape.nodes.size() && internal < prior.t_cap; ++i) {
    if (consumed >= z.size()) throw ParamError("prior randomness vector is too short");
    const std::size_t depth = shape.nodes[i].depth;
    if (prior.split_probability(depth) > z[consumed++]) {
      const int left = static_cast<int>(shape.nodes.size());
      shape.nodes[i].left = left;
      shape.nodes[i].right = left + 1;
      shape.nodes.push_back({-1, -1, depth + 1});
      shape.nodes.push_back({-1, -1, depth + 1});
      ++internal;
    }
  }
  return shape;
}

double log_marginal_likelihood(const std::vector<std::vector<double>>& leaf_counts,
                               std::span<const double> a) {
  const double a_sum = std::accumulate(a.begin(), a.end(), 0.0);
  double norm = std::lgamma(a_sum);
  for (double ai : a) {
    if (!(ai > 0.0)) throw ParamError("Dirichlet parameters must be positive");
    norm -= std::lgamma(ai);
  }
  double total = 0.0;
  for (const auto& counts : leaf_counts) {
    if (counts.size() != a.size()) throw ParamError("leaf count vector has the wrong length");
    double n = 0.0;
    total += norm;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (!(counts[i] >= 0.0)) throw ParamError("class counts must be nonnegative");
      total += std::lgamma(counts[i] + a[i]);
      n += counts[i];
    }
    total -= std::lgamma(n + a_sum);
  }
  return total;
}

double log_marginal_likelihood(const DecisionTree& tree, std::span<const double> a) {
  if (tree.task() != Task::classification)
    throw ParamError("marginal likelihood needs a classification tree");
  std::vector<std::vector<double>> counts;
  for (const TreeNode& n : tree.nodes())
    if (n.is_leaf()) counts.push_back(n.stats.counts);
  return log_marginal_likelihood(counts, a);
}

double log_tree_prior(const DecisionTree& tree, const BayesPrior& prior, std::size_t functions) {
  if (tree.internal_count() > prior.t_cap) return kNegInf;
  const auto depth = node_depths(tree);
  const double log_f = std::log(static_cast<double>(functions));
  double total = 0.0;
  for (std::size_t i = 0; i < tree.node_count(); ++i) {
    const double p = prior.split_probability(depth[i]);
    total += tree.nodes()[i].is_leaf() ? std::log1p(-p) : std::log(p) - log_f;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Metropolis-Hastings

MHChain::MHChain(const Dataset& d, const NodeFunctionClass& functions, BayesPrior prior,
                 const PriorRandomness& rand)
    : d_(d),
      functions_(functions),
      prior_(std::move(prior)),
      rng_(rand.z_prime_seed),
      current_(DecisionTree::leaf(Task::classification, 2, 1, {0.0, {0.0, 0.0}, 0.0, 0.0})),
      map_(current_) {
  if (!d.is_classification()) throw ParamError("Bayesian tree search needs a classification dataset");
  if (functions.empty()) throw ParamError("node function class is empty");
  prior_.validate(d.classes());
  a_ = prior_.concentration(d.classes());

  const TreeShape shape = sample_tree_from_prior(prior_, rand.z);
  std::vector<TreeNode> nodes;
  for (const TreeShape::Node& s : shape.nodes) {
    TreeNode n = empty_leaf(d.classes());
    if (s.left >= 0) {
      n.split = functions_[uniform_index(rng_, functions_.size())];
      n.left = s.left;
      n.right = s.right;
    }
    nodes.push_back(std::move(n));
  }
  current_ = fitted(std::move(nodes));
  log_lik_ = log_marginal_likelihood(current_, a_);
  log_prior_ = log_tree_prior(current_, prior_, functions_.size());
  map_ = current_;
  map_log_post_ = log_posterior();
}

DecisionTree MHChain::fitted(std::vector<TreeNode> nodes) const {
  return DecisionTree(Task::classification, d_.classes(), d_.attributes(), std::move(nodes)).refit(d_);
}

std::optional<DecisionTree> MHChain::propose(Move move, double& log_q_ratio) {
  const DecisionTree& t = current_;
  const double log_f = std::log(static_cast<double>(functions_.size()));
  log_q_ratio = 0.0;
  switch (move) {
    case Move::grow: {
      if (t.internal_count() >= prior_.t_cap) return std::nullopt;
      const auto leaves = select(t, [&](std::size_t i) { return t.nodes()[i].is_leaf(); });
      const std::size_t leaf = leaves[uniform_index(rng_, leaves.size())];
      const NodeFunction f = functions_[uniform_index(rng_, functions_.size())];
      std::vector<TreeNode> nodes = t.nodes();
      nodes[leaf].split = f;
      nodes[leaf].left = static_cast<int>(nodes.size());
      nodes[leaf].right = static_cast<int>(nodes.size()) + 1;
      nodes.push_back(empty_leaf(d_.classes()));
      nodes.push_back(empty_leaf(d_.classes()));
      DecisionTree next = fitted(std::move(nodes));
      const auto nogs = select(next, [&](std::size_t i) { return is_nog(next, i); });
      log_q_ratio = std::log(static_cast<double>(leaves.size())) + log_f -
                    std::log(static_cast<double>(nogs.size()));
      return next;
    }
    case Move::prune: {
      const auto nogs = select(t, [&](std::size_t i) { return is_nog(t, i); });
      if (nogs.empty()) return std::nullopt;
      const int id = static_cast<int>(nogs[uniform_index(rng_, nogs.size())]);
      DecisionTree next = t.collapse(std::span<const int>(&id, 1));
      log_q_ratio = std::log(static_cast<double>(nogs.size())) -
                    std::log(static_cast<double>(next.leaf_count())) - log_f;
      return next;
    }
    case Move::change: {
      const auto internal = select(t, [&](std::size_t i) { return !t.nodes()[i].is_leaf(); });
      if (internal.empty()) return std::nullopt;
      const std::size_t id = internal[uniform_index(rng_, internal.size())];
      std::vector<TreeNode> nodes = t.nodes();
      nodes[id].split = functions_[uniform_index(rng_, functions_.size())];
      return fitted(std::move(nodes));
    }
    case Move::swap: {
      std::vector<std::pair<std::size_t, std::size_t>> pairs;
      for (std::size_t i = 0; i < t.node_count(); ++i) {
        const TreeNode& n = t.nodes()[i];
        if (n.is_leaf()) continue;
        for (int c : {n.left, n.right})
          if (!t.node(c).is_leaf()) pairs.emplace_back(i, static_cast<std::size_t>(c));
      }
      if (pairs.empty()) return std::nullopt;
      const auto [p, c] = pairs[uniform_index(rng_, pairs.size())];
      std::vector<TreeNode> nodes = t.nodes();
      std::swap(nodes[p].split, nodes[c].split);
      return fitted(std::move(nodes));
    }
  }
  return std::nullopt;
}

bool MHChain::step() {
  ++iteration_;
  last_move_ = static_cast<Move>(uniform_index(rng_, 4));
  double log_q_ratio = 0.0;
  std::optional<DecisionTree> next = propose(last_move_, log_q_ratio);
  if (!next) return false;

  const double lik = log_marginal_likelihood(*next, a_);
  const double pri = log_tree_prior(*next, prior_, functions_.size());
  double accept;
  if (pri == kNegInf) {
    accept = 0.0;
  } else if (log_prior_ == kNegInf) {
    accept = 1.0;
  } else {
    const double log_r = (lik + pri) - (log_lik_ + log_prior_) + log_q_ratio;
    accept = log_r >= 0.0 ? 1.0 : std::exp(log_r);
  }
  last_acceptance_ = accept;
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
  if (!(u < accept)) return false;

  current_ = std::move(*next);
  log_lik_ = lik;
  log_prior_ = pri;
  if (log_posterior() > map_log_post_) {
    map_ = current_;
    map_log_post_ = log_posterior();
  }
  return true;
}

MHResult mh_search(const Dataset& d, const NodeFunctionClass& functions, const BayesPrior& prior,
                   const PriorRandomness& rand, std::size_t omega, bool record_trace) {
  MHChain chain(d, functions, prior, rand);
  std::vector<TraceRow> trace;
  if (record_trace) trace.reserve(omega);
  for (std::size_t i = 0; i < omega; ++i) {
    const bool accepted = chain.step();
    if (record_trace)
      trace.push_back({chain.iteration(), chain.log_likelihood(), chain.current().leaf_count(), accepted});
  }
  return {chain.current(), chain.map_tree(), std::move(trace)};
}

void write_trace_csv(std::ostream& out, std::span<const TraceRow> trace) {
  out << "iteration,log_likelihood,leaves,accepted\n";
  char buf[64];
  for (const TraceRow& r : trace) {
    std::snprintf(buf, sizeof buf, "%.17g", r.log_likelihood);
    out << r.iteration << ',' << buf << ',' << r.leaves << ',' << (r.accepted ? 1 : 0) << '\n';
  }
}

double bayes_instance_loss(const Dataset& d, const NodeFunctionClass& functions,
                           const BayesPrior& prior, std::size_t omega, std::size_t replicates,
                           std::uint64_t seed, std::size_t instance) {
  if (replicates < 1) throw ParamError("at least one replicate is required");
  double total = 0.0;
  for (std::size_t r = 0; r < replicates; ++r) {
    const auto rand = PriorRandomness::draw(prior.t_cap, derive_seed(seed, instance, r));
    total += zero_one_loss(mh_search(d, functions, prior, rand, omega).final_tree, d);
  }
  return total / static_cast<double>(replicates);
}

double bayes_expected_loss(const InstanceCollection& collection, const BayesPrior& prior,
                           std::size_t omega, std::size_t replicates, std::uint64_t seed,
                           std::size_t workers) {
  if (collection.instances.empty()) throw ParamError("instance collection is empty");
  if (replicates < 1) throw ParamError("at least one replicate is required");
  const std::size_t n = collection.size();
  std::vector<NodeFunctionClass> functions(n);
  for (std::size_t i = 0; i < n; ++i) {
    prior.validate(collection.instances[i].classes());
    functions[i] = build_node_functions(collection.instances[i]);
  }
  std::vector<double> losses(n * replicates);
  parallel_for(losses.size(), workers, [&](std::size_t k) {
    const std::size_t i = k / replicates, r = k % replicates;
    const Dataset& d = collection.instances[i];
    const auto rand = PriorRandomness::draw(prior.t_cap, derive_seed(seed, i, r));
    losses[k] = zero_one_loss(mh_search(d, functions[i], prior, rand, omega).final_tree, d);
  });
  double total = 0.0;
  for (double l : losses) total += l;
  return total / static_cast<double>(losses.size());
}

}  // namespace dtx
