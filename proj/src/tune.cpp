#include "dtx/tune.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "dtx/error.hpp"
#include "dtx/parallel.hpp"

namespace dtx {

namespace {

double parse_number(std::string_view s, std::string_view spec) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ParamError("malformed grid '" + std::string(spec) + "'");
  return v;
}

// Snaps lo + k * step to 12 significant digits so that 0.05 + 4 * 0.1 is 0.45.
double tidy(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::strtod(buf, nullptr);
}

// Smallest mean loss; ties go to the lexicographically smallest point.
std::size_t argmin_surface(const std::vector<SurfaceRow>& surface) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < surface.size(); ++i) {
    const auto& a = surface[i];
    const auto& b = surface[best];
    if (a.mean_loss < b.mean_loss || (a.mean_loss == b.mean_loss && a.point < b.point)) best = i;
  }
  return best;
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Evaluates loss(point, instance) for every pair and reduces in grid order.
template <class Loss>
TuningResult grid_erm(const ParamGrid& grid, std::size_t instances, std::size_t workers, Loss loss) {
  if (grid.size() == 0) throw ParamError("parameter grid is empty");
  if (instances == 0) throw ParamError("instance collection is empty");
  std::vector<double> cells(grid.size() * instances);
  parallel_for(cells.size(), workers, [&](std::size_t k) {
    const std::size_t g = k / instances, i = k % instances;
    cells[k] = loss(grid.point(g), i);
  });
  TuningResult r;
  r.axes = grid.names();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    SurfaceRow row;
    row.point = grid.point(g);
    row.losses.assign(cells.begin() + static_cast<std::ptrdiff_t>(g * instances),
                      cells.begin() + static_cast<std::ptrdiff_t>((g + 1) * instances));
    row.mean_loss = mean(row.losses);
    r.surface.push_back(std::move(row));
  }
  r.best_index = argmin_surface(r.surface);
  r.best_point = r.surface[r.best_index].point;
  r.best_loss = r.surface[r.best_index].mean_loss;
  return r;
}

void check_pairs(std::span<const DecisionTree> trees, std::span<const Dataset> eval) {
  if (trees.empty()) throw ParamError("instance collection is empty");
  if (trees.size() != eval.size())
    throw ParamError("need exactly one evaluation set per tree");
}

}  // namespace

// ---------------------------------------------------------------------------
// Grids

Axis parse_axis(std::string name, std::string_view spec) {
  Axis axis{std::move(name), {}};
  if (spec.find(':') != std::string_view::npos) {
    std::vector<double> parts;
    std::size_t start = 0;
    for (;;) {
      auto colon = spec.find(':', start);
      parts.push_back(parse_number(spec.substr(start, colon - start), spec));
      if (colon == std::string_view::npos) break;
      start = colon + 1;
    }
    if (parts.size() != 3) throw ParamError("grid '" + std::string(spec) + "' must be LO:HI:STEP");
    const double lo = parts[0], hi = parts[1], step = parts[2];
    if (!(step > 0.0)) throw ParamError("grid step must be positive in '" + std::string(spec) + "'");
    if (hi < lo) throw ParamError("grid upper end is below lower end in '" + std::string(spec) + "'");
    for (std::size_t k = 0;; ++k) {
      const double v = lo + static_cast<double>(k) * step;
      if (v > hi + 1e-12) break;
      axis.values.push_back(tidy(v));
    }
  } else {
    std::size_t start = 0;
    for (;;) {
      auto comma = spec.find(',', start);
      axis.values.push_back(parse_number(spec.substr(start, comma - start), spec));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
  }
  return axis;
}

Axis integer_axis(std::string name, int lo, int hi) {
  if (hi < lo) throw ParamError("empty integer axis '" + name + "'");
  Axis axis{std::move(name), {}};
  for (int v = lo; v <= hi; ++v) axis.values.push_back(v);
  return axis;
}

std::size_t ParamGrid::size() const {
  if (axes.empty()) return 0;
  std::size_t n = 1;
  for (const Axis& a : axes) n *= a.values.size();
  return n;
}

std::vector<double> ParamGrid::point(std::size_t index) const {
  std::vector<double> p(axes.size());
  for (std::size_t k = axes.size(); k-- > 0;) {
    const auto& v = axes[k].values;
    p[k] = v[index % v.size()];
    index /= v.size();
  }
  return p;
}

std::vector<std::string> ParamGrid::names() const {
  std::vector<std::string> out;
  for (const Axis& a : axes) out.push_back(a.name);
  return out;
}

ParamGrid default_tsallis_grid() {
  return {{parse_axis("alpha", "0.05:3.95:0.1"), integer_axis("beta", 1, 8)}};
}

double AlphaPiece::representative() const {
  return std::isinf(hi) ? 2.0 * lo + 1.0 : lo + (hi - lo) / 2.0;
}

// ---------------------------------------------------------------------------
// Split criteria

CriterionParams criterion_at(SplitFamily family, std::span<const double> point) {
  CriterionParams c;
  switch (family) {
    case SplitFamily::tsallis: {
      if (point.size() != 2) throw ParamError("Tsallis grids need axes (alpha, beta)");
      const double beta = point[1];
      if (beta != std::floor(beta)) throw ParamError("beta must be an integer");
      c = Tsallis{point[0], static_cast<int>(beta), 1.0};
      break;
    }
    case SplitFamily::gamma:
      if (point.size() != 1) throw ParamError("gamma grids need one axis");
      c = GammaProduct{point[0], 1.0};
      break;
    case SplitFamily::tweedie:
      if (point.size() != 1) throw ParamError("Tweedie grids need one axis (p)");
      c = Tweedie{point[0]};
      break;
  }
  validate(c);
  return c;
}

double evaluation_loss(const DecisionTree& tree, const Dataset& d) {
  return d.is_classification() ? zero_one_loss(tree, d) : mse_loss(tree, d);
}

NodeFunctionClass node_functions_or_empty(const Dataset& d) {
  try {
    return build_node_functions(d);
  } catch (const DataError&) {
    return {};
  }
}

double protocol_loss(const Dataset& d, std::size_t instance, const CriterionParams& criterion,
                     const StopRule& stop, const Protocol& protocol) {
  auto fit_and_score = [&](const Dataset& train, const Dataset& test) {
    const auto functions = node_functions_or_empty(train);
    return evaluation_loss(top_down_learn(train, functions, criterion, stop), test);
  };
  const std::uint64_t seed = derive_seed(protocol.seed, instance);
  switch (protocol.kind) {
    case ProtocolKind::train_only:
      return fit_and_score(d, d);
    case ProtocolKind::k_fold: {
      const FoldPlan plan = make_folds(d, protocol.folds, seed);
      double total = 0.0;
      for (std::size_t f = 0; f < plan.k; ++f) {
        const auto train = plan.train_indices(f), test = plan.test_indices(f);
        total += fit_and_score(d.subset(train), d.subset(test));
      }
      return total / static_cast<double>(plan.k);
    }
    case ProtocolKind::holdout: {
      const HoldoutSplit split = holdout_split(d.size(), protocol.holdout, seed);
      return fit_and_score(d.subset(split.train), d.subset(split.test));
    }
  }
  return 0.0;
}

TuningResult erm_grid_split(const InstanceCollection& collection, const ParamGrid& grid,
                            SplitFamily family, const StopRule& stop, const Protocol& protocol,
                            std::size_t workers) {
  collection.validate();
  const bool regression = family == SplitFamily::tweedie;
  for (const Dataset& d : collection.instances) {
    if (regression == d.is_classification())
      throw ParamError("criterion family does not match the task of the instances");
    if (protocol.kind == ProtocolKind::k_fold && (protocol.folds < 2 || protocol.folds > d.size()))
      throw ParamError("fold count must lie in [2, n] for every instance");
  }
  // Validate every point up front so bad grids fail before any learning.
  for (std::size_t g = 0; g < grid.size(); ++g) criterion_at(family, grid.point(g));
  return grid_erm(grid, collection.size(), workers, [&](const std::vector<double>& p, std::size_t i) {
    return protocol_loss(collection.instances[i], i, criterion_at(family, p), stop, protocol);
  });
}

// ---------------------------------------------------------------------------
// Exact pruning-parameter tuning

ExactPruneProblem::ExactPruneProblem(std::span<const DecisionTree> trees,
                                     std::span<const Dataset> eval) {
  check_pairs(trees, eval);
  for (std::size_t i = 0; i < trees.size(); ++i) {
    paths_.push_back(mccp_path(trees[i]));
    total_internal_ += trees[i].internal_count();
    std::vector<double> loss, leaves;
    for (const PathEntry& e : paths_.back().entries) {
      loss.push_back(evaluation_loss(e.tree, eval[i]));
      leaves.push_back(static_cast<double>(e.leaves));
    }
    losses_.push_back(std::move(loss));
    leaves_.push_back(std::move(leaves));
  }
}

std::vector<AlphaPiece> ExactPruneProblem::pieces(double eta) const {
  if (!(eta >= 0.0)) throw ParamError("complexity coefficient eta must be nonnegative");
  std::vector<double> cuts;
  for (const PruningPath& p : paths_)
    for (const PathEntry& e : p.entries) cuts.push_back(e.alpha);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const double n = static_cast<double>(paths_.size());
  std::vector<AlphaPiece> out;
  for (std::size_t j = 0; j < cuts.size(); ++j) {
    AlphaPiece piece;
    piece.lo = cuts[j];
    piece.hi = j + 1 < cuts.size() ? cuts[j + 1] : std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < paths_.size(); ++i) {
      const std::size_t k = paths_[i].piece(piece.lo);
      piece.losses.push_back(losses_[i][k]);
      piece.mean_loss += losses_[i][k];
      piece.mean_leaves += leaves_[i][k];
    }
    piece.mean_loss /= n;
    piece.mean_leaves /= n;
    piece.score = piece.mean_loss + eta * piece.mean_leaves;
    out.push_back(std::move(piece));
  }
  return out;
}

std::size_t best_piece(std::span<const AlphaPiece> pieces) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < pieces.size(); ++j)
    if (pieces[j].score < pieces[best].score) best = j;
  return best;
}

TuningResult erm_mccp_exact(std::span<const DecisionTree> trees, std::span<const Dataset> eval,
                            double eta) {
  const ExactPruneProblem problem(trees, eval);
  TuningResult r;
  r.axes = {"alpha_tilde"};
  r.pieces = problem.pieces(eta);
  for (const AlphaPiece& p : r.pieces)
    r.surface.push_back({{p.representative()}, p.score, p.losses});
  r.best_piece = r.best_index = best_piece(r.pieces);
  r.best_alpha = r.pieces[r.best_piece].representative();
  r.best_point = {r.best_alpha};
  r.best_loss = r.pieces[r.best_piece].score;
  return r;
}

TuningResult erm_pessimistic(std::span<const DecisionTree> trees, std::span<const Dataset> eval,
                             const ParamGrid& grid, std::size_t workers) {
  check_pairs(trees, eval);
  if (grid.axes.size() != 2) throw ParamError("pessimistic grids need axes (c1, c2)");
  for (const Axis& a : grid.axes)
    for (double v : a.values)
      if (!(v >= 0.0)) throw ParamError("pessimistic parameters must be nonnegative");
  return grid_erm(grid, trees.size(), workers, [&](const std::vector<double>& p, std::size_t i) {
    const DecisionTree pruned = pessimistic_prune(trees[i], {p[0], p[1]}, trees[i].attributes());
    return evaluation_loss(pruned, eval[i]);
  });
}

TuningResult erm_bayes(const InstanceCollection& collection, const ParamGrid& grid,
                       const BayesPrior& base, std::size_t omega, std::size_t replicates,
                       std::uint64_t seed, std::size_t workers) {
  collection.validate();
  if (grid.axes.size() != 2) throw ParamError("Bayesian grids need axes (sigma, phi)");
  for (std::size_t g = 0; g < grid.size(); ++g) {
    BayesPrior prior = base;
    prior.sigma = grid.point(g)[0];
    prior.phi = grid.point(g)[1];
    prior.validate(collection.instances[0].classes());
  }
  std::vector<NodeFunctionClass> functions;
  for (const Dataset& d : collection.instances) functions.push_back(build_node_functions(d));
  return grid_erm(grid, collection.size(), workers, [&](const std::vector<double>& p, std::size_t i) {
    BayesPrior prior = base;
    prior.sigma = p[0];
    prior.phi = p[1];
    return bayes_instance_loss(collection.instances[i], functions[i], prior, omega, replicates, seed, i);
  });
}

TuningResult erm_joint_split_prune(std::span<const Dataset> train, std::span<const Dataset> eval,
                                   const ParamGrid& grid, double eta, const StopRule& stop,
                                   std::size_t workers) {
  if (train.empty()) throw ParamError("instance collection is empty");
  if (train.size() != eval.size()) throw ParamError("need exactly one evaluation set per instance");
  if (!(eta >= 0.0)) throw ParamError("complexity coefficient eta must be nonnegative");
  for (std::size_t g = 0; g < grid.size(); ++g) criterion_at(SplitFamily::tsallis, grid.point(g));
  if (grid.size() == 0) throw ParamError("parameter grid is empty");

  std::vector<NodeFunctionClass> functions;
  for (const Dataset& d : train) functions.push_back(node_functions_or_empty(d));

  std::vector<std::vector<AlphaPiece>> per_point(grid.size());
  parallel_for(grid.size(), workers, [&](std::size_t g) {
    const CriterionParams c = criterion_at(SplitFamily::tsallis, grid.point(g));
    std::vector<DecisionTree> trees;
    for (std::size_t i = 0; i < train.size(); ++i)
      trees.push_back(top_down_learn(train[i], functions[i], c, stop));
    per_point[g] = ExactPruneProblem(trees, eval).pieces(eta);
  });

  TuningResult r;
  r.axes = grid.names();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto& pieces = per_point[g];
    const AlphaPiece& best = pieces[best_piece(pieces)];
    r.surface.push_back({grid.point(g), best.score, best.losses});
  }
  r.best_index = argmin_surface(r.surface);
  r.best_point = r.surface[r.best_index].point;
  r.best_loss = r.surface[r.best_index].mean_loss;
  r.pieces = per_point[r.best_index];
  r.best_piece = best_piece(r.pieces);
  r.best_alpha = r.pieces[r.best_piece].representative();
  return r;
}

std::vector<FrontierRow> frontier_sweep(std::span<const Dataset> train, std::span<const Dataset> eval,
                                        const CriterionParams& criterion, const StopRule& stop,
                                        std::span<const double> etas) {
  if (etas.empty()) throw ParamError("eta list is empty");
  if (train.size() != eval.size() || train.empty())
    throw ParamError("need one evaluation set per training set");
  std::vector<DecisionTree> trees;
  for (const Dataset& d : train)
    trees.push_back(top_down_learn(d, node_functions_or_empty(d), criterion, stop));
  const ExactPruneProblem problem(trees, eval);
  std::vector<FrontierRow> rows;
  for (double eta : etas) {
    const auto pieces = problem.pieces(eta);
    const AlphaPiece& p = pieces[best_piece(pieces)];
    rows.push_back({eta, p.representative(), 1.0 - p.mean_loss, p.mean_leaves, eta * p.mean_leaves});
  }
  return rows;
}

void holdout_instances(const InstanceCollection& collection, double fraction, std::uint64_t seed,
                       std::vector<Dataset>& train, std::vector<Dataset>& eval) {
  train.clear();
  eval.clear();
  for (std::size_t i = 0; i < collection.size(); ++i) {
    const Dataset& d = collection.instances[i];
    const HoldoutSplit split = holdout_split(d.size(), fraction, derive_seed(seed, i));
    train.push_back(d.subset(split.train));
    eval.push_back(d.subset(split.test));
  }
}

}  // namespace dtx
