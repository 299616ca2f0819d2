#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "dtx/error.hpp"
#include "dtx/tune.hpp"
#include "support.hpp"

using namespace dtx;

namespace {

struct Split {
  std::vector<Dataset> train, eval;
};

Split noisy_split(std::size_t count, std::uint64_t seed, std::size_t n = 80) {
  Split s;
  holdout_instances(synth_instances("noisy-blobs", count, n, seed), 0.3, seed, s.train, s.eval);
  return s;
}

std::vector<DecisionTree> grow(const std::vector<Dataset>& train, const CriterionParams& c, const StopRule& stop) {
  std::vector<DecisionTree> out;
  for (const auto& d : train) out.push_back(top_down_learn(d, build_node_functions(d), c, stop));
  return out;
}

double mean_loss_at(const std::vector<DecisionTree>& trees, const std::vector<Dataset>& eval, double alpha) {
  double total = 0.0;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    const auto p = mccp_path(trees[i]);
    total += zero_one_loss(prune_at(p, alpha), eval[i]);
  }
  return total / static_cast<double>(trees.size());
}

void check_consistent(const TuningResult& r) {
  REQUIRE_FALSE(r.surface.empty());
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& row : r.surface) lo = std::min(lo, row.mean_loss);
  CHECK(r.best_loss == lo);
  CHECK(r.surface[r.best_index].mean_loss == r.best_loss);
  CHECK(r.surface[r.best_index].point == r.best_point);
}

}  // namespace

TEST_SUITE("tune") {
  TEST_CASE("axis grammar") {
    CHECK(parse_axis("a", "0.05:0.35:0.1").values == std::vector<double>{0.05, 0.15, 0.25, 0.35});
    CHECK(parse_axis("a", "0:1:0.1").values.size() == 11);
    CHECK(parse_axis("a", "0:1:0.1").values.back() == 1.0);
    CHECK(parse_axis("a", "0.3,1,2.5").values == std::vector<double>{0.3, 1.0, 2.5});
    CHECK(parse_axis("a", "7").values == std::vector<double>{7.0});
    CHECK_THROWS_AS(parse_axis("a", "1:0:0.1"), ParamError);
    CHECK_THROWS_AS(parse_axis("a", "0:1:0"), ParamError);
    CHECK_THROWS_AS(parse_axis("a", "0:1"), ParamError);
    CHECK_THROWS_AS(parse_axis("a", "x"), ParamError);
  }

  TEST_CASE("grid enumeration and the default grid") {
    ParamGrid g{{parse_axis("x", "1,2"), parse_axis("y", "5,6,7")}};
    CHECK(g.size() == 6);
    CHECK(g.point(0) == std::vector<double>{1, 5});
    CHECK(g.point(1) == std::vector<double>{1, 6});
    CHECK(g.point(3) == std::vector<double>{2, 5});
    const auto d = default_tsallis_grid();
    CHECK(d.size() == 40 * 8);
    CHECK(d.point(0) == std::vector<double>{0.05, 1});
    CHECK(d.point(d.size() - 1) == std::vector<double>{3.95, 8});
  }

  TEST_CASE("singleton gini grid returns the gini loss") {
    const auto c = synth_instances("noisy-blobs", 3, 60, 4);
    const ParamGrid g{{parse_axis("alpha", "2"), integer_axis("beta", 1, 1)}};
    const Protocol proto{ProtocolKind::k_fold, 5, 0.2, 11};
    const auto r = erm_grid_split(c, g, SplitFamily::tsallis, StopRule::depth(3), proto);
    double expected = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i)
      expected += protocol_loss(c.instances[i], i, Preset::gini, StopRule::depth(3), proto);
    CHECK(r.best_point == std::vector<double>{2, 1});
    CHECK(r.best_loss == doctest::Approx(expected / 3.0).epsilon(1e-15));
  }

  TEST_CASE("grid search is worker-independent and reports its own minimum") {
    const auto c = synth_instances("blobs", 3, 60, 8);
    const ParamGrid g{{parse_axis("alpha", "0.5,1,2,3"), integer_axis("beta", 1, 3)}};
    const Protocol proto{ProtocolKind::holdout, 5, 0.3, 2};
    const auto a = erm_grid_split(c, g, SplitFamily::tsallis, StopRule::depth(3), proto, 1);
    const auto b = erm_grid_split(c, g, SplitFamily::tsallis, StopRule::depth(3), proto, 4);
    CHECK(a.surface.size() == g.size());
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(a.surface[k].losses == b.surface[k].losses);
    CHECK(a.best_index == b.best_index);
    check_consistent(a);
    // Ties go to the first point in enumeration order.
    for (std::size_t k = 0; k < a.best_index; ++k) CHECK(a.surface[k].mean_loss > a.best_loss);
  }

  TEST_CASE("gamma and tweedie grids") {
    const auto c = synth_instances("noisy-blobs", 2, 50, 1);
    const auto r = erm_grid_split(c, ParamGrid{{parse_axis("gamma", "0.25,0.5,1")}}, SplitFamily::gamma,
                                  StopRule::depth(3), Protocol{ProtocolKind::k_fold, 3, 0.2, 0});
    check_consistent(r);
    const auto reg = synth_instances("regression-clusters", 2, 60, 2);
    const auto t = erm_grid_split(reg, ParamGrid{{parse_axis("p", "0:1:0.5")}}, SplitFamily::tweedie,
                                  StopRule::depth(2), Protocol{ProtocolKind::train_only, 5, 0.2, 0});
    check_consistent(t);
    CHECK_THROWS_AS(erm_grid_split(reg, default_tsallis_grid(), SplitFamily::tsallis, StopRule::depth(2),
                                   Protocol{}),
                    ParamError);
  }

  TEST_CASE("p = 0 surface equals the directly computed MSE") {
    const auto reg = synth_instances("regression-clusters", 1, 60, 2);
    const auto r = erm_grid_split(reg, ParamGrid{{parse_axis("p", "0")}}, SplitFamily::tweedie,
                                  StopRule::depth(2), Protocol{ProtocolKind::train_only, 5, 0.2, 0});
    const Dataset& d = reg.instances[0];
    const auto t = top_down_learn(d, build_node_functions(d), Tweedie{0.0}, StopRule::depth(2));
    double sse = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double e = t.predict_value(d.row(i)) - d.target(i);
      sse += e * e;
    }
    CHECK(r.best_loss == doctest::Approx(sse / static_cast<double>(d.size())).epsilon(1e-12));
  }

  TEST_CASE("exact pruning: single-leaf tree has one piece") {
    const Dataset d = synth_instances("noisy-blobs", 1, 40, 1).instances[0];
    const std::vector<DecisionTree> trees{DecisionTree::leaf(Task::classification, 2, 2, {0.0, {0.0, 0.0}, 0.0, 0.0}).refit(d)};
    const std::vector<Dataset> eval{d};
    const auto r = erm_mccp_exact(trees, eval);
    REQUIRE(r.pieces.size() == 1);
    CHECK(r.pieces[0].lo == 0.0);
    CHECK(std::isinf(r.pieces[0].hi));
    CHECK(r.best_loss == zero_one_loss(trees[0], d));
  }

  TEST_CASE("exact pruning beats a dense alpha grid") {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto sp = noisy_split(4, s);
      const auto trees = grow(sp.train, Preset::gini, StopRule::depth(64));
      const auto r = erm_mccp_exact(trees, sp.eval);
      check_consistent(r);
      const double top = 0.2;
      for (int k = 0; k <= 400; ++k)
        CHECK(r.best_loss <= mean_loss_at(trees, sp.eval, top * k / 400.0) + 1e-15);
      CHECK(mean_loss_at(trees, sp.eval, r.best_alpha) == doctest::Approx(r.best_loss).epsilon(1e-15));
    }
  }

  TEST_CASE("pieces partition [0, inf) and agree with per-instance paths") {
    const auto sp = noisy_split(3, 9);
    const auto trees = grow(sp.train, Preset::entropy, StopRule::depth(6));
    const ExactPruneProblem prob(trees, sp.eval);
    const auto pieces = prob.pieces(0.0);
    CHECK(pieces.front().lo == 0.0);
    CHECK(std::isinf(pieces.back().hi));
    for (std::size_t j = 1; j < pieces.size(); ++j) CHECK(pieces[j].lo == pieces[j - 1].hi);
    for (const auto& p : pieces) {
      const double a = p.representative();
      CHECK(a >= p.lo);
      CHECK(a < p.hi);
      CHECK(mean_loss_at(trees, sp.eval, a) == doctest::Approx(p.mean_loss).epsilon(1e-15));
    }
    CHECK(pieces.size() <= prob.total_internal() + 1);
  }

  TEST_CASE("large eta selects root-only trees") {
    const auto sp = noisy_split(3, 2);
    const auto trees = grow(sp.train, Preset::gini, StopRule::depth(64));
    const auto r = erm_mccp_exact(trees, sp.eval, 1.0);
    CHECK(r.pieces[r.best_piece].mean_leaves == 1.0);
  }

  TEST_CASE("frontier leaves do not increase with eta") {
    const auto sp = noisy_split(3, 5, 120);
    const std::vector<double> etas{0, 0.001, 0.003, 0.01, 0.02, 0.05, 0.1, 1.0};
    const auto rows = frontier_sweep(sp.train, sp.eval, Preset::gini, StopRule::depth(64), etas);
    REQUIRE(rows.size() == etas.size());
    for (std::size_t k = 1; k < rows.size(); ++k) CHECK(rows[k].leaves <= rows[k - 1].leaves);
    CHECK(rows.back().leaves == 1.0);
    const auto zero = erm_mccp_exact(grow(sp.train, Preset::gini, StopRule::depth(64)), sp.eval);
    CHECK(rows[0].accuracy == doctest::Approx(1.0 - zero.best_loss).epsilon(1e-15));
  }

  TEST_CASE("joint tuning with eta 0 matches exact tuning at the best point") {
    const auto sp = noisy_split(3, 12);
    const ParamGrid g{{parse_axis("alpha", "0.5,2"), integer_axis("beta", 1, 2)}};
    const auto r = erm_joint_split_prune(sp.train, sp.eval, g, 0.0, StopRule::depth(5), 2);
    check_consistent(r);
    const auto c = criterion_at(SplitFamily::tsallis, r.best_point);
    const auto exact = erm_mccp_exact(grow(sp.train, c, StopRule::depth(5)), sp.eval);
    CHECK(exact.best_loss == r.best_loss);
    CHECK(exact.best_alpha == r.best_alpha);
  }

  TEST_CASE("pessimistic grid: zero constants and an overwhelming c1") {
    const auto sp = noisy_split(3, 3);
    const auto trees = grow(sp.train, Preset::gini, StopRule::depth(64));
    const auto r = erm_pessimistic(trees, sp.eval, ParamGrid{{parse_axis("c1", "0"), parse_axis("c2", "0")}});
    double expected = 0.0;
    for (std::size_t i = 0; i < trees.size(); ++i)
      expected += zero_one_loss(pessimistic_prune(trees[i], {0, 0}, 2), sp.eval[i]);
    CHECK(r.best_loss == doctest::Approx(expected / 3.0).epsilon(1e-15));

    // On separable blobs the root leaf is far worse than any real tree.
    Split blobs;
    holdout_instances(synth_instances("blobs", 3, 90, 1), 0.3, 1, blobs.train, blobs.eval);
    const auto bt = grow(blobs.train, Preset::gini, StopRule::depth(64));
    const auto big = erm_pessimistic(bt, blobs.eval, ParamGrid{{parse_axis("c1", "0,0.5,1000000"), parse_axis("c2", "0")}}, 3);
    check_consistent(big);
    CHECK(big.best_point[0] != 1e6);
    CHECK(big.surface[2].mean_loss > big.best_loss);
  }

  TEST_CASE("bayes grid: single-leaf prior never wins on separable data") {
    const auto c = synth_instances("blobs", 2, 45, 6);
    const ParamGrid g{{parse_axis("sigma", "0.000000001,0.9"), parse_axis("phi", "0")}};
    const auto r = erm_bayes(c, g, BayesPrior{0.5, 1.0, 6, {}}, 300, 1, 4, 2);
    check_consistent(r);
    CHECK(r.best_point[0] == 0.9);
    const auto again = erm_bayes(c, g, BayesPrior{0.5, 1.0, 6, {}}, 300, 1, 4, 1);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(again.surface[k].losses == r.surface[k].losses);
    const auto one = erm_bayes(c, ParamGrid{{parse_axis("sigma", "0.5"), parse_axis("phi", "1")}},
                               BayesPrior{0.5, 1.0, 6, {}}, 10, 1, 4);
    CHECK(one.best_point == std::vector<double>{0.5, 1});
  }

  TEST_CASE("mismatched inputs are rejected") {
    const auto sp = noisy_split(2, 0);
    const auto trees = grow(sp.train, Preset::gini, StopRule::depth(2));
    const std::vector<Dataset> one{sp.eval[0]};
    CHECK_THROWS_AS(erm_mccp_exact(trees, one), ParamError);
    CHECK_THROWS_AS(ExactPruneProblem(trees, sp.eval).pieces(-1.0), ParamError);
  }
}
