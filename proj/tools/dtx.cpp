// dtx: train, tune and report on decision trees from the command line.

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dtx/bayes.hpp"
#include "dtx/criteria.hpp"
#include "dtx/data.hpp"
#include "dtx/error.hpp"
#include "dtx/prune.hpp"
#include "dtx/report.hpp"
#include "dtx/tree.hpp"
#include "dtx/tune.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kGridHelp =
    "grid: LO:HI:STEP (both ends inclusive within 1e-12), a comma list, or one number";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw dtx::DataError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  std::string hex;
  char h[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(h, sizeof h, "%02x", md[i]);
    hex += h;
  }
  return hex;
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("DTX_SEED")) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (end && *end == '\0' && *env != '\0') return v;
    throw UsageError(std::string("DTX_SEED is not an unsigned integer: '") + env + "'");
  }
  return 0;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw dtx::DataError("cannot write " + path.string());
  out << text;
}

template <class Writer>
std::string render(Writer&& w) {
  std::ostringstream s;
  w(s);
  return s.str();
}

// ---------------------------------------------------------------------------
// Shared option groups

struct CriterionFlags {
  std::string name = "gini";
  std::optional<double> alpha, gamma, p, scale;
  std::optional<int> beta;

  void add(CLI::App* app, const std::string& default_name) {
    name = default_name;
    app->add_option("--criterion", name, "tsallis|gamma|gini|entropy|km96|tweedie")
        ->check(CLI::IsMember({"tsallis", "gamma", "gini", "entropy", "km96", "tweedie"}))
        ->capture_default_str();
    app->add_option("--alpha", alpha, "Tsallis alpha");
    app->add_option("--beta", beta, "Tsallis beta (integer >= 1)");
    app->add_option("--gamma", gamma, "gamma-product exponent in (0, 1]");
    app->add_option("--p", p, "Tweedie power in [0, 1]");
    app->add_option("--C", scale, "criterion scale C > 0");
  }

  dtx::CriterionParams resolve() const {
    auto forbid = [&](bool present, const char* flag) {
      if (present) throw UsageError(std::string(flag) + " does not apply to --criterion " + name);
    };
    auto need = [&](bool present, const char* flag) {
      if (!present) throw UsageError("--criterion " + name + " requires " + flag);
    };
    dtx::CriterionParams c;
    if (name == "tsallis") {
      need(alpha.has_value(), "--alpha");
      need(beta.has_value(), "--beta");
      forbid(gamma.has_value(), "--gamma");
      forbid(p.has_value(), "--p");
      c = dtx::Tsallis{*alpha, *beta, scale.value_or(1.0)};
    } else if (name == "gamma") {
      need(gamma.has_value(), "--gamma");
      forbid(alpha || beta, "--alpha/--beta");
      forbid(p.has_value(), "--p");
      c = dtx::GammaProduct{*gamma, scale.value_or(1.0)};
    } else if (name == "tweedie") {
      need(p.has_value(), "--p");
      forbid(alpha || beta, "--alpha/--beta");
      forbid(gamma.has_value(), "--gamma");
      forbid(scale.has_value(), "--C");
      c = dtx::Tweedie{*p};
    } else {
      forbid(alpha || beta || gamma || p || scale, "--alpha/--beta/--gamma/--p/--C");
      c = dtx::preset_from_string(name);
    }
    dtx::validate(c);
    return c;
  }

  json to_json() const {
    json j{{"criterion", name}};
    if (alpha) j["alpha"] = *alpha;
    if (beta) j["beta"] = *beta;
    if (gamma) j["gamma"] = *gamma;
    if (p) j["p"] = *p;
    if (scale) j["C"] = *scale;
    return j;
  }
};

struct StopFlags {
  std::optional<std::size_t> size, depth;

  void add(CLI::App* app) {
    auto* s = app->add_option("--size", size, "stop at T internal nodes");
    auto* d = app->add_option("--max-depth", depth, "stop at depth M");
    s->excludes(d);
  }

  dtx::StopRule resolve(std::optional<std::size_t> default_depth) const {
    if (size) return dtx::StopRule::internal_nodes(*size);
    if (depth) return dtx::StopRule::depth(*depth);
    if (default_depth) return dtx::StopRule::depth(*default_depth);
    throw UsageError("one of --size or --max-depth is required");
  }

  json to_json(const dtx::StopRule& rule) const {
    json j;
    if (rule.size) j["size"] = *rule.size;
    if (rule.max_depth) j["max_depth"] = *rule.max_depth;
    return j;
  }
};

struct DataFlags {
  std::vector<std::string> paths;
  std::string dir;

  void add(CLI::App* app) {
    auto* a = app->add_option("--data", paths, "instance CSV file(s)");
    auto* b = app->add_option("--data-dir", dir, "directory of instance CSV files");
    a->excludes(b);
  }

  std::vector<fs::path> files() const {
    std::vector<fs::path> out(paths.begin(), paths.end());
    if (!dir.empty()) {
      if (!fs::is_directory(dir)) throw dtx::DataError("not a directory: " + dir);
      for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".csv") out.push_back(e.path());
      std::sort(out.begin(), out.end());
    }
    if (out.empty()) throw UsageError("no instances given (use --data or --data-dir)");
    return out;
  }

  dtx::InstanceCollection load(dtx::Task task) const {
    dtx::InstanceCollection c;
    for (const auto& f : files()) c.instances.push_back(dtx::load_csv(f, task));
    c.validate();
    return c;
  }
};

struct ProtocolFlags {
  std::optional<std::size_t> folds;
  std::optional<double> holdout;
  bool train_only = false;

  void add(CLI::App* app, bool allow_train_only) {
    auto* f = app->add_option("--folds", folds, "k-fold protocol (default 5)");
    auto* h = app->add_option("--holdout", holdout, "held-out fraction protocol");
    f->excludes(h);
    if (allow_train_only) {
      auto* t = app->add_flag("--train-only", train_only, "score on the training data");
      t->excludes(f)->excludes(h);
    }
  }

  dtx::Protocol resolve(std::uint64_t seed) const {
    dtx::Protocol p;
    p.seed = seed;
    if (train_only) {
      p.kind = dtx::ProtocolKind::train_only;
    } else if (holdout) {
      if (!(*holdout > 0.0 && *holdout < 1.0)) throw UsageError("--holdout must lie in (0, 1)");
      p.kind = dtx::ProtocolKind::holdout;
      p.holdout = *holdout;
    } else {
      p.kind = dtx::ProtocolKind::k_fold;
      p.folds = folds.value_or(5);
    }
    return p;
  }

  json to_json(const dtx::Protocol& p) const {
    switch (p.kind) {
      case dtx::ProtocolKind::train_only:
        return {{"protocol", "train-only"}};
      case dtx::ProtocolKind::holdout:
        return {{"protocol", "holdout"}, {"holdout", p.holdout}};
      case dtx::ProtocolKind::k_fold:
        return {{"protocol", "k-fold"}, {"folds", p.folds}};
    }
    return {};
  }
};

// Collects what a run read and wrote; written last as PREFIX.manifest.json.
struct Manifest {
  std::string command;
  json flags = json::object();
  std::uint64_t seed = 0;
  json inputs = json::array();
  json outputs = json::array();
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void input(const fs::path& p) { inputs.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}}); }
  void output(const fs::path& p, const std::string& text) {
    write_text(p, text);
    outputs.push_back(p.string());
  }
  void finish(const fs::path& path) {
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    outputs.push_back(path.string());
    json j{{"command", command}, {"flags", flags},     {"seed", seed},
           {"inputs", inputs},   {"outputs", outputs}, {"duration_seconds", seconds}};
    write_text(path, j.dump(2) + "\n");
  }
};

void emit(const json& line) { std::cout << line.dump() << std::endl; }

fs::path with_suffix(const std::string& prefix, const char* suffix) { return prefix + suffix; }

// Writes surface, best and manifest files for a finished tuner.
void finish_tuning(Manifest& m, const std::string& prefix, const dtx::TuningResult& r) {
  m.output(with_suffix(prefix, ".surface.csv"), render([&](std::ostream& o) { dtx::write_surface_csv(o, r); }));
  if (!r.pieces.empty())
    m.output(with_suffix(prefix, ".pieces.csv"), render([&](std::ostream& o) { dtx::write_pieces_csv(o, r.pieces); }));
  const json best = dtx::best_json(r);
  m.output(with_suffix(prefix, ".best.json"), best.dump(2) + "\n");
  m.finish(with_suffix(prefix, ".manifest.json"));
  emit({{"command", m.command}, {"best", best}, {"grid_points", r.surface.size()}});
  std::cerr << m.command << ": best mean loss " << r.best_loss << " over " << r.surface.size()
            << " points\n";
}

// Grows one tree per training instance; used by the pruning tuners.
std::vector<dtx::DecisionTree> grow_all(const std::vector<dtx::Dataset>& train,
                                        const dtx::CriterionParams& c, const dtx::StopRule& stop) {
  std::vector<dtx::DecisionTree> trees;
  for (const auto& d : train) trees.push_back(dtx::top_down_learn(d, dtx::node_functions_or_empty(d), c, stop));
  return trees;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decision trees with tunable splitting, pruning and Bayesian priors"};
  app.require_subcommand(1);
  app.footer(std::string("Grid flags accept a ") + kGridHelp + ".\nDTX_SEED sets the default --seed.");

  std::optional<std::uint64_t> seed_flag;
  std::size_t workers = 1;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed_flag, "random seed (default: DTX_SEED or 0)");
    sub->add_option("--workers", workers, "evaluation threads")->check(CLI::PositiveNumber);
  };

  // train
  auto* train = app.add_subcommand("train", "learn one tree top-down");
  std::string train_data, train_out;
  CriterionFlags train_crit;
  StopFlags train_stop;
  train->add_option("--data", train_data, "training CSV")->required();
  train->add_option("--out", train_out, "model JSON path")->required();
  train_crit.add(train, "gini");
  train_stop.add(train);
  common(train);

  // tune-split / tune-regression
  auto* tsplit = app.add_subcommand("tune-split", "grid ERM over splitting-criterion parameters");
  auto* treg = app.add_subcommand("tune-regression", "grid ERM over the Tweedie power");
  DataFlags split_data, reg_data;
  ProtocolFlags split_proto, reg_proto;
  StopFlags split_stop, reg_stop;
  std::string split_family = "tsallis", alpha_grid = "0.05:3.95:0.1", gamma_grid = "0.1:1:0.1";
  std::string p_grid = "0:1:0.1", split_out, reg_out;
  int beta_max = 8;
  split_data.add(tsplit);
  split_proto.add(tsplit, true);
  split_stop.add(tsplit);
  tsplit->add_option("--family", split_family, "tsallis|gamma")
      ->check(CLI::IsMember({"tsallis", "gamma"}))
      ->capture_default_str();
  tsplit->add_option("--alpha-grid", alpha_grid, kGridHelp)->capture_default_str();
  tsplit->add_option("--beta-max", beta_max, "beta ranges over 1..B")->capture_default_str();
  tsplit->add_option("--gamma-grid", gamma_grid, kGridHelp)->capture_default_str();
  tsplit->add_option("--out", split_out, "output prefix")->required();
  common(tsplit);
  reg_data.add(treg);
  reg_proto.add(treg, true);
  reg_stop.add(treg);
  treg->add_option("--p-grid", p_grid, kGridHelp)->capture_default_str();
  treg->add_option("--out", reg_out, "output prefix")->required();
  common(treg);

  // Pruning tuners share growth flags and a holdout split.
  struct PruneFlags {
    DataFlags data;
    CriterionFlags crit;
    StopFlags stop;
    double holdout = 0.2;
    std::string out;
  };
  auto prune_options = [&](CLI::App* sub, PruneFlags& f) {
    f.data.add(sub);
    f.crit.add(sub, "gini");
    f.stop.add(sub);
    sub->add_option("--holdout", f.holdout, "held-out fraction per instance")->capture_default_str();
    sub->add_option("--out", f.out, "output prefix")->required();
    common(sub);
  };
  auto* tprune = app.add_subcommand("tune-prune", "exact ERM over the cost-complexity parameter");
  PruneFlags prune_flags;
  double prune_eta = 0.0;
  prune_options(tprune, prune_flags);
  tprune->add_option("--eta", prune_eta, "leaf penalty added to the held-out loss")->capture_default_str();
  auto* tpess = app.add_subcommand("tune-pessimistic", "grid ERM over pessimistic pruning (c1, c2)");
  PruneFlags pess_flags;
  std::string c1_grid = "0:2:0.25", c2_grid = "0:4:1";
  prune_options(tpess, pess_flags);
  tpess->add_option("--c1-grid", c1_grid, kGridHelp)->capture_default_str();
  tpess->add_option("--c2-grid", c2_grid, kGridHelp)->capture_default_str();

  // tune-bayes
  auto* tbayes = app.add_subcommand("tune-bayes", "grid ERM over the Bayesian prior (sigma, phi)");
  DataFlags bayes_data;
  std::string sigma_grid = "0.1:0.9:0.2", phi_grid = "0:2:0.5", bayes_out;
  std::size_t t_cap = 8, omega = 10000, replicates = 1;
  bayes_data.add(tbayes);
  tbayes->add_option("--sigma-grid", sigma_grid, kGridHelp)->capture_default_str();
  tbayes->add_option("--phi-grid", phi_grid, kGridHelp)->capture_default_str();
  tbayes->add_option("--t-cap", t_cap, "maximum internal nodes")->capture_default_str();
  tbayes->add_option("--omega", omega, "MH iterations")->capture_default_str();
  tbayes->add_option("--replicates", replicates, "chains per instance")->capture_default_str();
  tbayes->add_option("--out", bayes_out, "output prefix")->required();
  common(tbayes);

  // frontier
  auto* frontier = app.add_subcommand("frontier", "accuracy versus eta * leaves");
  PruneFlags front_flags;
  std::string eta_grid = "0,0.001,0.002,0.005,0.01,0.02,0.05,0.1";
  prune_options(frontier, front_flags);
  frontier->add_option("--eta-grid", eta_grid, kGridHelp)->capture_default_str();

  // heatmap
  auto* heatmap = app.add_subcommand("heatmap", "render a two-axis surface CSV as SVG");
  std::string surface_path, svg_out;
  heatmap->add_option("--surface", surface_path, "surface CSV")->required();
  heatmap->add_option("--out", svg_out, "SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const std::uint64_t seed = seed_flag ? *seed_flag : default_seed();

    if (*train) {
      Manifest m{"train"};
      const auto criterion = train_crit.resolve();
      const auto stop = train_stop.resolve(std::nullopt);
      const auto task = dtx::is_regression_criterion(criterion) ? dtx::Task::regression
                                                                : dtx::Task::classification;
      const auto d = dtx::load_csv(train_data, task);
      m.input(train_data);
      const auto tree = dtx::top_down_learn(d, dtx::node_functions_or_empty(d), criterion, stop);
      m.flags = train_crit.to_json();
      m.flags["stop"] = train_stop.to_json(stop);
      m.seed = seed;
      m.output(train_out, dtx::to_json(tree).dump(2) + "\n");
      fs::path mpath = train_out;
      m.finish(mpath.replace_extension(".manifest.json"));
      emit({{"command", "train"},
            {"train_loss", dtx::evaluation_loss(tree, d)},
            {"leaves", tree.leaf_count()},
            {"internal", tree.internal_count()},
            {"model", train_out}});
      return 0;
    }

    if (*tsplit || *treg) {
      const bool regression = treg->parsed();
      Manifest m{regression ? "tune-regression" : "tune-split"};
      DataFlags& data = regression ? reg_data : split_data;
      const auto collection = data.load(regression ? dtx::Task::regression : dtx::Task::classification);
      for (const auto& f : data.files()) m.input(f);
      const auto protocol = (regression ? reg_proto : split_proto).resolve(seed);
      const auto stop = (regression ? reg_stop : split_stop).resolve(std::size_t{5});
      dtx::ParamGrid grid;
      dtx::SplitFamily family;
      if (regression) {
        family = dtx::SplitFamily::tweedie;
        grid.axes = {dtx::parse_axis("p", p_grid)};
        m.flags["p_grid"] = p_grid;
      } else if (split_family == "gamma") {
        family = dtx::SplitFamily::gamma;
        grid.axes = {dtx::parse_axis("gamma", gamma_grid)};
        m.flags["gamma_grid"] = gamma_grid;
      } else {
        if (beta_max < 1) throw UsageError("--beta-max must be at least 1");
        family = dtx::SplitFamily::tsallis;
        grid.axes = {dtx::parse_axis("alpha", alpha_grid), dtx::integer_axis("beta", 1, beta_max)};
        m.flags["alpha_grid"] = alpha_grid;
        m.flags["beta_max"] = beta_max;
      }
      m.flags.update((regression ? reg_proto : split_proto).to_json(protocol));
      m.flags["stop"] = split_stop.to_json(stop);
      m.flags["workers"] = workers;
      m.seed = seed;
      const auto r = dtx::erm_grid_split(collection, grid, family, stop, protocol, workers);
      finish_tuning(m, regression ? reg_out : split_out, r);
      return 0;
    }

    if (*tprune || *tpess || *frontier) {
      PruneFlags& f = tprune->parsed() ? prune_flags : tpess->parsed() ? pess_flags : front_flags;
      Manifest m{tprune->parsed() ? "tune-prune" : tpess->parsed() ? "tune-pessimistic" : "frontier"};
      const auto criterion = f.crit.resolve();
      if (dtx::is_regression_criterion(criterion))
        throw UsageError("pruning needs a classification criterion");
      const auto stop = f.stop.resolve(std::size_t{5});
      if (!(f.holdout > 0.0 && f.holdout < 1.0)) throw UsageError("--holdout must lie in (0, 1)");
      const auto collection = f.data.load(dtx::Task::classification);
      for (const auto& p : f.data.files()) m.input(p);
      std::vector<dtx::Dataset> train_sets, eval_sets;
      dtx::holdout_instances(collection, f.holdout, seed, train_sets, eval_sets);
      m.flags = f.crit.to_json();
      m.flags["stop"] = f.stop.to_json(stop);
      m.flags["holdout"] = f.holdout;
      m.seed = seed;

      if (frontier->parsed()) {
        const auto etas = dtx::parse_axis("eta", eta_grid).values;
        m.flags["eta_grid"] = eta_grid;
        const auto rows = dtx::frontier_sweep(train_sets, eval_sets, criterion, stop, etas);
        m.output(with_suffix(f.out, ".frontier.csv"),
                 render([&](std::ostream& o) { dtx::write_frontier_csv(o, rows); }));
        m.finish(with_suffix(f.out, ".manifest.json"));
        for (const auto& r : rows)
          emit({{"command", "frontier"}, {"eta", r.eta}, {"alpha_tilde", r.alpha_tilde},
                {"accuracy", r.accuracy}, {"leaves", r.leaves}});
        return 0;
      }
      const auto trees = grow_all(train_sets, criterion, stop);
      dtx::TuningResult r;
      if (tprune->parsed()) {
        m.flags["eta"] = prune_eta;
        r = dtx::erm_mccp_exact(trees, eval_sets, prune_eta);
      } else {
        m.flags["c1_grid"] = c1_grid;
        m.flags["c2_grid"] = c2_grid;
        const dtx::ParamGrid grid{{dtx::parse_axis("c1", c1_grid), dtx::parse_axis("c2", c2_grid)}};
        r = dtx::erm_pessimistic(trees, eval_sets, grid, workers);
      }
      finish_tuning(m, f.out, r);
      return 0;
    }

    if (*tbayes) {
      Manifest m{"tune-bayes"};
      const auto collection = bayes_data.load(dtx::Task::classification);
      for (const auto& p : bayes_data.files()) m.input(p);
      const dtx::ParamGrid grid{{dtx::parse_axis("sigma", sigma_grid), dtx::parse_axis("phi", phi_grid)}};
      dtx::BayesPrior base;
      base.t_cap = t_cap;
      m.flags = {{"sigma_grid", sigma_grid}, {"phi_grid", phi_grid}, {"t_cap", t_cap},
                 {"omega", omega},           {"replicates", replicates}, {"workers", workers}};
      m.seed = seed;
      const auto r = dtx::erm_bayes(collection, grid, base, omega, replicates, seed, workers);
      finish_tuning(m, bayes_out, r);
      return 0;
    }

    if (*heatmap) {
      std::ifstream in(surface_path);
      if (!in) throw dtx::DataError("cannot read " + surface_path);
      const auto surface = dtx::read_surface_csv(in);
      write_text(svg_out, dtx::heatmap_svg(surface));
      emit({{"command", "heatmap"}, {"cells", surface.points.size()}, {"svg", svg_out}});
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const dtx::ParamError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
