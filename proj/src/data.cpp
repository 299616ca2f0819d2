#include "dtx/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "dtx/error.hpp"

namespace dtx {

std::string_view to_string(Task task) {
  return task == Task::classification ? "classification" : "regression";
}

namespace {

void check_shape(std::size_t features, std::size_t attributes, std::size_t n) {
  if (n == 0) throw DataError("dataset must contain at least one example");
  if (attributes == 0) throw DataError("dataset must have at least one attribute");
  if (features != n * attributes) throw DataError("feature matrix size does not match n x a");
}

void check_finite(const std::vector<double>& values, const char* what) {
  for (double v : values)
    if (!std::isfinite(v)) throw DataError(std::string(what) + " contains a non-finite value");
}

}  // namespace

Dataset Dataset::classification(std::vector<double> features, std::size_t attributes,
                                std::vector<int> labels, std::vector<std::string> class_names) {
  check_shape(features.size(), attributes, labels.size());
  check_finite(features, "feature matrix");
  if (class_names.size() < 2) throw DataError("classification requires at least two classes");
  const int c = static_cast<int>(class_names.size());
  for (int y : labels)
    if (y < 0 || y >= c) throw DataError("class label out of range");
  Dataset d;
  d.task_ = Task::classification;
  d.attributes_ = attributes;
  d.features_ = std::move(features);
  d.labels_ = std::move(labels);
  d.class_names_ = std::move(class_names);
  return d;
}

Dataset Dataset::regression(std::vector<double> features, std::size_t attributes,
                            std::vector<double> targets) {
  check_shape(features.size(), attributes, targets.size());
  check_finite(features, "feature matrix");
  check_finite(targets, "target vector");
  Dataset d;
  d.task_ = Task::regression;
  d.attributes_ = attributes;
  d.features_ = std::move(features);
  d.targets_ = std::move(targets);
  return d;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw DataError("subset must be nonempty");
  Dataset d;
  d.task_ = task_;
  d.attributes_ = attributes_;
  d.class_names_ = class_names_;
  d.features_.reserve(indices.size() * attributes_);
  for (std::size_t i : indices) {
    if (i >= size()) throw DataError("subset index out of range");
    auto r = row(i);
    d.features_.insert(d.features_.end(), r.begin(), r.end());
    if (task_ == Task::classification)
      d.labels_.push_back(labels_[i]);
    else
      d.targets_.push_back(targets_[i]);
  }
  return d;
}

void InstanceCollection::validate() const {
  if (instances.empty()) throw ParamError("instance collection is empty");
  const Dataset& first = instances.front();
  for (const Dataset& d : instances) {
    if (d.task() != first.task()) throw ParamError("instances mix classification and regression");
    if (d.is_classification() &&
        (d.classes() != first.classes() || d.attributes() != first.attributes()))
      throw ParamError("classification instances must share class and attribute counts");
  }
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

bool parse_real(std::string_view cell, double& value) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  return ec == std::errc() && ptr == cell.data() + cell.size() && std::isfinite(value);
}

std::string location(std::string_view source, std::size_t row, std::size_t col) {
  return std::string(source) + ":" + std::to_string(row) + ":" + std::to_string(col);
}

}  // namespace

Dataset read_csv(std::istream& in, Task task, std::string_view source) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    for (auto f : split_fields(line)) cells.emplace_back(f);
    rows.push_back(std::move(cells));
    line_numbers.push_back(line_no);
  }
  if (in.bad()) throw DataError(std::string(source) + ": read failure");
  if (rows.empty()) throw DataError(std::string(source) + ": empty file");

  const std::size_t columns = rows.front().size();
  if (columns < 2) throw DataError(std::string(source) + ": need at least one feature and a label");

  // A first row with any non-numeric feature cell is a header.
  std::size_t first = 0;
  for (std::size_t j = 0; j + 1 < columns; ++j) {
    double v;
    if (!parse_real(rows.front()[j], v)) {
      first = 1;
      break;
    }
  }
  if (first == rows.size()) throw DataError(std::string(source) + ": header but no data rows");

  const std::size_t a = columns - 1;
  std::vector<double> features;
  features.reserve((rows.size() - first) * a);
  std::vector<int> labels;
  std::vector<double> targets;
  std::vector<std::string> names;
  std::unordered_map<std::string, int> index;

  for (std::size_t r = first; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    if (cells.size() != columns)
      throw DataError(location(source, line_numbers[r], cells.size()) + ": expected " +
                      std::to_string(columns) + " columns, found " + std::to_string(cells.size()));
    for (std::size_t j = 0; j < a; ++j) {
      double v;
      if (!parse_real(cells[j], v))
        throw DataError(location(source, line_numbers[r], j + 1) + ": non-numeric feature cell '" +
                        cells[j] + "'");
      features.push_back(v);
    }
    const std::string& raw = cells[a];
    if (raw.empty()) throw DataError(location(source, line_numbers[r], columns) + ": missing label");
    if (task == Task::classification) {
      auto [it, inserted] = index.emplace(raw, static_cast<int>(names.size()));
      if (inserted) names.push_back(raw);
      labels.push_back(it->second);
    } else {
      double v;
      if (!parse_real(raw, v))
        throw DataError(location(source, line_numbers[r], columns) + ": non-numeric target '" +
                        raw + "'");
      targets.push_back(v);
    }
  }

  if (task == Task::classification) {
    if (names.size() < 2)
      throw DataError(std::string(source) + ": single-class file (label '" + names.front() + "')");
    return Dataset::classification(std::move(features), a, std::move(labels), std::move(names));
  }
  return Dataset::regression(std::move(features), a, std::move(targets));
}

Dataset load_csv(const std::filesystem::path& path, Task task) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open file");
  return read_csv(in, task, path.string());
}

namespace {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_csv(std::ostream& out, const Dataset& d) {
  for (std::size_t j = 0; j < d.attributes(); ++j) out << 'x' << (j + 1) << ',';
  out << "label\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (double v : d.row(i)) out << format_real(v) << ',';
    if (d.is_classification())
      out << d.class_names()[d.label(i)];
    else
      out << format_real(d.target(i));
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Folds and splits

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ b);
}

std::vector<std::size_t> FoldPlan::test_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] != fold) out.push_back(i);
  return out;
}

FoldPlan make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2 || k > n)
    throw ParamError("fold count must satisfy 2 <= k <= n (k=" + std::to_string(k) +
                     ", n=" + std::to_string(n) + ")");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  FoldPlan plan{k, seed, std::vector<std::size_t>(n)};
  for (std::size_t pos = 0; pos < n; ++pos) plan.assignments[perm[pos]] = pos % k;
  return plan;
}

nlohmann::json to_json(const FoldPlan& plan) {
  return {{"k", plan.k}, {"seed", plan.seed}, {"assignments", plan.assignments}};
}

FoldPlan fold_plan_from_json(const nlohmann::json& j) {
  FoldPlan plan;
  plan.k = j.at("k").get<std::size_t>();
  plan.seed = j.at("seed").get<std::uint64_t>();
  plan.assignments = j.at("assignments").get<std::vector<std::size_t>>();
  for (auto f : plan.assignments)
    if (f >= plan.k) throw DataError("fold assignment out of range");
  return plan;
}

HoldoutSplit holdout_split(std::size_t n, double test_fraction, std::uint64_t seed) {
  if (n < 2) throw ParamError("holdout split needs at least two examples");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ParamError("holdout fraction must lie in (0, 1)");
  auto test_n = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  test_n = std::clamp<std::size_t>(test_n, 1, n - 1);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  HoldoutSplit split;
  split.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(test_n));
  split.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(test_n), perm.end());
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

// ---------------------------------------------------------------------------
// Synthetic generators

namespace {

std::vector<std::string> class_names(std::size_t c) {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < c; ++k) names.push_back("c" + std::to_string(k));
  return names;
}

// Three classes whose centers differ along x only.
Dataset make_blobs(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> nx(0.0, 0.6), ny(0.0, 1.0);
  std::vector<double> x;
  std::vector<int> y;
  for (std::size_t i = 0; i < n; ++i) {
    int k = static_cast<int>(i % 3);
    x.push_back(3.0 * k + nx(rng));
    x.push_back(ny(rng));
    y.push_back(k);
  }
  return Dataset::classification(std::move(x), 2, std::move(y), class_names(3));
}

// Two overlapping Gaussian classes with 15% of labels flipped.
Dataset make_noisy_blobs(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  std::bernoulli_distribution flip(0.15);
  std::vector<double> x;
  std::vector<int> y;
  for (std::size_t i = 0; i < n; ++i) {
    int k = static_cast<int>(i % 2);
    x.push_back(1.5 * k + noise(rng));
    x.push_back(1.5 * k + noise(rng));
    y.push_back(flip(rng) ? 1 - k : k);
  }
  return Dataset::classification(std::move(x), 2, std::move(y), class_names(2));
}

// label = [x1 > 0.5] xor [x2 > 0.5] on the lattice {0.15, 0.35, 0.65, 0.85}^2.
// Quadrant occupancy is uneven (weights 4:2:2:1) so the axis-aligned middle
// split carries positive gain, and the first four points seed every quadrant.
// Lattice points keep a threshold from peeling a few boundary points off a
// quadrant.
Dataset make_xor_grid(std::size_t n, std::mt19937_64& rng) {
  std::bernoulli_distribution upper(0.5);
  auto cell = [&](std::mt19937_64& r) { return upper(r) ? 0.35 : 0.15; };
  std::discrete_distribution<int> quadrant({4.0, 2.0, 2.0, 1.0});
  std::vector<double> x;
  std::vector<int> y;
  for (std::size_t i = 0; i < n; ++i) {
    int q = i < 4 ? static_cast<int>(i) : quadrant(rng);
    int hx = q & 1, hy = (q >> 1) & 1;
    x.push_back(0.5 * hx + cell(rng));
    x.push_back(0.5 * hy + cell(rng));
    y.push_back(hx ^ hy);
  }
  return Dataset::classification(std::move(x), 2, std::move(y), class_names(2));
}

// Nonnegative targets around per-quadrant levels {1, 3, 6, 10}.
Dataset make_regression_clusters(std::size_t n, std::mt19937_64& rng) {
  static constexpr double kLevels[4] = {1.0, 3.0, 6.0, 10.0};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.4);
  std::vector<double> x, t;
  for (std::size_t i = 0; i < n; ++i) {
    double x1 = u(rng), x2 = u(rng);
    int q = (x1 > 0.5 ? 1 : 0) + (x2 > 0.5 ? 2 : 0);
    x.push_back(x1);
    x.push_back(x2);
    t.push_back(std::max(0.0, kLevels[q] + noise(rng)));
  }
  return Dataset::regression(std::move(x), 2, std::move(t));
}

}  // namespace

InstanceCollection synth_instances(std::string_view scheme, std::size_t count, std::size_t n,
                                   std::uint64_t seed) {
  if (count == 0 || n == 0) throw ParamError("synth_instances needs N >= 1 and n >= 1");
  Dataset (*make)(std::size_t, std::mt19937_64&) = nullptr;
  std::size_t min_n = 1;
  if (scheme == "blobs") {
    make = make_blobs;
    min_n = 3;
  } else if (scheme == "noisy-blobs") {
    make = make_noisy_blobs;
    min_n = 2;
  } else if (scheme == "xor-grid") {
    make = make_xor_grid;
    min_n = 4;
  } else if (scheme == "regression-clusters") {
    make = make_regression_clusters;
  } else {
    throw ParamError("unknown synthetic scheme '" + std::string(scheme) + "'");
  }
  if (n < min_n)
    throw ParamError("scheme '" + std::string(scheme) + "' needs n >= " + std::to_string(min_n));
  InstanceCollection out;
  for (std::size_t i = 0; i < count; ++i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    out.instances.push_back(make(n, rng));
  }
  return out;
}

nlohmann::json to_json(const InstanceCollection& collection) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Dataset& d : collection.instances) {
    nlohmann::json j{{"task", to_string(d.task())},
                     {"attributes", d.attributes()},
                     {"features", d.features()}};
    if (d.is_classification()) {
      j["labels"] = d.labels();
      j["classes"] = d.class_names();
    } else {
      j["targets"] = d.targets();
    }
    arr.push_back(std::move(j));
  }
  return {{"instances", std::move(arr)}};
}

}  // namespace dtx
