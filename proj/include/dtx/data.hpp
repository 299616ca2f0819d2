#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace dtx {

enum class Task { classification, regression };

std::string_view to_string(Task task);

/// A labeled sample: an n x a feature matrix plus class indices or real targets.
///
/// Class labels are stored as contiguous indices 0..c-1 assigned in order of
/// first appearance of the raw label; `class_names()` keeps the raw labels for
/// reporting. Values are immutable after construction.
class Dataset {
 public:
  static Dataset classification(std::vector<double> features, std::size_t attributes,
                                std::vector<int> labels, std::vector<std::string> class_names);
  static Dataset regression(std::vector<double> features, std::size_t attributes,
                            std::vector<double> targets);

  Task task() const { return task_; }
  bool is_classification() const { return task_ == Task::classification; }
  std::size_t size() const { return labels_.empty() ? targets_.size() : labels_.size(); }
  std::size_t attributes() const { return attributes_; }
  std::size_t classes() const { return class_names_.size(); }

  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * attributes_, attributes_};
  }
  double feature(std::size_t i, std::size_t j) const { return features_[i * attributes_ + j]; }
  int label(std::size_t i) const { return labels_[i]; }
  double target(std::size_t i) const { return targets_[i]; }

  const std::vector<int>& labels() const { return labels_; }
  const std::vector<double>& targets() const { return targets_; }
  const std::vector<double>& features() const { return features_; }
  const std::vector<std::string>& class_names() const { return class_names_; }

  /// Rows `indices` in the given order. The class set is preserved even when a
  /// class is absent from the subset.
  Dataset subset(std::span<const std::size_t> indices) const;

  bool operator==(const Dataset&) const = default;

 private:
  Dataset() = default;

  Task task_ = Task::classification;
  std::size_t attributes_ = 0;
  std::vector<double> features_;
  std::vector<int> labels_;
  std::vector<double> targets_;
  std::vector<std::string> class_names_;
};

/// Ordered list of datasets drawn from one domain.
struct InstanceCollection {
  std::vector<Dataset> instances;

  std::size_t size() const { return instances.size(); }
  /// Throws ParamError if empty or if classification instances disagree on c or a.
  void validate() const;
};

Dataset read_csv(std::istream& in, Task task, std::string_view source = "<stream>");
Dataset load_csv(const std::filesystem::path& path, Task task);

/// Writes a header row plus one row per example; reals use 17 significant
/// digits so that `read_csv` reproduces the dataset bit-exactly.
void write_csv(std::ostream& out, const Dataset& d);

struct FoldPlan {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> assignments;  ///< fold index per example

  std::vector<std::size_t> test_indices(std::size_t fold) const;
  std::vector<std::size_t> train_indices(std::size_t fold) const;
  bool operator==(const FoldPlan&) const = default;
};

/// Unstratified uniform folds; sizes differ by at most one.
FoldPlan make_folds(std::size_t n, std::size_t k, std::uint64_t seed);
inline FoldPlan make_folds(const Dataset& d, std::size_t k, std::uint64_t seed) {
  return make_folds(d.size(), k, seed);
}

nlohmann::json to_json(const FoldPlan& plan);
FoldPlan fold_plan_from_json(const nlohmann::json& j);

struct HoldoutSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Shuffled split with round(fraction * n) test rows, clamped to [1, n-1].
HoldoutSplit holdout_split(std::size_t n, double test_fraction, std::uint64_t seed);

/// Named synthetic generators: "blobs", "xor-grid", "noisy-blobs",
/// "regression-clusters".
InstanceCollection synth_instances(std::string_view scheme, std::size_t count, std::size_t n,
                                   std::uint64_t seed);

nlohmann::json to_json(const InstanceCollection& collection);

/// Stream-splitting seed derivation (splitmix64 finalizer over the mixed words).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace dtx
