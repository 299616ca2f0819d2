#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace dtx {

/// (alpha, beta)-Tsallis entropy: scale/(alpha-1) * (1 - (sum_i p_i^alpha)^beta).
struct Tsallis {
  double alpha = 2.0;
  int beta = 1;
  double scale = 1.0;
};

/// scale * (prod_i p_i)^gamma.
struct GammaProduct {
  double gamma = 1.0;
  double scale = 1.0;
};

/// Mean Tweedie deviance with power in [0, 1]; 0 is MSE, 1 is half Poisson deviance.
struct Tweedie {
  double power = 0.0;
};

enum class Preset { gini, entropy, km96 };

using CriterionParams = std::variant<Tsallis, GammaProduct, Tweedie, Preset>;

std::string_view to_string(Preset preset);
Preset preset_from_string(std::string_view name);

/// Throws ParamError if the parameters lie outside their family's domain.
void validate(const CriterionParams& params);
bool is_regression_criterion(const CriterionParams& params);

nlohmann::json to_json(const CriterionParams& params);
CriterionParams criterion_from_json(const nlohmann::json& j);

/// Class proportions p_i(l) of a leaf together with its weight w(l).
class ClassDistribution {
 public:
  /// Proportions are counts / weight; an empty leaf gets the uniform vector.
  static ClassDistribution from_counts(std::span<const double> counts);
  /// Probabilities must lie in [0,1] and sum to 1 within 1e-12.
  ClassDistribution(std::vector<double> probs, double weight);

  std::span<const double> probs() const { return probs_; }
  double weight() const { return weight_; }
  std::size_t classes() const { return probs_.size(); }

 private:
  ClassDistribution() = default;
  std::vector<double> probs_;
  double weight_ = 0.0;
};

/// Regression leaf labels with their cached mean.
class TargetSet {
 public:
  explicit TargetSet(std::vector<double> values);
  std::span<const double> values() const { return values_; }
  double mean() const { return mean_; }

 private:
  std::vector<double> values_;
  double mean_ = 0.0;
};

double eval_tsallis(const Tsallis& params, const ClassDistribution& dist);
double eval_gamma(const GammaProduct& params, const ClassDistribution& dist);
double eval_preset(Preset preset, const ClassDistribution& dist);
double eval_tweedie(double power, const TargetSet& targets);

/// Dispatches to the classification families; throws for Tweedie.
double eval_impurity(const CriterionParams& params, const ClassDistribution& dist);

/// Symmetric, zero at simplex vertices and concave. Tsallis: alpha outside
/// (1/beta, 1). Gamma products and the presets: always. Tweedie: throws.
bool is_permissible(const CriterionParams& params);

/// Binary-class closed forms of the three presets.
double gini_impurity(std::span<const double> probs);
double shannon_entropy(std::span<const double> probs);

namespace detail {

/// Impurity of proportions with no validation; the hot path of the learner.
/// `probs` must have at least one entry and sum to one.
double impurity_unchecked(const CriterionParams& params, std::span<const double> probs);

/// Sufficient statistics for w(l) * g_p(y_l) under the Tweedie criterion.
struct TweedieSums {
  double count = 0.0;
  double sum = 0.0;
  double sum_pow = 0.0;  ///< sum y^(2-p), or sum y ln y in the HPD limit

  void add(double contribution_y, double contribution_pow) {
    count += 1.0;
    sum += contribution_y;
    sum_pow += contribution_pow;
  }
};

/// Per-example term accumulated into TweedieSums::sum_pow.
double tweedie_pow_term(double power, double y);
/// Total (weighted) deviance count * g_p of the examples summarised by `s`.
double tweedie_total_deviance(double power, const TweedieSums& s);

bool tweedie_uses_hpd(double power);

}  // namespace detail

}  // namespace dtx
