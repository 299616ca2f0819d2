#include "dtx/criteria.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "dtx/error.hpp"

namespace dtx {

namespace {

constexpr double kLimitWindow = 1e-8;  // switch to closed-form limits inside this distance

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double sum_p_log_p(std::span<const double> probs) {
  double s = 0.0;
  for (double p : probs)
    if (p > 0.0) s += p * std::log(p);
  return s;
}

double tsallis_kernel(const Tsallis& t, std::span<const double> probs) {
  if (std::abs(t.alpha - 1.0) < kLimitWindow)
    return std::max(0.0, -(t.scale * t.beta) * sum_p_log_p(probs));
  double s = 0.0;
  if (t.alpha == 2.0) {
    for (double p : probs) s += p * p;  // same rounding as gini_impurity
  } else {
    // Summing the powers in sorted order makes the result exactly symmetric;
    // with large beta the sum is raised to a high power and rounding in the
    // summation order would otherwise show up.
    std::array<double, 32> small;
    std::vector<double> large;
    std::span<double> terms;
    if (probs.size() <= small.size()) {
      terms = std::span<double>(small.data(), probs.size());
    } else {
      large.resize(probs.size());
      terms = large;
    }
    for (std::size_t i = 0; i < probs.size(); ++i) terms[i] = probs[i] > 0.0 ? std::pow(probs[i], t.alpha) : 0.0;
    std::sort(terms.begin(), terms.end());
    for (double v : terms) s += v;
  }
  return std::max(0.0, t.scale / (t.alpha - 1.0) * (1.0 - std::pow(s, t.beta)));
}

double gamma_kernel(const GammaProduct& g, std::span<const double> probs) {
  double prod = 1.0;
  for (double p : probs) prod *= p;
  return g.scale * std::pow(prod, g.gamma);
}

double preset_kernel(Preset preset, std::span<const double> probs) {
  switch (preset) {
    case Preset::gini:
      return gini_impurity(probs);
    case Preset::entropy:
      return shannon_entropy(probs);
    case Preset::km96:
      if (probs.size() != 2) throw ParamError("km96 criterion is defined for two classes only");
      return 2.0 * std::sqrt(probs[0] * probs[1]);
  }
  return 0.0;
}

}  // namespace

std::string_view to_string(Preset preset) {
  switch (preset) {
    case Preset::gini:
      return "gini";
    case Preset::entropy:
      return "entropy";
    case Preset::km96:
      return "km96";
  }
  return "?";
}

Preset preset_from_string(std::string_view name) {
  if (name == "gini") return Preset::gini;
  if (name == "entropy") return Preset::entropy;
  if (name == "km96") return Preset::km96;
  throw ParamError("unknown preset criterion '" + std::string(name) + "'");
}

void validate(const CriterionParams& params) {
  std::visit(Overloaded{
                 [](const Tsallis& t) {
                   if (!(t.alpha > 0.0) || !std::isfinite(t.alpha))
                     throw ParamError("Tsallis alpha must be positive");
                   if (t.beta < 1) throw ParamError("Tsallis beta must be an integer >= 1");
                   if (!(t.scale > 0.0)) throw ParamError("criterion scale C must be positive");
                 },
                 [](const GammaProduct& g) {
                   if (!(g.gamma > 0.0 && g.gamma <= 1.0))
                     throw ParamError("gamma must lie in (0, 1]");
                   if (!(g.scale > 0.0)) throw ParamError("criterion scale C must be positive");
                 },
                 [](const Tweedie& t) {
                   if (!(t.power >= 0.0 && t.power <= 1.0))
                     throw ParamError("Tweedie power must lie in [0, 1]");
                 },
                 [](Preset) {},
             },
             params);
}

bool is_regression_criterion(const CriterionParams& params) {
  return std::holds_alternative<Tweedie>(params);
}

nlohmann::json to_json(const CriterionParams& params) {
  return std::visit(
      Overloaded{
          [](const Tsallis& t) -> nlohmann::json {
            return {{"variant", "tsallis"}, {"alpha", t.alpha}, {"beta", t.beta}, {"C", t.scale}};
          },
          [](const GammaProduct& g) -> nlohmann::json {
            return {{"variant", "gamma"}, {"gamma", g.gamma}, {"C", g.scale}};
          },
          [](const Tweedie& t) -> nlohmann::json { return {{"variant", "tweedie"}, {"p", t.power}}; },
          [](Preset p) -> nlohmann::json { return {{"variant", std::string(to_string(p))}}; },
      },
      params);
}

CriterionParams criterion_from_json(const nlohmann::json& j) {
  const std::string variant = j.at("variant").get<std::string>();
  CriterionParams params;
  if (variant == "tsallis") {
    params = Tsallis{j.at("alpha").get<double>(), j.at("beta").get<int>(), j.value("C", 1.0)};
  } else if (variant == "gamma") {
    params = GammaProduct{j.at("gamma").get<double>(), j.value("C", 1.0)};
  } else if (variant == "tweedie") {
    params = Tweedie{j.at("p").get<double>()};
  } else {
    params = preset_from_string(variant);
  }
  validate(params);
  return params;
}

// ---------------------------------------------------------------------------

ClassDistribution ClassDistribution::from_counts(std::span<const double> counts) {
  if (counts.empty()) throw ParamError("class distribution needs at least one class");
  ClassDistribution d;
  d.weight_ = 0.0;
  for (double c : counts) {
    if (!(c >= 0.0)) throw ParamError("class counts must be nonnegative");
    d.weight_ += c;
  }
  d.probs_.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    d.probs_[i] = d.weight_ > 0.0 ? counts[i] / d.weight_ : 1.0 / static_cast<double>(counts.size());
  return d;
}

ClassDistribution::ClassDistribution(std::vector<double> probs, double weight)
    : probs_(std::move(probs)), weight_(weight) {
  if (probs_.empty()) throw ParamError("class distribution needs at least one class");
  if (!(weight_ >= 0.0)) throw ParamError("leaf weight must be nonnegative");
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0 && p <= 1.0)) throw ParamError("class probabilities must lie in [0, 1]");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ParamError("class probabilities must sum to 1");
}

TargetSet::TargetSet(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ParamError("target set must be nonempty");
  mean_ = std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
}

double gini_impurity(std::span<const double> probs) {
  double s = 0.0;
  for (double p : probs) s += p * p;
  return std::max(0.0, 1.0 - s);
}

double shannon_entropy(std::span<const double> probs) { return std::max(0.0, -sum_p_log_p(probs)); }

double eval_tsallis(const Tsallis& params, const ClassDistribution& dist) {
  validate(params);
  return tsallis_kernel(params, dist.probs());
}

double eval_gamma(const GammaProduct& params, const ClassDistribution& dist) {
  validate(params);
  return gamma_kernel(params, dist.probs());
}

double eval_preset(Preset preset, const ClassDistribution& dist) {
  return preset_kernel(preset, dist.probs());
}

double eval_impurity(const CriterionParams& params, const ClassDistribution& dist) {
  validate(params);
  if (is_regression_criterion(params))
    throw ParamError("Tweedie criterion applies to regression targets, not class distributions");
  return detail::impurity_unchecked(params, dist.probs());
}

bool is_permissible(const CriterionParams& params) {
  validate(params);
  return std::visit(Overloaded{
                        [](const Tsallis& t) {
                          return !(t.alpha > 1.0 / t.beta && t.alpha < 1.0);
                        },
                        [](const GammaProduct&) { return true; },
                        [](const Tweedie&) -> bool {
                          throw ParamError("permissibility is not defined for Tweedie criteria");
                        },
                        [](Preset) { return true; },
                    },
                    params);
}

double eval_tweedie(double power, const TargetSet& targets) {
  validate(Tweedie{power});
  for (double y : targets.values())
    if (y < 0.0) throw ParamError("Tweedie criterion requires nonnegative targets");
  const double mu = targets.mean();
  if (!(mu > 0.0)) throw ParamError("Tweedie criterion requires a positive target mean");
  const double m = static_cast<double>(targets.values().size());

  double total = 0.0;
  if (power == 0.0) {
    for (double y : targets.values()) total += (y - mu) * (y - mu);
  } else if (detail::tweedie_uses_hpd(power)) {
    for (double y : targets.values()) total += (y > 0.0 ? y * std::log(y / mu) : 0.0) - y + mu;
  } else {
    // Per example, with r = y / mu: mu^(2-p) * (r * expm1(q ln r) / q - r + 1).
    // Stays accurate as q = 1 - p approaches 0.
    const double q = 1.0 - power;
    const double scale = std::pow(mu, 2.0 - power);
    for (double y : targets.values()) {
      const double r = y / mu;
      const double head = r > 0.0 ? r * std::expm1(q * std::log(r)) / q : 0.0;
      total += scale * (head - r + 1.0);
    }
  }
  return std::max(0.0, total / m);
}

namespace detail {

double impurity_unchecked(const CriterionParams& params, std::span<const double> probs) {
  return std::visit(Overloaded{
                        [&](const Tsallis& t) { return tsallis_kernel(t, probs); },
                        [&](const GammaProduct& g) { return gamma_kernel(g, probs); },
                        [](const Tweedie&) -> double {
                          throw ParamError("Tweedie criterion has no class-distribution form");
                        },
                        [&](Preset p) { return preset_kernel(p, probs); },
                    },
                    params);
}

bool tweedie_uses_hpd(double power) { return power >= 1.0 - kLimitWindow; }

double tweedie_pow_term(double power, double y) {
  if (tweedie_uses_hpd(power)) return y > 0.0 ? y * std::log(y) : 0.0;
  if (power == 0.0) return y * y;
  return std::pow(y, 2.0 - power);
}

double tweedie_total_deviance(double power, const TweedieSums& s) {
  if (s.count <= 0.0 || s.sum <= 0.0) return 0.0;  // empty, or all-zero targets
  const double mu = s.sum / s.count;
  if (tweedie_uses_hpd(power)) return std::max(0.0, s.sum_pow - s.sum * std::log(mu));
  const double q = 1.0 - power;
  return std::max(0.0, s.sum_pow / q - (2.0 - power) * std::pow(mu, q) * s.sum / q +
                           s.count * std::pow(mu, 2.0 - power));
}

}  // namespace detail

}  // namespace dtx
