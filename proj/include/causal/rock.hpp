#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "causal/error.hpp"
#include "causal/records.hpp"

namespace causal {

/// Estimate of the probability that the first event precedes the second.
using PrecedenceScorer = std::function<double(const std::string&, const std::string&)>;

/// Conditional probability of an event given a confounder.
using PropensityScorer = std::function<double(const std::string& confounder,
                                              const std::string& event)>;

/// Intervention-based scoring inputs. The precedence estimator, intervention
/// candidates, confounders, and propensity are all injected; deterministic
/// table-driven versions below serve as offline stand-ins for the generated
/// ones.
struct RockInputs {
  PrecedenceScorer precedence;
  std::vector<std::string> interventions;  // candidate replacements for the cause
  std::vector<std::string> confounders;    // empty disables propensity filtering
  PropensityScorer propensity;
  double epsilon = 0.0;

  void validate() const {
    if (!precedence) throw ValidationError("RockInputs: precedence scorer not set");
    if (interventions.empty()) throw ValidationError("RockInputs: interventions must be non-empty");
    if (!confounders.empty() && !propensity) {
      throw ValidationError("RockInputs: propensity scorer required when confounders are given");
    }
    if (epsilon < 0.0 || !std::isfinite(epsilon)) {
      throw ValidationError("RockInputs: epsilon must be >= 0 and finite");
    }
  }
};

inline PrecedenceScorer constant_scorer(double value) {
  return [value](const std::string&, const std::string&) { return value; };
}

/// Lookup-table scorer with a default for unlisted pairs.
inline PrecedenceScorer table_scorer(std::map<std::pair<std::string, std::string>, double> table,
                                     double fallback = 0.5) {
  return [table = std::move(table), fallback](const std::string& a, const std::string& b) {
    auto it = table.find({a, b});
    return it == table.end() ? fallback : it->second;
  };
}

inline PropensityScorer propensity_table(
    std::map<std::pair<std::string, std::string>, double> table, double fallback = 0.5) {
  return [table = std::move(table), fallback](const std::string& x, const std::string& e) {
    auto it = table.find({x, e});
    return it == table.end() ? fallback : it->second;
  };
}

namespace detail {

inline double checked_precedence(const PrecedenceScorer& f, const std::string& a,
                                 const std::string& b) {
  const double v = f(a, b);
  if (!(v >= 0.0 && v <= 1.0)) {
    throw Error("rock_score: precedence estimate outside [0,1] for (\"" + a + "\", \"" + b +
                "\"): " + std::to_string(v));
  }
  return v;
}

} // namespace detail

/// Precedence of the cause minus the mean precedence of the interventions
/// that survive the propensity filter: interventions whose propensity
/// profile over the confounders stays within epsilon (scaled L2) of the
/// cause's profile. An empty surviving set is an error; no value is made up.
inline double rock_score(const RockInputs& inputs, const EventText& cause,
                         const EventText& effect) {
  inputs.validate();
  std::vector<const std::string*> kept;
  if (inputs.confounders.empty()) {
    for (const auto& a : inputs.interventions) kept.push_back(&a);
  } else {
    std::vector<double> cause_profile;
    cause_profile.reserve(inputs.confounders.size());
    for (const auto& x : inputs.confounders) {
      cause_profile.push_back(inputs.propensity(x, cause.raw));
    }
    for (const auto& a : inputs.interventions) {
      double ss = 0.0;
      for (std::size_t i = 0; i < inputs.confounders.size(); ++i) {
        const double diff = inputs.propensity(inputs.confounders[i], a) - cause_profile[i];
        ss += diff * diff;
      }
      const double scaled_norm =
          std::sqrt(ss) / static_cast<double>(inputs.confounders.size());
      if (scaled_norm <= inputs.epsilon) kept.push_back(&a);
    }
  }
  if (kept.empty()) {
    throw Error("rock_score: empty intervention set after propensity filtering "
                "(no candidate within epsilon of the cause)");
  }
  double mean = 0.0;
  for (const std::string* a : kept) {
    mean += detail::checked_precedence(inputs.precedence, *a, effect.raw);
  }
  mean /= static_cast<double>(kept.size());
  return detail::checked_precedence(inputs.precedence, cause.raw, effect.raw) - mean;
}

} // namespace causal
