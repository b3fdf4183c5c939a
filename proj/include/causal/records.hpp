#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "causal/text.hpp"

namespace causal {

inline const std::array<std::string, 10>& domain_labels() {
  static const std::array<std::string, 10> labels = {
      "environment", "business", "science", "health",        "work",
      "politics",    "education", "sports", "entertainment", "travel"};
  return labels;
}

inline const std::array<std::string, 4>& time_interval_labels() {
  static const std::array<std::string, 4> labels = {"months", "years", "decades", "centuries"};
  return labels;
}

/// A cause-effect pair with the supplementary arguments that strengthen or
/// weaken it, plus the time interval between cause and effect.
struct DefeasibleInstance {
  std::string id;
  std::string domain;
  EventText cause;
  EventText effect;
  std::string time_interval;
  EventText supporter;
  EventText defeater;
};

/// One supervised example: a cause (optionally supplemented), an effect, and
/// the target strength.
struct TrainingExample {
  EventText cause;
  std::optional<EventText> addition;
  EventText effect;
  double target = 0.0;
};

/// Source record for training-set construction: a causal (or non-causal)
/// pair with its explanation and the explanation's generated opposite.
struct AugmentationRecord {
  EventText cause;
  EventText effect;
  std::optional<EventText> explanation;
  std::optional<EventText> opposite;
  bool is_causal = false;
};

/// Two-choice causal question: pick the choice standing in the asked-for
/// causal relation to the premise.
struct CopaInstance {
  EventText premise;
  std::string ask_for; // "cause" or "effect"
  EventText choice1;
  EventText choice2;
  int label = 1; // 1 or 2
};

} // namespace causal
