#pragma once

#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "causal/ceq.hpp"
#include "causal/checkpoint.hpp"
#include "causal/ctcw.hpp"
#include "causal/data.hpp"
#include "causal/error.hpp"
#include "causal/eval.hpp"
#include "causal/model.hpp"
#include "causal/rock.hpp"

namespace causal {

/// Dotted-key lookups into an optional JSON config file. Flags always win;
/// these fill in values the user did not pass.
class JsonConfig {
public:
  JsonConfig() = default;

  static JsonConfig from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    JsonConfig cfg;
    try {
      in >> cfg.root_;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("config: invalid JSON in " + path + ": " + e.what());
    }
    return cfg;
  }

  template <typename T>
  std::optional<T> get(const std::string& dotted) const {
    const nlohmann::json* node = &root_;
    std::size_t start = 0;
    while (true) {
      const auto dot = dotted.find('.', start);
      const std::string key = dotted.substr(start, dot - start);
      if (!node->is_object() || !node->contains(key)) return std::nullopt;
      node = &(*node)[key];
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    try {
      return node->get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ParseError("config: key \"" + dotted + "\" has the wrong type");
    }
  }

private:
  nlohmann::json root_ = nlohmann::json::object();
};

/// Causal statements for co-occurrence counting: JSONL {cause, effect}.
inline std::vector<CausalStatement> load_causal_statements(const std::string& path) {
  std::vector<CausalStatement> out;
  detail::for_each_jsonl(path, [&](const detail::json& row, std::size_t line_no) {
    out.push_back({detail::string_field(row, "cause", path, line_no),
                   detail::string_field(row, "effect", path, line_no)});
  });
  if (out.empty()) throw ValidationError("corpus " + path + " contains no statements");
  return out;
}

namespace detail {

inline PrecedenceScorer scorer_from_json(const nlohmann::json& spec, const std::string& what) {
  if (!spec.is_object() || !spec.contains("type")) {
    throw ParseError("rock config: " + what + " needs an object with a \"type\"");
  }
  const std::string type = spec["type"].get<std::string>();
  if (type == "constant") {
    return constant_scorer(spec.at("value").get<double>());
  }
  if (type == "table") {
    std::map<std::pair<std::string, std::string>, double> table;
    if (spec.contains("entries")) {
      for (const auto& e : spec["entries"]) {
        table[{e.at("first").get<std::string>(), e.at("second").get<std::string>()}] =
            e.at("value").get<double>();
      }
    }
    const double fallback = spec.contains("default") ? spec["default"].get<double>() : 0.5;
    return table_scorer(std::move(table), fallback);
  }
  throw ParseError("rock config: unknown " + what + " type \"" + type + "\"");
}

} // namespace detail

/// ROCK oracle wiring from a JSON file: table-driven or constant scorers,
/// intervention and confounder lists, and the filter threshold.
inline RockInputs load_rock_inputs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("rock config: cannot open " + path);
  nlohmann::json spec;
  try {
    in >> spec;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("rock config: invalid JSON in " + path + ": " + e.what());
  }
  RockInputs inputs;
  try {
    inputs.precedence = detail::scorer_from_json(spec.at("precedence"), "precedence");
    for (const auto& a : spec.at("interventions")) {
      inputs.interventions.push_back(a.get<std::string>());
    }
    if (spec.contains("confounders")) {
      for (const auto& x : spec["confounders"]) {
        inputs.confounders.push_back(x.get<std::string>());
      }
    }
    if (spec.contains("propensity")) {
      inputs.propensity = detail::scorer_from_json(spec["propensity"], "propensity");
    }
    if (spec.contains("epsilon")) inputs.epsilon = spec["epsilon"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("rock config: " + path + ": " + e.what());
  }
  inputs.validate();
  return inputs;
}

/// Space-joins a cause with its supplementary text for the bag-of-words and
/// oracle-driven baselines (the separator-token form of the join is specific
/// to the embedding metric).
inline EventText join_for_baseline(const EventText& cause,
                                   const std::optional<EventText>& addition) {
  if (!addition) return cause;
  return EventText(cause.raw + " " + addition->raw);
}

struct CesarMetricState {
  CesarModel model;
  Vocabulary vocab;
};

inline MetricHandle make_cesar_metric(std::shared_ptr<CesarMetricState> state) {
  return {"cesar", [state](const EventText& cause, const std::optional<EventText>& addition,
                           const EventText& effect) {
            return score(state->model, state->vocab, cause, addition, effect).score;
          }};
}

inline MetricHandle make_ceq_metric(std::shared_ptr<CooccurrenceStats> stats,
                                    CeqConfig config) {
  return {"ceq", [stats, config](const EventText& cause,
                                 const std::optional<EventText>& addition,
                                 const EventText& effect) {
            return ceq_score(*stats, join_for_baseline(cause, addition), effect, config);
          }};
}

inline MetricHandle make_rock_metric(std::shared_ptr<RockInputs> inputs) {
  return {"rock", [inputs](const EventText& cause, const std::optional<EventText>& addition,
                           const EventText& effect) {
            return rock_score(*inputs, join_for_baseline(cause, addition), effect);
          }};
}

struct CtcwMetricOptions {
  CtcwTemplate template_with_addition = CtcwTemplate::fact;
  bool clamp = true;
};

inline MetricHandle make_ctcw_metric(std::shared_ptr<CtcwProvider> provider,
                                     CtcwMetricOptions options) {
  return {"ctcw", [provider, options](const EventText& cause,
                                      const std::optional<EventText>& addition,
                                      const EventText& effect) {
            const auto tmpl = addition ? options.template_with_addition : CtcwTemplate::bare;
            const std::string prompt = ctcw_build_prompt(tmpl, cause, effect, addition);
            return ctcw_score(provider->probabilities(prompt), options.clamp).value;
          }};
}

} // namespace causal
