#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "causal/error.hpp"
#include "causal/random.hpp"
#include "causal/records.hpp"

namespace causal {

namespace detail {

using nlohmann::json;

inline ParseError field_error(const std::string& path, std::size_t line, const std::string& what) {
  return ParseError(path + ":" + std::to_string(line) + ": " + what);
}

inline json parse_line(const std::string& path, std::size_t line_no, const std::string& line) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw field_error(path, line_no, std::string("invalid JSON: ") + e.what());
  }
}

inline std::string string_field(const json& row, const char* key, const std::string& path,
                                std::size_t line_no) {
  if (!row.contains(key)) {
    throw field_error(path, line_no, std::string("missing field \"") + key + "\"");
  }
  if (!row[key].is_string()) {
    throw field_error(path, line_no, std::string("field \"") + key + "\" must be a string");
  }
  return row[key].get<std::string>();
}

inline EventText event_field(const json& row, const char* key, const std::string& path,
                             std::size_t line_no) {
  const std::string value = string_field(row, key, path, line_no);
  try {
    return EventText(value);
  } catch (const ValidationError&) {
    throw field_error(path, line_no, std::string("field \"") + key + "\" is empty");
  }
}

/// Runs `handle` on every non-blank line; returns the number of records.
template <typename Handler>
std::size_t for_each_jsonl(const std::string& path, Handler&& handle) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  std::size_t records = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    handle(parse_line(path, line_no, line), line_no);
    ++records;
  }
  return records;
}

} // namespace detail

/// Defeasibility rows: {id, domain, cause, effect, time_interval, supporter,
/// defeater}. Rejects unknown domains and time intervals, naming the line.
/// An empty file is allowed (a warning goes to `warnings` when provided).
inline std::vector<DefeasibleInstance> load_defeasibility(const std::string& path,
                                                          std::ostream* warnings = nullptr) {
  std::vector<DefeasibleInstance> out;
  detail::for_each_jsonl(path, [&](const detail::json& row, std::size_t line_no) {
    const std::string domain = detail::string_field(row, "domain", path, line_no);
    const auto& domains = domain_labels();
    if (std::find(domains.begin(), domains.end(), domain) == domains.end()) {
      throw detail::field_error(path, line_no, "unknown domain \"" + domain + "\"");
    }
    const std::string interval = detail::string_field(row, "time_interval", path, line_no);
    const auto& intervals = time_interval_labels();
    if (std::find(intervals.begin(), intervals.end(), interval) == intervals.end()) {
      throw detail::field_error(path, line_no, "unknown time_interval \"" + interval + "\"");
    }
    out.push_back(DefeasibleInstance{
        detail::string_field(row, "id", path, line_no), domain,
        detail::event_field(row, "cause", path, line_no),
        detail::event_field(row, "effect", path, line_no), interval,
        detail::event_field(row, "supporter", path, line_no),
        detail::event_field(row, "defeater", path, line_no)});
  });
  if (out.empty() && warnings) {
    *warnings << "warning: " << path << " contains no records\n";
  }
  return out;
}

/// Training rows: {cause, addition (optional/null), effect, target}.
inline std::vector<TrainingExample> load_training(const std::string& path,
                                                  std::ostream* warnings = nullptr) {
  std::vector<TrainingExample> out;
  detail::for_each_jsonl(path, [&](const detail::json& row, std::size_t line_no) {
    std::optional<EventText> addition;
    if (row.contains("addition") && !row["addition"].is_null()) {
      addition = detail::event_field(row, "addition", path, line_no);
    }
    if (!row.contains("target") || !row["target"].is_number()) {
      throw detail::field_error(path, line_no, "missing numeric field \"target\"");
    }
    const double target = row["target"].get<double>();
    if (!(target >= 0.0 && target <= 1.0)) {
      throw detail::field_error(path, line_no, "target outside [0,1]");
    }
    out.push_back(TrainingExample{detail::event_field(row, "cause", path, line_no),
                                  std::move(addition),
                                  detail::event_field(row, "effect", path, line_no), target});
  });
  if (out.empty() && warnings) {
    *warnings << "warning: " << path << " contains no records\n";
  }
  return out;
}

inline void save_training(const std::string& path, const std::vector<TrainingExample>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_training: cannot open " + path);
  for (const auto& ex : data) {
    nlohmann::json row = {{"cause", ex.cause.raw},
                          {"addition", nullptr},
                          {"effect", ex.effect.raw},
                          {"target", ex.target}};
    if (ex.addition) row["addition"] = ex.addition->raw;
    out << row.dump() << '\n';
  }
}

/// Augmentation sources: {cause, effect, explanation, opposite, is_causal}.
/// explanation/opposite may be null or absent on non-causal rows.
inline std::vector<AugmentationRecord> load_augmentation_source(
    const std::string& path, std::ostream* warnings = nullptr) {
  std::vector<AugmentationRecord> out;
  detail::for_each_jsonl(path, [&](const detail::json& row, std::size_t line_no) {
    if (!row.contains("is_causal") || !row["is_causal"].is_boolean()) {
      throw detail::field_error(path, line_no, "missing boolean field \"is_causal\"");
    }
    std::optional<EventText> explanation;
    if (row.contains("explanation") && !row["explanation"].is_null()) {
      explanation = detail::event_field(row, "explanation", path, line_no);
    }
    std::optional<EventText> opposite;
    if (row.contains("opposite") && !row["opposite"].is_null()) {
      opposite = detail::event_field(row, "opposite", path, line_no);
    }
    out.push_back(AugmentationRecord{detail::event_field(row, "cause", path, line_no),
                                     detail::event_field(row, "effect", path, line_no),
                                     std::move(explanation), std::move(opposite),
                                     row["is_causal"].get<bool>()});
  });
  if (out.empty() && warnings) {
    *warnings << "warning: " << path << " contains no records\n";
  }
  return out;
}

/// COPA rows: {premise, ask_for, choice1, choice2, label}.
inline std::vector<CopaInstance> load_copa(const std::string& path,
                                           std::ostream* warnings = nullptr) {
  std::vector<CopaInstance> out;
  detail::for_each_jsonl(path, [&](const detail::json& row, std::size_t line_no) {
    const std::string ask_for = detail::string_field(row, "ask_for", path, line_no);
    if (ask_for != "cause" && ask_for != "effect") {
      throw detail::field_error(path, line_no, "ask_for must be \"cause\" or \"effect\"");
    }
    if (!row.contains("label") || !row["label"].is_number_integer()) {
      throw detail::field_error(path, line_no, "missing integer field \"label\"");
    }
    const int label = row["label"].get<int>();
    if (label != 1 && label != 2) {
      throw detail::field_error(path, line_no, "label must be 1 or 2");
    }
    out.push_back(CopaInstance{detail::event_field(row, "premise", path, line_no), ask_for,
                               detail::event_field(row, "choice1", path, line_no),
                               detail::event_field(row, "choice2", path, line_no), label});
  });
  if (out.empty() && warnings) {
    *warnings << "warning: " << path << " contains no records\n";
  }
  return out;
}

/// Target strengths for the four kinds of constructed examples.
struct AugmentTargets {
  double base = 0.7;       // causal pair on its own
  double supported = 1.0;  // causal pair with its explanation attached
  double opposed = 0.2;    // causal pair with the explanation's opposite
  double non_causal = 0.0; // unrelated pair

  void validate() const {
    for (double t : {base, supported, opposed, non_causal}) {
      if (!(t >= 0.0 && t <= 1.0)) {
        throw ValidationError("AugmentTargets: targets must lie in [0,1]");
      }
    }
  }
};

/// Expands source records into training examples. A causal record yields the
/// bare pair plus one example per available explanation variant; a
/// non-causal record yields a single zero-strength example. Causal records
/// must carry an explanation.
inline std::vector<TrainingExample> build_augmented_set(
    const std::vector<AugmentationRecord>& records, const AugmentTargets& targets = {}) {
  targets.validate();
  std::vector<TrainingExample> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (!rec.is_causal) {
      out.push_back({rec.cause, std::nullopt, rec.effect, targets.non_causal});
      continue;
    }
    if (!rec.explanation) {
      throw ValidationError("build_augmented_set: causal record " + std::to_string(i) +
                            " has no explanation");
    }
    out.push_back({rec.cause, std::nullopt, rec.effect, targets.base});
    out.push_back({rec.cause, rec.explanation, rec.effect, targets.supported});
    if (rec.opposite) {
      out.push_back({rec.cause, rec.opposite, rec.effect, targets.opposed});
    }
  }
  return out;
}

template <typename T>
struct DatasetSplit {
  std::vector<T> train, dev, test;
};

/// Seeded shuffle followed by a proportional three-way cut. Default
/// proportions follow the benchmark's published split sizes.
template <typename T>
DatasetSplit<T> split_dataset(std::vector<T> data, std::uint64_t seed,
                              double train_fraction = 7000.0 / 11245.0,
                              double dev_fraction = 2276.0 / 11245.0) {
  if (train_fraction < 0.0 || dev_fraction < 0.0 || train_fraction + dev_fraction > 1.0) {
    throw ValidationError("split_dataset: fractions must be non-negative and sum to <= 1");
  }
  Rng rng(seed);
  rng.shuffle(data);
  const auto n = data.size();
  std::size_t n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(n)));
  std::size_t n_dev = static_cast<std::size_t>(
      std::llround(dev_fraction * static_cast<double>(n)));
  n_train = std::min(n_train, n);
  n_dev = std::min(n_dev, n - n_train);
  DatasetSplit<T> split;
  split.train.assign(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.dev.assign(data.begin() + static_cast<std::ptrdiff_t>(n_train),
                   data.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev));
  split.test.assign(data.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev), data.end());
  return split;
}

/// Per-domain, per-interval counts as CSV.
inline void write_dataset_stats_csv(const std::vector<DefeasibleInstance>& data,
                                    std::ostream& out) {
  const auto& intervals = time_interval_labels();
  out << "domain,total";
  for (const auto& t : intervals) out << ',' << t;
  out << '\n';
  std::map<std::string, std::array<std::size_t, 4>> counts;
  for (const auto& inst : data) {
    auto& row = counts[inst.domain];
    for (std::size_t t = 0; t < intervals.size(); ++t) {
      if (inst.time_interval == intervals[t]) row[t] += 1;
    }
  }
  for (const auto& [domain, row] : counts) {
    std::size_t total = 0;
    for (std::size_t v : row) total += v;
    out << domain << ',' << total;
    for (std::size_t v : row) out << ',' << v;
    out << '\n';
  }
}

} // namespace causal
