#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "causal/error.hpp"
#include "causal/numerics.hpp"
#include "causal/records.hpp"
#include "causal/svg.hpp"

namespace causal {

/// Uniform interface over the scoring metrics: a name and a deterministic
/// scoring function over (cause, optional addition, effect).
struct MetricHandle {
  std::string name;
  std::function<double(const EventText&, const std::optional<EventText>&, const EventText&)>
      score;
};

enum class TiePolicy { strict, lenient };

inline TiePolicy tie_policy_from_string(const std::string& s) {
  if (s == "strict") return TiePolicy::strict;
  if (s == "lenient") return TiePolicy::lenient;
  throw ValidationError("unknown tie policy: " + s);
}

inline double geometric_mean_accuracy(double supporter, double defeater) {
  return std::sqrt(supporter * defeater);
}

struct DefeasibilityReport {
  double supporter_accuracy = 0.0;
  double defeater_accuracy = 0.0;
  double geometric_mean = 0.0;
  int tie_count = 0;
  std::vector<std::pair<double, double>> deltas; // (supplemented - base) per instance
  std::vector<std::string> excluded;             // ids of instances the metric failed on
  std::size_t evaluated = 0;
};

namespace detail {

/// Runs `work(i)` for each index, optionally across threads. Results land in
/// index order, so aggregation never depends on scheduling.
inline void parallel_for(std::size_t count, unsigned jobs,
                         const std::function<void(std::size_t)>& work) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) work(i);
    return;
  }
  const unsigned workers = std::min<unsigned>(jobs, static_cast<unsigned>(count));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) work(i);
    });
  }
  for (auto& t : pool) t.join();
}

struct InstanceScores {
  double base = 0.0, supported = 0.0, defeated = 0.0;
  bool failed = false;
  std::string error;
};

inline std::vector<InstanceScores> score_instances(const MetricHandle& metric,
                                                   const std::vector<DefeasibleInstance>& data,
                                                   unsigned jobs) {
  std::vector<InstanceScores> scores(data.size());
  parallel_for(data.size(), jobs, [&](std::size_t i) {
    const auto& inst = data[i];
    try {
      scores[i].base = metric.score(inst.cause, std::nullopt, inst.effect);
      scores[i].supported = metric.score(inst.cause, inst.supporter, inst.effect);
      scores[i].defeated = metric.score(inst.cause, inst.defeater, inst.effect);
    } catch (const std::exception& e) {
      scores[i].failed = true;
      scores[i].error = e.what();
    }
  });
  return scores;
}

} // namespace detail

/// Supporter/defeater accuracy: a supporter is captured when the
/// supplemented pair scores above the bare pair, a defeater when it scores
/// below. Strict counts exact ties as wrong; lenient counts them as right.
/// Instances the metric fails on are excluded (and listed), not fatal.
inline DefeasibilityReport evaluate_defeasibility(const MetricHandle& metric,
                                                  const std::vector<DefeasibleInstance>& data,
                                                  TiePolicy tie_policy = TiePolicy::strict,
                                                  unsigned jobs = 1) {
  if (data.empty()) throw ValidationError("evaluate_defeasibility: no instances");
  const auto scores = detail::score_instances(metric, data, jobs);

  DefeasibilityReport report;
  std::size_t supporter_correct = 0;
  std::size_t defeater_correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (scores[i].failed) {
      report.excluded.push_back(data[i].id);
      continue;
    }
    const double ds = scores[i].supported - scores[i].base;
    const double dd = scores[i].defeated - scores[i].base;
    report.deltas.emplace_back(ds, dd);
    const bool sup_tie = ds == 0.0;
    const bool def_tie = dd == 0.0;
    report.tie_count += static_cast<int>(sup_tie) + static_cast<int>(def_tie);
    if (tie_policy == TiePolicy::strict) {
      supporter_correct += ds > 0.0;
      defeater_correct += dd < 0.0;
    } else {
      supporter_correct += ds >= 0.0;
      defeater_correct += dd <= 0.0;
    }
  }
  report.evaluated = report.deltas.size();
  if (report.evaluated == 0) {
    throw Error("evaluate_defeasibility: the metric failed on every instance");
  }
  const double n = static_cast<double>(report.evaluated);
  report.supporter_accuracy = static_cast<double>(supporter_correct) / n;
  report.defeater_accuracy = static_cast<double>(defeater_correct) / n;
  report.geometric_mean =
      geometric_mean_accuracy(report.supporter_accuracy, report.defeater_accuracy);
  return report;
}

struct CopaReport {
  double accuracy = 0.0;
  std::vector<std::string> excluded; // indices of failed instances
  std::size_t evaluated = 0;
};

/// Two-choice accuracy. Asking for the cause scores (choice -> premise);
/// asking for the effect scores (premise -> choice). An instance is correct
/// only when the labeled choice scores strictly higher.
inline CopaReport evaluate_copa(const MetricHandle& metric,
                                const std::vector<CopaInstance>& data, unsigned jobs = 1) {
  if (data.empty()) throw ValidationError("evaluate_copa: no instances");
  struct Pair {
    double s1 = 0.0, s2 = 0.0;
    bool failed = false;
  };
  std::vector<Pair> scores(data.size());
  detail::parallel_for(data.size(), jobs, [&](std::size_t i) {
    const auto& inst = data[i];
    try {
      if (inst.ask_for == "cause") {
        scores[i].s1 = metric.score(inst.choice1, std::nullopt, inst.premise);
        scores[i].s2 = metric.score(inst.choice2, std::nullopt, inst.premise);
      } else {
        scores[i].s1 = metric.score(inst.premise, std::nullopt, inst.choice1);
        scores[i].s2 = metric.score(inst.premise, std::nullopt, inst.choice2);
      }
    } catch (const std::exception&) {
      scores[i].failed = true;
    }
  });
  CopaReport report;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (scores[i].failed) {
      report.excluded.push_back(std::to_string(i));
      continue;
    }
    ++report.evaluated;
    const bool first_wins = scores[i].s1 > scores[i].s2;
    const bool second_wins = scores[i].s2 > scores[i].s1;
    correct += data[i].label == 1 ? first_wins : second_wins;
  }
  if (report.evaluated == 0) {
    throw Error("evaluate_copa: the metric failed on every instance");
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(report.evaluated);
  return report;
}

struct ShiftSummary {
  double mean_base = 0.0, mean_supported = 0.0, mean_defeated = 0.0;
  double mean_delta_supporter = 0.0, mean_delta_defeater = 0.0;
  std::size_t evaluated = 0;
  std::vector<std::string> excluded;
  std::string scores_csv, kde_csv, summary_txt, svg;
};

namespace detail {

inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

} // namespace detail

/// Scores every instance three ways (bare, with supporter, with defeater),
/// writes raw scores, smoothed density curves for the three populations, a
/// text summary, and an overlay plot into out_dir.
inline ShiftSummary shift_report(const MetricHandle& metric,
                                 const std::vector<DefeasibleInstance>& data,
                                 const std::string& out_dir, unsigned jobs = 1,
                                 std::size_t grid_points = 512) {
  namespace fs = std::filesystem;
  if (data.empty()) throw ValidationError("shift_report: no instances");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  // Probe writability before any scoring happens.
  ShiftSummary summary;
  summary.scores_csv = (fs::path(out_dir) / "scores.csv").string();
  summary.kde_csv = (fs::path(out_dir) / "kde.csv").string();
  summary.summary_txt = (fs::path(out_dir) / "summary.txt").string();
  summary.svg = (fs::path(out_dir) / "shift.svg").string();
  std::ofstream scores_out(summary.scores_csv, std::ios::binary);
  if (!scores_out) {
    throw IoError("shift_report: cannot write to " + out_dir);
  }

  const auto scores = detail::score_instances(metric, data, jobs);

  scores_out << "id,score_base,score_supporter,score_defeater\n";
  std::vector<double> base, supported, defeated;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (scores[i].failed) {
      summary.excluded.push_back(data[i].id);
      continue;
    }
    base.push_back(scores[i].base);
    supported.push_back(scores[i].supported);
    defeated.push_back(scores[i].defeated);
    scores_out << data[i].id << ',' << detail::csv_num(scores[i].base) << ','
               << detail::csv_num(scores[i].supported) << ','
               << detail::csv_num(scores[i].defeated) << '\n';
  }
  if (base.empty()) {
    throw Error("shift_report: the metric failed on every instance");
  }
  summary.evaluated = base.size();
  const double n = static_cast<double>(base.size());
  double sum_base = 0.0, sum_sup = 0.0, sum_def = 0.0;
  double sum_delta_sup = 0.0, sum_delta_def = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    sum_base += base[i];
    sum_sup += supported[i];
    sum_def += defeated[i];
    sum_delta_sup += supported[i] - base[i];
    sum_delta_def += defeated[i] - base[i];
  }
  summary.mean_base = sum_base / n;
  summary.mean_supported = sum_sup / n;
  summary.mean_defeated = sum_def / n;
  summary.mean_delta_supporter = sum_delta_sup / n;
  summary.mean_delta_defeater = sum_delta_def / n;

  // One shared grid spanning all three populations by 8 bandwidths.
  const double h_base = silverman_bandwidth(base);
  const double h_sup = silverman_bandwidth(supported);
  const double h_def = silverman_bandwidth(defeated);
  const double h_max = std::max({h_base, h_sup, h_def});
  double lo = base[0], hi = base[0];
  for (const auto* v : {&base, &supported, &defeated}) {
    for (double s : *v) {
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  }
  const auto grid = linspace(lo - 8.0 * h_max, hi + 8.0 * h_max, grid_points);
  const auto kde_base = kde_density(base, h_base, grid);
  const auto kde_sup = kde_density(supported, h_sup, grid);
  const auto kde_def = kde_density(defeated, h_def, grid);

  std::ofstream kde_out(summary.kde_csv, std::ios::binary);
  if (!kde_out) throw IoError("shift_report: cannot write " + summary.kde_csv);
  kde_out << "score,density_base,density_supporter,density_defeater\n";
  for (std::size_t g = 0; g < grid.size(); ++g) {
    kde_out << detail::csv_num(grid[g]) << ',' << detail::csv_num(kde_base.density[g]) << ','
            << detail::csv_num(kde_sup.density[g]) << ','
            << detail::csv_num(kde_def.density[g]) << '\n';
  }

  std::ofstream summary_out(summary.summary_txt, std::ios::binary);
  if (!summary_out) throw IoError("shift_report: cannot write " + summary.summary_txt);
  summary_out << "metric: " << metric.name << '\n'
              << "instances evaluated: " << summary.evaluated << '\n'
              << "instances excluded: " << summary.excluded.size() << '\n'
              << "mean score (base): " << detail::csv_num(summary.mean_base) << '\n'
              << "mean score (with supporter): " << detail::csv_num(summary.mean_supported)
              << '\n'
              << "mean score (with defeater): " << detail::csv_num(summary.mean_defeated)
              << '\n'
              << "mean delta supporter: " << detail::csv_num(summary.mean_delta_supporter)
              << '\n'
              << "mean delta defeater: " << detail::csv_num(summary.mean_delta_defeater) << '\n'
              << "kde bandwidths (base/supporter/defeater): " << detail::csv_num(h_base) << ' '
              << detail::csv_num(h_sup) << ' ' << detail::csv_num(h_def) << '\n';
  for (const auto& id : summary.excluded) summary_out << "excluded: " << id << '\n';

  write_line_chart_svg(summary.svg, "Score distribution shift (" + metric.name + ")",
                       "causal strength", "density",
                       {{"base", "#444444", grid, kde_base.density},
                        {"with supporter", "#1a7f37", grid, kde_sup.density},
                        {"with defeater", "#c62828", grid, kde_def.density}});
  return summary;
}

} // namespace causal
