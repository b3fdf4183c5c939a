#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "causal/error.hpp"
#include "causal/records.hpp"
#include "causal/text.hpp"

namespace causal {

/// One causal statement: the text of a cause and the text of its effect.
using CausalStatement = std::pair<std::string, std::string>;

struct CeqConfig {
  /// Exponent on the effect-word count. The value is a co-occurrence-
  /// literature convention; treat it as tunable.
  double alpha = 0.66;

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      throw ValidationError("CeqConfig: alpha must be positive and finite");
    }
  }
};

/// Word and word-pair counts over a corpus of causal statements. Word counts
/// tally every appearance; pair counts tally statements where the cause-side
/// word and effect-side word co-occur, which keeps pair_count <= word_count
/// on both sides by construction.
struct CooccurrenceStats {
  std::unordered_map<std::string, std::uint64_t> word_count;
  std::map<std::pair<std::string, std::string>, std::uint64_t> pair_count;
  std::string source;

  std::uint64_t count(const std::string& w) const {
    auto it = word_count.find(w);
    return it == word_count.end() ? 0 : it->second;
  }

  std::uint64_t count(const std::string& cause_word, const std::string& effect_word) const {
    auto it = pair_count.find({cause_word, effect_word});
    return it == pair_count.end() ? 0 : it->second;
  }
};

/// Words for co-occurrence counting: lowercase tokens with punctuation-only
/// tokens dropped.
inline std::vector<std::string> content_words(const std::string& text) {
  std::vector<std::string> words;
  for (auto& w : split_words(text)) {
    const bool punct = w.size() == 1 && std::ispunct(static_cast<unsigned char>(w[0]));
    if (!punct) words.push_back(std::move(w));
  }
  return words;
}

inline CooccurrenceStats build_cooccurrence(const std::vector<CausalStatement>& corpus,
                                            std::string source = "") {
  if (corpus.empty()) {
    throw ValidationError("build_cooccurrence: corpus is empty");
  }
  CooccurrenceStats stats;
  stats.source = std::move(source);
  for (const auto& [cause_text, effect_text] : corpus) {
    const auto cause_words = content_words(cause_text);
    const auto effect_words = content_words(effect_text);
    for (const auto& w : cause_words) stats.word_count[w] += 1;
    for (const auto& w : effect_words) stats.word_count[w] += 1;
    const std::set<std::string> cause_set(cause_words.begin(), cause_words.end());
    const std::set<std::string> effect_set(effect_words.begin(), effect_words.end());
    for (const auto& wi : cause_set) {
      for (const auto& wj : effect_set) {
        stats.pair_count[{wi, wj}] += 1;
      }
    }
  }
  return stats;
}

/// Corpus-statistics causal strength: the mean over (cause word, effect
/// word) pairs of count(wi,wj) / (count(wi) * count(wj)^alpha), normalized
/// by the total number of words on both sides. Words the corpus never saw
/// contribute zero.
inline double ceq_score(const CooccurrenceStats& stats, const EventText& cause,
                        const EventText& effect, const CeqConfig& config = {}) {
  config.validate();
  const auto cause_words = content_words(cause.raw);
  const auto effect_words = content_words(effect.raw);
  if (cause_words.empty() || effect_words.empty()) {
    throw ValidationError("ceq_score: no content words in " +
                          std::string(cause_words.empty() ? "cause" : "effect"));
  }
  double total = 0.0;
  for (const auto& wi : cause_words) {
    const double ci = static_cast<double>(stats.count(wi));
    if (ci == 0.0) continue;
    for (const auto& wj : effect_words) {
      const double cj = static_cast<double>(stats.count(wj));
      if (cj == 0.0) continue;
      const double pair = static_cast<double>(stats.count(wi, wj));
      if (pair == 0.0) continue;
      total += pair / (ci * std::pow(cj, config.alpha));
    }
  }
  const double n_words = static_cast<double>(cause_words.size() + effect_words.size());
  return total / n_words;
}

inline double ceq_score(const std::vector<CausalStatement>& corpus, const EventText& cause,
                        const EventText& effect, const CeqConfig& config = {}) {
  return ceq_score(build_cooccurrence(corpus), cause, effect, config);
}

} // namespace causal
