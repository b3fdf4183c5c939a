#pragma once

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "causal/error.hpp"
#include "causal/random.hpp"
#include "causal/records.hpp"
#include "causal/sha256.hpp"

namespace causal {

/// How a supporter/defeater is spliced onto the cause before the masked
/// temporal/causal query.
enum class CtcwTemplate { bare, and_word, fact, and_later };

inline std::string to_string(CtcwTemplate t) {
  switch (t) {
    case CtcwTemplate::bare: return "bare";
    case CtcwTemplate::and_word: return "and";
    case CtcwTemplate::fact: return "fact";
    default: return "and_later";
  }
}

inline CtcwTemplate ctcw_template_from_string(const std::string& s) {
  if (s == "bare") return CtcwTemplate::bare;
  if (s == "and") return CtcwTemplate::and_word;
  if (s == "fact") return CtcwTemplate::fact;
  if (s == "and_later") return CtcwTemplate::and_later;
  throw ValidationError("unknown template: " + s + " (expected bare|and|fact|and_later)");
}

/// Instruction block appended to every prompt: asks the model for a
/// probability per listed word and pins down what each word would imply.
inline const std::string& default_ctcw_instructions() {
  static const std::string text =
      "Give the probabilities for each of the listed words to replace the [MASK]:\n"
      "- after\n"
      "- before\n"
      "- therefore\n"
      "- because\n"
      "such that,\n"
      "- \"after\" implies that A happened later than B\n"
      "- \"before\" implies that A happened earlier than B\n"
      "- \"therefore\" implies that A causes B, i.e., A is the cause of B, and B is the "
      "effect of A\n"
      "- \"because\" implies that B causes A, i.e., A is the effect of B, and B is the "
      "cause.\n"
      "Keep in mind that \"therefore\" and \"because\" have opposite meanings in this "
      "context.\n"
      "The sum of probabilities should not exceed 1.0, but if words don't fit well enough, "
      "the sum can be less than 1.0. The probabilities should be based on the descriptions "
      "above. If a word does not fit well, it should have zero probability. The cause "
      "should always precede the effect. Try to list only probabilities without further "
      "explanations.";
  return text;
}

namespace detail {

inline std::string strip_final_period(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

inline std::string lowercase_first(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  return s;
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

} // namespace detail

/// Renders the masked sentence for one scoring call and appends the
/// instruction block. Without an addition the pair renders as
/// "cause [MASK] effect"; the three templates splice the addition in.
inline std::string ctcw_build_prompt(CtcwTemplate tmpl, const EventText& cause,
                                     const EventText& effect,
                                     const std::optional<EventText>& addition,
                                     const std::string& instructions = default_ctcw_instructions()) {
  using detail::lowercase_first;
  using detail::strip_final_period;
  using detail::trim;
  const std::string c = strip_final_period(trim(cause.raw));
  const std::string e = lowercase_first(trim(effect.raw));

  std::string sentence;
  if (!addition) {
    if (tmpl != CtcwTemplate::bare) {
      throw ValidationError("ctcw_build_prompt: template \"" + to_string(tmpl) +
                            "\" requires an addition");
    }
    sentence = c + " [MASK] " + e;
  } else {
    const std::string a = strip_final_period(trim(addition->raw));
    switch (tmpl) {
      case CtcwTemplate::bare:
        throw ValidationError("ctcw_build_prompt: bare template cannot take an addition");
      case CtcwTemplate::and_word:
        sentence = c + " and " + a + " [MASK] " + e;
        break;
      case CtcwTemplate::fact:
        sentence = "It is a fact that " + lowercase_first(a) + ". So, " + lowercase_first(c) +
                   " [MASK] " + e;
        break;
      case CtcwTemplate::and_later:
        sentence = c + ", and later " + lowercase_first(a) + " [MASK] " + e;
        break;
    }
  }
  if (instructions.empty()) return sentence;
  return sentence + "\n\n" + instructions;
}

/// One probability per contrastive word, plus the raw (pre-normalization)
/// total the provider handed back.
struct ProbabilityTable {
  double after = 0.0;
  double before = 0.0;
  double therefore = 0.0;
  double because = 0.0;
  double raw_sum = 0.0;

  void finalize() { raw_sum = after + before + therefore + because; }
};

/// Pulls the four probabilities out of a provider response by labeled-line
/// matching: a line mentioning the word followed by a number. Every word
/// must be present and in [0,1]; nothing is defaulted.
inline ProbabilityTable ctcw_parse(const std::string& response) {
  if (detail::trim(response).empty()) {
    throw ParseError("ctcw_parse: empty response");
  }
  static const char* kWords[4] = {"after", "before", "therefore", "because"};
  std::optional<double> found[4];

  std::istringstream lines(response);
  std::string line;
  while (std::getline(lines, line)) {
    std::string lowered = line;
    for (char& ch : lowered) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    for (int w = 0; w < 4; ++w) {
      if (found[w]) continue;
      const std::string& word = kWords[w];
      std::size_t pos = 0;
      while ((pos = lowered.find(word, pos)) != std::string::npos) {
        const bool left_ok =
            pos == 0 || !std::isalpha(static_cast<unsigned char>(lowered[pos - 1]));
        const std::size_t end = pos + word.size();
        const bool right_ok =
            end >= lowered.size() || !std::isalpha(static_cast<unsigned char>(lowered[end]));
        if (left_ok && right_ok) break;
        pos = end;
      }
      if (pos == std::string::npos) continue;
      // First number after the word on this line.
      std::size_t cursor = pos + word.size();
      while (cursor < lowered.size() &&
             !(std::isdigit(static_cast<unsigned char>(lowered[cursor])) ||
               lowered[cursor] == '-' || lowered[cursor] == '+' || lowered[cursor] == '.')) {
        ++cursor;
      }
      if (cursor >= lowered.size()) continue;
      char* end_ptr = nullptr;
      const double value = std::strtod(lowered.c_str() + cursor, &end_ptr);
      if (end_ptr == lowered.c_str() + cursor) continue;
      if (!(value >= 0.0 && value <= 1.0)) {
        throw ParseError("ctcw_parse: probability for \"" + word +
                         "\" outside [0,1] in line: " + line);
      }
      found[w] = value;
    }
  }
  for (int w = 0; w < 4; ++w) {
    if (!found[w]) {
      throw ParseError(std::string("ctcw_parse: no probability found for \"") + kWords[w] +
                       "\"");
    }
  }
  ProbabilityTable table;
  table.after = *found[0];
  table.before = *found[1];
  table.therefore = *found[2];
  table.because = *found[3];
  table.finalize();
  return table;
}

/// Contrastive score plus the raw value kept alongside when the provider's
/// probabilities had to be rescaled to a total of 1.
struct CtcwScore {
  double value = 0.0;
  double raw = 0.0;
  bool rescaled = false;
};

/// (before + therefore) - (after + because). With clamping on, tables whose
/// raw total exceeds 1 are rescaled by 1/raw_sum first; the unscaled score
/// is retained in `raw` either way.
inline CtcwScore ctcw_score(const ProbabilityTable& table, bool clamp = true) {
  for (double p : {table.after, table.before, table.therefore, table.because}) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ValidationError("ctcw_score: table probability outside [0,1]");
    }
  }
  CtcwScore result;
  result.raw = (table.before + table.therefore) - (table.after + table.because);
  if (clamp && table.raw_sum > 1.0) {
    const double scale = 1.0 / table.raw_sum;
    result.value = (table.before * scale + table.therefore * scale) -
                   (table.after * scale + table.because * scale);
    result.rescaled = true;
  } else {
    result.value = result.raw;
  }
  return result;
}

/// Turns a prompt into a probability table. Implementations must be
/// deterministic for a fixed underlying state.
class CtcwProvider {
public:
  virtual ~CtcwProvider() = default;
  virtual ProbabilityTable probabilities(const std::string& prompt) = 0;
};

/// Offline provider: fixture tables keyed by the SHA-256 of the exact prompt
/// string, with a deterministic hash-derived table for prompts that have no
/// fixture. A pure function of the prompt.
class MockProvider : public CtcwProvider {
public:
  MockProvider() = default;

  /// JSONL rows: {"prompt_sha256": ..., "after": ..., "before": ...,
  /// "therefore": ..., "because": ...}.
  static MockProvider from_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("MockProvider: cannot open fixtures " + path);
    MockProvider provider;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (detail::trim(line).empty()) continue;
      nlohmann::json row;
      try {
        row = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError("MockProvider: bad JSON at " + path + ":" + std::to_string(line_no) +
                         ": " + e.what());
      }
      try {
        ProbabilityTable table;
        table.after = row.at("after").get<double>();
        table.before = row.at("before").get<double>();
        table.therefore = row.at("therefore").get<double>();
        table.because = row.at("because").get<double>();
        table.finalize();
        provider.fixtures_[row.at("prompt_sha256").get<std::string>()] = table;
      } catch (const nlohmann::json::exception& e) {
        throw ParseError("MockProvider: missing field at " + path + ":" +
                         std::to_string(line_no) + ": " + e.what());
      }
    }
    return provider;
  }

  void add_fixture(const std::string& prompt, const ProbabilityTable& table) {
    ProbabilityTable copy = table;
    copy.finalize();
    fixtures_[sha256_hex(prompt)] = copy;
  }

  std::size_t fixture_count() const { return fixtures_.size(); }

  ProbabilityTable probabilities(const std::string& prompt) override {
    const std::string key = sha256_hex(prompt);
    auto it = fixtures_.find(key);
    if (it != fixtures_.end()) return it->second;
    // Derived fallback: seed from the hash prefix, draw four values that
    // cannot exceed a total of 1.
    std::uint64_t seed = 0;
    for (int i = 0; i < 16; ++i) {
      const char c = key[static_cast<std::size_t>(i)];
      seed = seed * 16 + static_cast<std::uint64_t>(c <= '9' ? c - '0' : c - 'a' + 10);
    }
    Rng rng(seed);
    ProbabilityTable table;
    table.after = 0.25 * rng.next_unit();
    table.before = 0.25 * rng.next_unit();
    table.therefore = 0.25 * rng.next_unit();
    table.because = 0.25 * rng.next_unit();
    table.finalize();
    return table;
  }

private:
  std::unordered_map<std::string, ProbabilityTable> fixtures_;
};

/// Writes fixtures in the format MockProvider::from_jsonl reads.
inline void save_ctcw_fixtures(const std::string& path,
                               const std::vector<std::pair<std::string, ProbabilityTable>>&
                                   prompt_tables) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_ctcw_fixtures: cannot open " + path);
  for (const auto& [prompt, table] : prompt_tables) {
    nlohmann::json row = {{"prompt_sha256", sha256_hex(prompt)},
                          {"after", table.after},
                          {"before", table.before},
                          {"therefore", table.therefore},
                          {"because", table.because}};
    out << row.dump() << '\n';
  }
}

} // namespace causal
