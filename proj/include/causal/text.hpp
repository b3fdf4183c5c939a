#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "causal/error.hpp"
#include "causal/sha256.hpp"

namespace causal {

using TokenId = std::int32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr TokenId kClsId = 2;
inline constexpr TokenId kSepId = 3;
inline constexpr std::size_t kMaxSequenceLength = 512;

/// A sentence-sized piece of text: a cause, effect, supporter, or defeater.
struct EventText {
  std::string raw;

  explicit EventText(std::string text) : raw(std::move(text)) {
    const auto first = raw.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
      throw ValidationError("EventText: text is empty after trimming");
    }
  }
};

/// Lowercase whitespace tokenizer that splits ASCII punctuation into
/// separate tokens. Returns word strings; id mapping is the vocabulary's job.
inline std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      words.push_back(current);
      current.clear();
    }
  };
  for (unsigned char ch : text) {
    if (std::isspace(ch)) {
      flush();
    } else if (ch < 0x80 && std::ispunct(ch)) {
      flush();
      words.emplace_back(1, static_cast<char>(ch));
    } else {
      current.push_back(static_cast<char>(std::tolower(ch)));
    }
  }
  flush();
  return words;
}

/// Token list with reserved ids 0..3 for [PAD], [UNK], [CLS], [SEP].
class Vocabulary {
public:
  Vocabulary() {
    for (const char* t : {"[PAD]", "[UNK]", "[CLS]", "[SEP]"}) add_token(t);
  }

  /// Builds from word frequencies over a corpus of texts. Tokens are kept in
  /// descending frequency order, ties broken by first appearance, capped at
  /// max_size total entries (reserved tokens included).
  static Vocabulary build(const std::vector<std::string>& corpus,
                          std::size_t max_size = 30000) {
    if (max_size < 5) {
      throw ValidationError("Vocabulary::build: max_size must allow at least one token");
    }
    struct Entry {
      std::string word;
      std::size_t count = 0;
      std::size_t first_seen = 0;
    };
    std::unordered_map<std::string, std::size_t> index;
    std::vector<Entry> entries;
    std::size_t position = 0;
    for (const auto& text : corpus) {
      for (auto& w : split_words(text)) {
        auto [it, inserted] = index.emplace(w, entries.size());
        if (inserted) {
          entries.push_back({std::move(w), 1, position});
        } else {
          entries[it->second].count += 1;
        }
        ++position;
      }
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      if (a.count != b.count) return a.count > b.count;
      return a.first_seen < b.first_seen;
    });
    Vocabulary vocab;
    for (const auto& e : entries) {
      if (vocab.size() >= max_size) break;
      vocab.add_token(e.word);
    }
    return vocab;
  }

  std::size_t size() const { return tokens_.size(); }

  const std::string& token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
      throw ValidationError("Vocabulary: id out of range: " + std::to_string(id));
    }
    return tokens_[static_cast<std::size_t>(id)];
  }

  TokenId id_of(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnkId : it->second;
  }

  bool contains(const std::string& token) const { return ids_.count(token) > 0; }

  /// Tokenize raw text to ids, without special tokens. Unknown words map to
  /// [UNK].
  std::vector<TokenId> encode(const EventText& text) const {
    const auto words = split_words(text.raw);
    if (words.empty()) {
      throw ValidationError("tokenize: no tokens in \"" + text.raw + "\"");
    }
    std::vector<TokenId> ids;
    ids.reserve(words.size());
    for (const auto& w : words) ids.push_back(id_of(w));
    return ids;
  }

  /// Hash of the full token list; checkpoints refuse to load against a
  /// vocabulary with a different hash.
  std::string content_hash() const {
    std::string blob;
    for (const auto& t : tokens_) {
      blob += t;
      blob += '\n';
    }
    return sha256_hex(blob);
  }

  /// One token per line, line number = id.
  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("Vocabulary::save: cannot open " + path);
    for (const auto& t : tokens_) out << t << '\n';
    if (!out) throw IoError("Vocabulary::save: write failed for " + path);
  }

  static Vocabulary load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("Vocabulary::load: cannot open " + path);
    Vocabulary vocab;
    vocab.tokens_.clear();
    vocab.ids_.clear();
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      vocab.add_token(line);
    }
    static const char* reserved[] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
    for (TokenId i = 0; i < 4; ++i) {
      if (vocab.size() <= static_cast<std::size_t>(i) ||
          vocab.tokens_[static_cast<std::size_t>(i)] != reserved[i]) {
        throw ParseError("Vocabulary::load: reserved token " + std::string(reserved[i]) +
                         " missing at id " + std::to_string(i) + " in " + path);
      }
    }
    return vocab;
  }

private:
  void add_token(std::string token) {
    auto [it, inserted] = ids_.emplace(token, static_cast<TokenId>(tokens_.size()));
    if (!inserted) {
      throw ValidationError("Vocabulary: duplicate token \"" + token + "\"");
    }
    tokens_.push_back(std::move(token));
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

/// Joins a cause with a supporter/defeater: cause [SEP] addition. The result
/// still lives entirely on the cause side of a packed pair.
inline std::vector<TokenId> concatenate(const std::vector<TokenId>& cause_ids,
                                        const std::vector<TokenId>& addition_ids) {
  if (cause_ids.empty() || addition_ids.empty()) {
    throw ValidationError("concatenate: both operands must be non-empty");
  }
  std::vector<TokenId> out;
  out.reserve(cause_ids.size() + 1 + addition_ids.size());
  out.insert(out.end(), cause_ids.begin(), cause_ids.end());
  out.push_back(kSepId);
  out.insert(out.end(), addition_ids.begin(), addition_ids.end());
  return out;
}

/// Model input: ids with segment markers (0 = cause side, 1 = effect side)
/// and an attention mask that is 0 exactly on [PAD] positions.
struct TokenSequence {
  std::vector<TokenId> ids;
  std::vector<std::uint8_t> type_ids;
  std::vector<std::uint8_t> attention_mask;
};

/// Packs a (possibly supplemented) cause and an effect for scoring:
/// [CLS] cause [SEP] effect [SEP], segment ids 0/1. When the packed length
/// would exceed the cap, tokens are dropped from the end of the longer
/// segment until it fits.
inline TokenSequence pack_pair(std::vector<TokenId> cause_side,
                               std::vector<TokenId> effect_side,
                               std::size_t max_length = kMaxSequenceLength) {
  if (cause_side.empty() || effect_side.empty()) {
    throw ValidationError("pack_pair: empty segment");
  }
  if (max_length < 5) {
    throw ValidationError("pack_pair: max_length too small for [CLS] t [SEP] t [SEP]");
  }
  while (cause_side.size() + effect_side.size() + 3 > max_length) {
    if (cause_side.size() >= effect_side.size()) {
      cause_side.pop_back();
    } else {
      effect_side.pop_back();
    }
    if (cause_side.empty() || effect_side.empty()) {
      throw ValidationError("pack_pair: a segment became empty under truncation");
    }
  }
  TokenSequence seq;
  seq.ids.reserve(cause_side.size() + effect_side.size() + 3);
  seq.ids.push_back(kClsId);
  seq.ids.insert(seq.ids.end(), cause_side.begin(), cause_side.end());
  seq.ids.push_back(kSepId);
  const std::size_t cause_len = seq.ids.size();
  seq.ids.insert(seq.ids.end(), effect_side.begin(), effect_side.end());
  seq.ids.push_back(kSepId);
  seq.type_ids.assign(seq.ids.size(), 1);
  std::fill(seq.type_ids.begin(), seq.type_ids.begin() + static_cast<std::ptrdiff_t>(cause_len), 0);
  seq.attention_mask.assign(seq.ids.size(), 1);
  return seq;
}

} // namespace causal
