#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "causal/error.hpp"
#include "causal/matrix.hpp"
#include "causal/numerics.hpp"
#include "causal/random.hpp"
#include "causal/records.hpp"
#include "causal/text.hpp"

namespace causal {

enum class AttentionMode { learned, uniform };
enum class EmbedderKind { lookup, lookup_mixer, fixed };

inline std::string to_string(AttentionMode m) {
  return m == AttentionMode::learned ? "learned" : "uniform";
}

inline std::string to_string(EmbedderKind k) {
  switch (k) {
    case EmbedderKind::lookup: return "lookup";
    case EmbedderKind::lookup_mixer: return "lookup_mixer";
    default: return "fixed";
  }
}

inline AttentionMode attention_mode_from_string(const std::string& s) {
  if (s == "learned") return AttentionMode::learned;
  if (s == "uniform") return AttentionMode::uniform;
  throw ValidationError("unknown attention mode: " + s);
}

inline EmbedderKind embedder_kind_from_string(const std::string& s) {
  if (s == "lookup") return EmbedderKind::lookup;
  if (s == "lookup_mixer") return EmbedderKind::lookup_mixer;
  if (s == "fixed") return EmbedderKind::fixed;
  throw ValidationError("unknown embedder kind: " + s);
}

struct ModelConfig {
  std::size_t dim = 64;
  EmbedderKind embedder = EmbedderKind::lookup;
  AttentionMode attention_mode = AttentionMode::learned;
  bool include_specials = true;
  std::uint64_t seed = 42;
};

/// Token embedder plus the query/key projections of the pair-level
/// attention. The embedder is either a trainable lookup table, the same
/// table followed by one self-attention mixing layer, or a fixed table
/// loaded from a file.
struct CesarModel {
  std::size_t dim = 0;
  EmbedderKind embedder = EmbedderKind::lookup;
  AttentionMode attention_mode = AttentionMode::learned;
  bool include_specials = true;
  std::uint64_t seed = 42;
  std::string vocab_hash;

  Matrix table;                 // |vocab| x dim
  Matrix w_q, w_k;              // dim x dim
  Matrix mix_wq, mix_wk, mix_wv; // dim x dim, only for lookup_mixer

  bool has_mixer() const { return embedder == EmbedderKind::lookup_mixer; }
  bool table_trainable() const { return embedder != EmbedderKind::fixed; }
};

namespace detail {

inline void glorot_fill(Matrix& m, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  for (double& v : m.values()) v = rng.next_uniform(-bound, bound);
}

} // namespace detail

/// Fresh model with seeded initialization: Glorot-uniform projections and a
/// small-scale Gaussian embedding table.
inline CesarModel make_model(const Vocabulary& vocab, const ModelConfig& cfg) {
  if (cfg.dim == 0) throw ValidationError("make_model: dim must be positive");
  if (cfg.embedder == EmbedderKind::fixed) {
    throw ValidationError("make_model: fixed embedder requires a loaded table; "
                          "use make_model_with_table");
  }
  CesarModel model;
  model.dim = cfg.dim;
  model.embedder = cfg.embedder;
  model.attention_mode = cfg.attention_mode;
  model.include_specials = cfg.include_specials;
  model.seed = cfg.seed;
  model.vocab_hash = vocab.content_hash();
  Rng rng(cfg.seed);
  model.table = Matrix(vocab.size(), cfg.dim);
  for (double& v : model.table.values()) v = 0.1 * rng.next_gaussian();
  model.w_q = Matrix(cfg.dim, cfg.dim);
  model.w_k = Matrix(cfg.dim, cfg.dim);
  detail::glorot_fill(model.w_q, rng);
  detail::glorot_fill(model.w_k, rng);
  if (cfg.embedder == EmbedderKind::lookup_mixer) {
    model.mix_wq = Matrix(cfg.dim, cfg.dim);
    model.mix_wk = Matrix(cfg.dim, cfg.dim);
    model.mix_wv = Matrix(cfg.dim, cfg.dim);
    detail::glorot_fill(model.mix_wq, rng);
    detail::glorot_fill(model.mix_wk, rng);
    detail::glorot_fill(model.mix_wv, rng);
  }
  return model;
}

/// Model over an externally produced embedding table (not trained).
inline CesarModel make_model_with_table(const Vocabulary& vocab, Matrix table,
                                        const ModelConfig& cfg) {
  if (table.rows() != vocab.size()) {
    throw ValidationError("make_model_with_table: table has " + std::to_string(table.rows()) +
                          " rows for a vocabulary of " + std::to_string(vocab.size()));
  }
  if (table.cols() != cfg.dim) {
    throw ValidationError("make_model_with_table: table dim " + std::to_string(table.cols()) +
                          " != configured dim " + std::to_string(cfg.dim));
  }
  ModelConfig lookup_cfg = cfg;
  lookup_cfg.embedder = EmbedderKind::lookup;
  CesarModel model = make_model(vocab, lookup_cfg);
  model.embedder = EmbedderKind::fixed;
  model.table = std::move(table);
  return model;
}

/// Text embedding table: "embeddings <rows> <cols>" header, then one row of
/// numbers per line.
inline Matrix load_embedding_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_embedding_table: cannot open " + path);
  std::string tag;
  std::size_t rows = 0, cols = 0;
  in >> tag >> rows >> cols;
  if (!in || tag != "embeddings" || rows == 0 || cols == 0) {
    throw ParseError("load_embedding_table: bad header in " + path);
  }
  Matrix table(rows, cols);
  for (double& v : table.values()) {
    if (!(in >> v)) throw ParseError("load_embedding_table: truncated data in " + path);
  }
  return table;
}

namespace detail {

/// Everything the backward pass needs to retrace the embedding step.
struct EmbedTrace {
  std::vector<TokenId> row_ids;        // token id per unmasked row, packed order
  std::vector<std::size_t> cause_rows; // indices into rows for the cause side
  std::vector<std::size_t> effect_rows;
  Matrix lookup;                       // unmasked lookup rows, L x d
  // Mixer intermediates (empty when the embedder has no mixer).
  Matrix mix_q, mix_k, mix_v; // L x d
  Matrix mix_attn;            // L x L row-stochastic
  Matrix mixed;               // L x d output rows
};

inline const Matrix& embedded_rows(const EmbedTrace& trace) {
  return trace.mixed.empty() ? trace.lookup : trace.mixed;
}

/// Row-wise softmax (the mixer is a conventional attention layer; only the
/// pair-level attention uses the whole-matrix softmax).
inline Matrix row_softmax(const Matrix& logits) {
  Matrix out = logits;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    double mx = row[0];
    for (double v : row) mx = std::max(mx, v);
    double total = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      total += v;
    }
    for (double& v : row) v /= total;
  }
  return out;
}

inline EmbedTrace embed_trace(const CesarModel& model, const TokenSequence& seq) {
  if (seq.ids.empty() || seq.ids.size() != seq.type_ids.size() ||
      seq.ids.size() != seq.attention_mask.size()) {
    throw ValidationError("embed: malformed token sequence");
  }
  EmbedTrace trace;
  for (std::size_t pos = 0; pos < seq.ids.size(); ++pos) {
    if (seq.attention_mask[pos] == 0) continue;
    const TokenId id = seq.ids[pos];
    if (id < 0 || static_cast<std::size_t>(id) >= model.table.rows()) {
      throw ValidationError("embed: token id " + std::to_string(id) +
                            " outside embedder range of " + std::to_string(model.table.rows()));
    }
    const bool special = (id == kClsId || id == kSepId);
    const std::size_t row_index = trace.row_ids.size();
    trace.row_ids.push_back(id);
    if (!special || model.include_specials) {
      if (seq.type_ids[pos] == 0) {
        trace.cause_rows.push_back(row_index);
      } else {
        trace.effect_rows.push_back(row_index);
      }
    }
  }
  if (trace.row_ids.empty()) {
    throw ValidationError("embed: sequence has no unmasked tokens");
  }
  if (trace.cause_rows.empty() || trace.effect_rows.empty()) {
    throw ValidationError("embed: a segment is empty after special-token handling");
  }
  trace.lookup = Matrix(trace.row_ids.size(), model.dim);
  for (std::size_t r = 0; r < trace.row_ids.size(); ++r) {
    const auto src = model.table.row(static_cast<std::size_t>(trace.row_ids[r]));
    auto dst = trace.lookup.row(r);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  if (model.has_mixer()) {
    trace.mix_q = matmul(trace.lookup, model.mix_wq);
    trace.mix_k = matmul(trace.lookup, model.mix_wk);
    trace.mix_v = matmul(trace.lookup, model.mix_wv);
    Matrix logits = matmul_nt(trace.mix_q, trace.mix_k);
    logits *= 1.0 / std::sqrt(static_cast<double>(model.dim));
    trace.mix_attn = row_softmax(logits);
    trace.mixed = matmul(trace.mix_attn, trace.mix_v);
    trace.mixed += trace.lookup; // residual
  }
  return trace;
}

inline Matrix gather_rows(const Matrix& rows, const std::vector<std::size_t>& which,
                          std::size_t dim) {
  Matrix out(which.size(), dim);
  for (std::size_t i = 0; i < which.size(); ++i) {
    const auto src = rows.row(which[i]);
    auto dst = out.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return out;
}

} // namespace detail

/// Embeds a packed sequence and splits the rows into cause-side and
/// effect-side matrices. [PAD] rows are dropped; [CLS]/[SEP] rows stay on
/// their segment side unless the model excludes specials from scoring.
inline std::pair<Matrix, Matrix> embed(const CesarModel& model, const TokenSequence& seq) {
  const auto trace = detail::embed_trace(model, seq);
  const Matrix& rows = detail::embedded_rows(trace);
  return {detail::gather_rows(rows, trace.cause_rows, model.dim),
          detail::gather_rows(rows, trace.effect_rows, model.dim)};
}

/// Pair-level attention over every (cause token, effect token) pair. In
/// learned mode the softmax runs over the whole n x m score matrix, so the
/// entries jointly sum to 1; uniform mode spreads the same total mass evenly.
inline Matrix attention(const CesarModel& model, const Matrix& cause, const Matrix& effect) {
  if (cause.cols() != model.dim || effect.cols() != model.dim) {
    throw ValidationError("attention: embedding width differs from model dim");
  }
  if (model.attention_mode == AttentionMode::uniform) {
    const double nm = static_cast<double>(cause.rows() * effect.rows());
    return Matrix(cause.rows(), effect.rows(), 1.0 / nm);
  }
  const Matrix q = matmul(cause, model.w_q);
  const Matrix k = matmul(effect, model.w_k);
  return global_softmax(matmul_nt(q, k));
}

/// The association / attention / strength decomposition of one score:
/// strength = association (*) attention elementwise, score = sum(strength).
struct ScoreBreakdown {
  Matrix association; // n x m absolute cosines
  Matrix attention;   // n x m weights summing to 1
  Matrix strength;    // elementwise product
  double score = 0.0;
};

inline Matrix association_matrix(const Matrix& cause, const Matrix& effect) {
  Matrix m(cause.rows(), effect.rows());
  for (std::size_t i = 0; i < cause.rows(); ++i) {
    for (std::size_t j = 0; j < effect.rows(); ++j) {
      m(i, j) = abs_cosine(cause.row(i), effect.row(j));
    }
  }
  return m;
}

inline ScoreBreakdown score_embedded(const CesarModel& model, const Matrix& cause,
                                     const Matrix& effect) {
  ScoreBreakdown breakdown;
  breakdown.association = association_matrix(cause, effect);
  breakdown.attention = attention(model, cause, effect);
  breakdown.strength = hadamard(breakdown.association, breakdown.attention);
  // Attention normalization can overshoot 1 by a few ulps; the score contract
  // is [0,1].
  breakdown.score = std::min(breakdown.strength.sum(), 1.0);
  return breakdown;
}

inline ScoreBreakdown score_sequence(const CesarModel& model, const TokenSequence& seq) {
  auto [cause, effect] = embed(model, seq);
  return score_embedded(model, cause, effect);
}

/// Packs raw texts (joining the addition onto the cause side when present)
/// and scores them.
inline TokenSequence pack_texts(const Vocabulary& vocab, const EventText& cause,
                                const std::optional<EventText>& addition,
                                const EventText& effect) {
  std::vector<TokenId> cause_side = vocab.encode(cause);
  if (addition) {
    cause_side = concatenate(cause_side, vocab.encode(*addition));
  }
  return pack_pair(std::move(cause_side), vocab.encode(effect));
}

inline ScoreBreakdown score(const CesarModel& model, const Vocabulary& vocab,
                            const EventText& cause, const std::optional<EventText>& addition,
                            const EventText& effect) {
  return score_sequence(model, pack_texts(vocab, cause, addition, effect));
}

/// Token strings for the rows of a breakdown's matrices (cause side, effect
/// side), in scoring order.
inline std::pair<std::vector<std::string>, std::vector<std::string>> segment_tokens(
    const CesarModel& model, const Vocabulary& vocab, const TokenSequence& seq) {
  const auto trace = detail::embed_trace(model, seq);
  std::pair<std::vector<std::string>, std::vector<std::string>> out;
  for (std::size_t r : trace.cause_rows) out.first.push_back(vocab.token(trace.row_ids[r]));
  for (std::size_t r : trace.effect_rows) out.second.push_back(vocab.token(trace.row_ids[r]));
  return out;
}

} // namespace causal
