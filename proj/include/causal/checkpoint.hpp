#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "causal/error.hpp"
#include "causal/model.hpp"
#include "causal/text.hpp"

namespace causal {

inline constexpr int kCheckpointVersion = 1;

namespace detail {

/// 17 significant digits round-trip any finite double exactly.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_matrix(std::ostream& out, const std::string& name, const Matrix& m) {
  out << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

inline Matrix read_matrix(std::istream& in, const std::string& expected_name,
                          const std::string& path) {
  std::string tag, name;
  std::size_t rows = 0, cols = 0;
  if (!(in >> tag >> name >> rows >> cols) || tag != "matrix" || name != expected_name) {
    throw ParseError("checkpoint: expected matrix \"" + expected_name + "\" in " + path);
  }
  if (rows == 0 || cols == 0) {
    throw ParseError("checkpoint: matrix " + expected_name + " has zero dimension in " + path);
  }
  Matrix m(rows, cols);
  for (double& v : m.values()) {
    if (!(in >> v)) {
      throw ParseError("checkpoint: truncated matrix " + expected_name + " in " + path);
    }
  }
  return m;
}

} // namespace detail

/// Writes the model as a plain-text checkpoint. Values are serialized with
/// 17 significant digits so a reload reproduces scores bit-for-bit.
inline void save_checkpoint(const CesarModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_checkpoint: cannot open " + path);
  out << "causal-strength-checkpoint " << kCheckpointVersion << '\n';
  out << "dim " << model.dim << '\n';
  out << "attention_mode " << to_string(model.attention_mode) << '\n';
  out << "include_specials " << (model.include_specials ? 1 : 0) << '\n';
  out << "embedder " << to_string(model.embedder) << '\n';
  out << "seed " << model.seed << '\n';
  out << "vocab_hash " << model.vocab_hash << '\n';
  detail::write_matrix(out, "w_q", model.w_q);
  detail::write_matrix(out, "w_k", model.w_k);
  if (model.has_mixer()) {
    detail::write_matrix(out, "mix_wq", model.mix_wq);
    detail::write_matrix(out, "mix_wk", model.mix_wk);
    detail::write_matrix(out, "mix_wv", model.mix_wv);
  }
  detail::write_matrix(out, "table", model.table);
  out << "end\n";
  if (!out) throw IoError("save_checkpoint: write failed for " + path);
}

/// Loads a checkpoint and checks it against the vocabulary it will be used
/// with; a content-hash mismatch is an error, not a warning.
inline CesarModel load_checkpoint(const std::string& path, const Vocabulary& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_checkpoint: cannot open " + path);

  std::string magic;
  int version = -1;
  if (!(in >> magic >> version) || magic != "causal-strength-checkpoint") {
    throw ParseError("load_checkpoint: not a checkpoint file: " + path);
  }
  if (version != kCheckpointVersion) {
    throw ParseError("load_checkpoint: unsupported format_version " +
                     std::to_string(version) + " in " + path);
  }

  CesarModel model;
  auto read_field = [&](const char* key) {
    std::string k;
    if (!(in >> k) || k != key) {
      throw ParseError(std::string("load_checkpoint: expected field \"") + key + "\" in " + path);
    }
  };
  read_field("dim");
  if (!(in >> model.dim) || model.dim == 0) {
    throw ParseError("load_checkpoint: bad dim in " + path);
  }
  std::string word;
  read_field("attention_mode");
  in >> word;
  model.attention_mode = attention_mode_from_string(word);
  read_field("include_specials");
  int flag = 0;
  in >> flag;
  model.include_specials = flag != 0;
  read_field("embedder");
  in >> word;
  model.embedder = embedder_kind_from_string(word);
  read_field("seed");
  in >> model.seed;
  read_field("vocab_hash");
  in >> model.vocab_hash;
  if (!in) throw ParseError("load_checkpoint: truncated header in " + path);

  if (model.vocab_hash != vocab.content_hash()) {
    throw ValidationError("load_checkpoint: vocabulary hash mismatch for " + path +
                          " (checkpoint was trained with a different vocabulary)");
  }

  model.w_q = detail::read_matrix(in, "w_q", path);
  model.w_k = detail::read_matrix(in, "w_k", path);
  if (model.has_mixer()) {
    model.mix_wq = detail::read_matrix(in, "mix_wq", path);
    model.mix_wk = detail::read_matrix(in, "mix_wk", path);
    model.mix_wv = detail::read_matrix(in, "mix_wv", path);
  }
  model.table = detail::read_matrix(in, "table", path);

  std::string tail;
  if (!(in >> tail) || tail != "end") {
    throw ParseError("load_checkpoint: missing end marker in " + path);
  }
  if (model.w_q.rows() != model.dim || model.w_q.cols() != model.dim ||
      model.w_k.rows() != model.dim || model.w_k.cols() != model.dim) {
    throw ParseError("load_checkpoint: projection shape differs from dim in " + path);
  }
  if (model.table.cols() != model.dim) {
    throw ParseError("load_checkpoint: table width differs from dim in " + path);
  }
  if (model.table.rows() != vocab.size()) {
    throw ValidationError("load_checkpoint: table rows (" + std::to_string(model.table.rows()) +
                          ") differ from vocabulary size (" + std::to_string(vocab.size()) +
                          ") for " + path);
  }
  return model;
}

} // namespace causal
