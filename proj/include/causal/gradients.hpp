#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "causal/matrix.hpp"
#include "causal/model.hpp"
#include "causal/numerics.hpp"
#include "causal/records.hpp"

namespace causal {

/// Gradients for every model parameter that exists. Matrices for absent
/// parameters (mixer weights without a mixer, the table of a fixed
/// embedder) stay default-empty.
struct ParamGrads {
  Matrix w_q, w_k;
  Matrix mix_wq, mix_wk, mix_wv;
  Matrix table;

  void accumulate(const ParamGrads& o) {
    auto add = [](Matrix& dst, const Matrix& src) {
      if (!src.empty()) dst += src;
    };
    add(w_q, o.w_q);
    add(w_k, o.w_k);
    add(mix_wq, o.mix_wq);
    add(mix_wk, o.mix_wk);
    add(mix_wv, o.mix_wv);
    add(table, o.table);
  }

  void scale(double s) {
    for (Matrix* m : {&w_q, &w_k, &mix_wq, &mix_wk, &mix_wv, &table}) {
      if (!m->empty()) *m *= s;
    }
  }
};

inline ParamGrads make_zero_grads(const CesarModel& model) {
  ParamGrads g;
  g.w_q = Matrix(model.dim, model.dim);
  g.w_k = Matrix(model.dim, model.dim);
  if (model.has_mixer()) {
    g.mix_wq = Matrix(model.dim, model.dim);
    g.mix_wk = Matrix(model.dim, model.dim);
    g.mix_wv = Matrix(model.dim, model.dim);
  }
  if (model.table_trainable()) {
    g.table = Matrix(model.table.rows(), model.dim);
  }
  return g;
}

/// Parameter slots in a fixed enumeration order, for the optimizer and for
/// flattening in the finite-difference check.
inline std::vector<std::pair<Matrix*, Matrix*>> param_grad_pairs(CesarModel& model,
                                                                 ParamGrads& grads) {
  std::vector<std::pair<Matrix*, Matrix*>> out;
  out.push_back({&model.w_q, &grads.w_q});
  out.push_back({&model.w_k, &grads.w_k});
  if (model.has_mixer()) {
    out.push_back({&model.mix_wq, &grads.mix_wq});
    out.push_back({&model.mix_wk, &grads.mix_wk});
    out.push_back({&model.mix_wv, &grads.mix_wv});
  }
  if (model.table_trainable()) {
    out.push_back({&model.table, &grads.table});
  }
  return out;
}

inline std::vector<Matrix*> trainable_params(CesarModel& model) {
  std::vector<Matrix*> out = {&model.w_q, &model.w_k};
  if (model.has_mixer()) {
    out.push_back(&model.mix_wq);
    out.push_back(&model.mix_wk);
    out.push_back(&model.mix_wv);
  }
  if (model.table_trainable()) {
    out.push_back(&model.table);
  }
  return out;
}

struct LossGrads {
  double loss = 0.0;
  double score = 0.0;
  ParamGrads grads;
};

namespace detail {

/// Backward through M_ij = |c_i . e_j| / (|c_i| |e_j|). Degenerate rows
/// (norm under the zero threshold) were scored 0 and get zero gradient.
inline void association_backward(const Matrix& cause, const Matrix& effect,
                                 const Matrix& upstream, Matrix& d_cause, Matrix& d_effect) {
  const std::size_t n = cause.rows();
  const std::size_t m = effect.rows();
  std::vector<double> cause_norms(n), effect_norms(m);
  for (std::size_t i = 0; i < n; ++i) cause_norms[i] = norm(cause.row(i));
  for (std::size_t j = 0; j < m; ++j) effect_norms[j] = norm(effect.row(j));
  for (std::size_t i = 0; i < n; ++i) {
    const double a = cause_norms[i];
    if (a < kZeroNormThreshold) continue;
    for (std::size_t j = 0; j < m; ++j) {
      const double b = effect_norms[j];
      if (b < kZeroNormThreshold) continue;
      const double g = upstream(i, j);
      if (g == 0.0) continue;
      const double u = dot(cause.row(i), effect.row(j));
      const double sgn = u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0);
      const double inv_ab = 1.0 / (a * b);
      const double absu = std::fabs(u);
      const double cause_coeff = absu / (a * a * a * b);
      const double effect_coeff = absu / (a * b * b * b);
      for (std::size_t k = 0; k < cause.cols(); ++k) {
        d_cause(i, k) += g * (sgn * effect(j, k) * inv_ab - cause_coeff * cause(i, k));
        d_effect(j, k) += g * (sgn * cause(i, k) * inv_ab - effect_coeff * effect(j, k));
      }
    }
  }
}

/// Backward through A = global_softmax(Z): dZ = A (*) (dA - sum(dA (*) A)).
inline Matrix global_softmax_backward(const Matrix& attn, const Matrix& upstream) {
  double weighted = 0.0;
  for (std::size_t k = 0; k < attn.values().size(); ++k) {
    weighted += upstream.values()[k] * attn.values()[k];
  }
  Matrix out = attn;
  for (std::size_t k = 0; k < out.values().size(); ++k) {
    out.values()[k] = attn.values()[k] * (upstream.values()[k] - weighted);
  }
  return out;
}

/// Row-wise softmax backward, one independent softmax per row.
inline Matrix row_softmax_backward(const Matrix& probs, const Matrix& upstream) {
  Matrix out(probs.rows(), probs.cols());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    double weighted = 0.0;
    for (std::size_t j = 0; j < probs.cols(); ++j) weighted += upstream(i, j) * probs(i, j);
    for (std::size_t j = 0; j < probs.cols(); ++j) {
      out(i, j) = probs(i, j) * (upstream(i, j) - weighted);
    }
  }
  return out;
}

inline void scatter_rows(const Matrix& src, const std::vector<std::size_t>& which,
                         Matrix& dst) {
  for (std::size_t i = 0; i < which.size(); ++i) {
    const auto s = src.row(i);
    auto d = dst.row(which[i]);
    for (std::size_t k = 0; k < s.size(); ++k) d[k] += s[k];
  }
}

} // namespace detail

/// Squared-error loss on one packed sequence, with hand-derived reverse-mode
/// gradients for every trainable parameter. The forward pass is the same
/// computation score_sequence performs.
inline LossGrads loss_and_grads_sequence(const CesarModel& model, const TokenSequence& seq,
                                         double target) {
  if (!(target >= 0.0 && target <= 1.0)) {
    throw ValidationError("loss_and_grads: target must lie in [0,1]");
  }
  const auto trace = detail::embed_trace(model, seq);
  const Matrix& rows = detail::embedded_rows(trace);
  const Matrix cause = detail::gather_rows(rows, trace.cause_rows, model.dim);
  const Matrix effect = detail::gather_rows(rows, trace.effect_rows, model.dim);

  const Matrix assoc = association_matrix(cause, effect);
  const Matrix attn = attention(model, cause, effect);

  double score = 0.0;
  for (std::size_t k = 0; k < assoc.values().size(); ++k) {
    score += assoc.values()[k] * attn.values()[k];
  }
  score = std::min(score, 1.0); // same ulp clamp as the forward scorer
  const double residual = score - target;
  LossGrads result;
  result.loss = residual * residual;
  result.score = score;
  result.grads = make_zero_grads(model);

  const double g = 2.0 * residual; // d loss / d score
  Matrix d_cause(cause.rows(), cause.cols());
  Matrix d_effect(effect.rows(), effect.cols());

  // score = sum(M (*) A): dM = g*A, dA = g*M.
  Matrix d_assoc = attn;
  d_assoc *= g;
  detail::association_backward(cause, effect, d_assoc, d_cause, d_effect);

  if (model.attention_mode == AttentionMode::learned) {
    Matrix d_attn = assoc;
    d_attn *= g;
    const Matrix d_logits = detail::global_softmax_backward(attn, d_attn);
    const Matrix q = matmul(cause, model.w_q);
    const Matrix k = matmul(effect, model.w_k);
    const Matrix d_q = matmul(d_logits, k);
    const Matrix d_k = matmul_tn(d_logits, q);
    result.grads.w_q = matmul_tn(cause, d_q);
    result.grads.w_k = matmul_tn(effect, d_k);
    d_cause += matmul_nt(d_q, model.w_q);
    d_effect += matmul_nt(d_k, model.w_k);
  }

  // Scatter segment gradients back onto the packed row list.
  Matrix d_rows(rows.rows(), model.dim);
  detail::scatter_rows(d_cause, trace.cause_rows, d_rows);
  detail::scatter_rows(d_effect, trace.effect_rows, d_rows);

  Matrix d_lookup = d_rows; // residual path (or the whole path without a mixer)
  if (model.has_mixer()) {
    const Matrix& d_mixed = d_rows;
    const Matrix d_mix_attn = matmul_nt(d_mixed, trace.mix_v);
    Matrix d_v = matmul_tn(trace.mix_attn, d_mixed);
    Matrix d_mix_logits = detail::row_softmax_backward(trace.mix_attn, d_mix_attn);
    d_mix_logits *= 1.0 / std::sqrt(static_cast<double>(model.dim));
    const Matrix d_q = matmul(d_mix_logits, trace.mix_k);
    const Matrix d_k = matmul_tn(d_mix_logits, trace.mix_q);
    result.grads.mix_wq = matmul_tn(trace.lookup, d_q);
    result.grads.mix_wk = matmul_tn(trace.lookup, d_k);
    result.grads.mix_wv = matmul_tn(trace.lookup, d_v);
    d_lookup += matmul_nt(d_q, model.mix_wq);
    d_lookup += matmul_nt(d_k, model.mix_wk);
    d_lookup += matmul_nt(d_v, model.mix_wv);
  }

  if (model.table_trainable()) {
    for (std::size_t r = 0; r < trace.row_ids.size(); ++r) {
      const auto src = d_lookup.row(r);
      auto dst = result.grads.table.row(static_cast<std::size_t>(trace.row_ids[r]));
      for (std::size_t k = 0; k < src.size(); ++k) dst[k] += src[k];
    }
  }
  return result;
}

inline LossGrads loss_and_grads(const CesarModel& model, const Vocabulary& vocab,
                                const TrainingExample& example) {
  return loss_and_grads_sequence(
      model, pack_texts(vocab, example.cause, example.addition, example.effect),
      example.target);
}

} // namespace causal
