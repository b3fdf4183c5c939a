#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "causal/gradients.hpp"
#include "causal/model.hpp"
#include "causal/random.hpp"
#include "causal/records.hpp"

namespace causal {

/// Optimization settings. learning_rate is the reference fine-tuning rate;
/// desk-scale embedders train from scratch, so the effective step size is
/// learning_rate * lr_scale (see README for the scaling rationale). The
/// schedule decays the effective rate linearly to zero over all steps.
struct TrainConfig {
  int epochs = 4;
  double learning_rate = 1e-5;
  double lr_scale = 1000.0;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 16;
  std::uint64_t seed = 42;

  double effective_lr() const { return learning_rate * lr_scale; }

  void validate() const {
    if (epochs < 1) throw ValidationError("TrainConfig: epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw ValidationError("TrainConfig: learning_rate must be > 0");
    if (!(lr_scale > 0.0)) throw ValidationError("TrainConfig: lr_scale must be > 0");
    if (batch_size == 0) throw ValidationError("TrainConfig: batch_size must be >= 1");
    if (weight_decay < 0.0) throw ValidationError("TrainConfig: weight_decay must be >= 0");
  }
};

/// AdamW with decoupled weight decay; moment state parallels the trainable
/// parameter list.
class AdamW {
public:
  AdamW(CesarModel& model, const TrainConfig& cfg) : cfg_(cfg) {
    for (Matrix* p : trainable_params(model)) {
      m_.emplace_back(p->rows(), p->cols());
      v_.emplace_back(p->rows(), p->cols());
    }
  }

  void step(CesarModel& model, ParamGrads& grads, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    auto pairs = param_grad_pairs(model, grads);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      auto& param = pairs[p].first->values();
      const auto& grad = pairs[p].second->values();
      auto& m = m_[p].values();
      auto& v = v_[p].values();
      for (std::size_t k = 0; k < param.size(); ++k) {
        const double g = grad[k];
        m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g;
        v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g * g;
        const double m_hat = m[k] / bc1;
        const double v_hat = v[k] / bc2;
        param[k] -= lr * (m_hat / (std::sqrt(v_hat) + cfg_.epsilon) +
                          cfg_.weight_decay * param[k]);
      }
    }
  }

private:
  TrainConfig cfg_;
  std::vector<Matrix> m_, v_;
  std::uint64_t t_ = 0;
};

struct TrainResult {
  std::vector<double> epoch_losses; // mean per-example loss, one entry per epoch
};

/// Mini-batch MSE training. Examples are reshuffled each epoch from the run
/// seed; the batch gradient is the mean of per-example gradients. The whole
/// procedure is single-threaded and bitwise reproducible for a fixed seed.
inline TrainResult train(CesarModel& model, const Vocabulary& vocab,
                         const std::vector<TrainingExample>& dataset,
                         const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.empty()) throw ValidationError("train: dataset is empty");
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (!(dataset[i].target >= 0.0 && dataset[i].target <= 1.0)) {
      throw ValidationError("train: target outside [0,1] at example " + std::to_string(i));
    }
  }

  const std::size_t n = dataset.size();
  const std::size_t batches_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total_steps = batches_per_epoch * static_cast<std::size_t>(cfg.epochs);

  // Packing is deterministic, so sequences can be prepared once.
  std::vector<TokenSequence> packed;
  packed.reserve(n);
  for (const auto& ex : dataset) {
    packed.push_back(pack_texts(vocab, ex.cause, ex.addition, ex.effect));
  }

  Rng rng(cfg.seed);
  AdamW optimizer(model, cfg);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  std::size_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(start + cfg.batch_size, n);
      ParamGrads batch_grads = make_zero_grads(model);
      double batch_loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t idx = order[b];
        LossGrads lg = loss_and_grads_sequence(model, packed[idx], dataset[idx].target);
        if (!std::isfinite(lg.loss)) {
          throw Error("train: non-finite loss at step " + std::to_string(step) +
                      ", example " + std::to_string(idx));
        }
        batch_grads.accumulate(lg.grads);
        batch_loss += lg.loss;
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      batch_grads.scale(inv);
      loss_sum += batch_loss;
      const double lr = cfg.effective_lr() *
                        static_cast<double>(total_steps - step) /
                        static_cast<double>(total_steps);
      optimizer.step(model, batch_grads, lr);
      ++step;
    }
    result.epoch_losses.push_back(loss_sum / static_cast<double>(n));
  }
  return result;
}

} // namespace causal
