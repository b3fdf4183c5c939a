#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "causal/gradients.hpp"
#include "causal/model.hpp"
#include "causal/numerics.hpp"
#include "causal/random.hpp"

namespace gradcheck {

inline std::vector<double> flatten_params(causal::CesarModel& model) {
  std::vector<double> out;
  for (causal::Matrix* p : causal::trainable_params(model)) {
    out.insert(out.end(), p->values().begin(), p->values().end());
  }
  return out;
}

inline void write_params(causal::CesarModel& model, std::span<const double> flat) {
  std::size_t offset = 0;
  for (causal::Matrix* p : causal::trainable_params(model)) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(offset),
              flat.begin() + static_cast<std::ptrdiff_t>(offset + p->size()),
              p->values().begin());
    offset += p->size();
  }
}

inline std::vector<double> flatten_grads(const causal::CesarModel& model,
                                         causal::ParamGrads& grads) {
  std::vector<double> out;
  auto model_copy = model; // param_grad_pairs wants mutable refs for layout only
  for (auto [param, grad] : causal::param_grad_pairs(model_copy, grads)) {
    (void)param;
    out.insert(out.end(), grad->values().begin(), grad->values().end());
  }
  return out;
}

/// Max relative error between analytic and finite-difference gradients.
/// Coordinates where both are tiny are compared against a floor so
/// finite-difference noise on near-zero entries does not dominate.
inline double max_relative_error(std::span<const double> analytic,
                                 std::span<const double> numeric) {
  double worst = 0.0;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    const double denom = std::max({std::fabs(analytic[k]), std::fabs(numeric[k]), 1e-6});
    worst = std::max(worst, std::fabs(analytic[k] - numeric[k]) / denom);
  }
  return worst;
}

/// Analytic-vs-central-difference comparison for one packed example.
inline double check_example(const causal::CesarModel& model, const causal::TokenSequence& seq,
                            double target, double h = 1e-5) {
  auto work = model;
  auto lg = causal::loss_and_grads_sequence(work, seq, target);
  auto analytic = flatten_grads(work, lg.grads);

  auto f = [&](std::span<const double> flat) {
    auto probe = model;
    write_params(probe, flat);
    return causal::loss_and_grads_sequence(probe, seq, target).loss;
  };
  const auto numeric = causal::finite_diff_gradient(f, flatten_params(work), h);
  return max_relative_error(analytic, numeric);
}

} // namespace gradcheck
