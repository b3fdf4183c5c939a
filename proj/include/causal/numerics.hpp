#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "causal/error.hpp"
#include "causal/matrix.hpp"

namespace causal {

/// Norm below which a vector is treated as degenerate: it carries no
/// association signal and its cosine against anything is defined as 0.
inline constexpr double kZeroNormThreshold = 1e-12;

/// Softmax over every entry of the matrix at once, so the whole output sums
/// to 1 (not per row). The global maximum is subtracted before
/// exponentiation to avoid overflow.
inline Matrix global_softmax(const Matrix& logits) {
  if (logits.empty()) {
    throw ValidationError("global_softmax: empty matrix");
  }
  if (!logits.all_finite()) {
    throw ValidationError("global_softmax: non-finite logits");
  }
  const double mx = *std::max_element(logits.values().begin(), logits.values().end());
  Matrix out = logits;
  double total = 0.0;
  for (double& v : out.values()) {
    v = std::exp(v - mx);
    total += v;
  }
  for (double& v : out.values()) v /= total;
  return out;
}

inline double dot(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) s += u[k] * v[k];
  return s;
}

inline double norm(std::span<const double> u) {
  return std::sqrt(dot(u, u));
}

/// |u.v| / (|u||v|), in [0,1]. Degenerate (near-zero-norm) vectors score 0.
inline double abs_cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw ValidationError("abs_cosine: dimension mismatch (" +
                          std::to_string(u.size()) + " vs " + std::to_string(v.size()) + ")");
  }
  if (u.empty()) {
    throw ValidationError("abs_cosine: empty vectors");
  }
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu < kZeroNormThreshold || nv < kZeroNormThreshold) return 0.0;
  const double c = std::fabs(dot(u, v)) / (nu * nv);
  return std::min(c, 1.0);
}

/// Central-difference gradient estimate, one coordinate at a time:
/// (f(x + h e_k) - f(x - h e_k)) / 2h.
inline std::vector<double> finite_diff_gradient(
    const std::function<double(std::span<const double>)>& f,
    std::vector<double> x, double h) {
  if (h <= 0.0 || !std::isfinite(h)) {
    throw ValidationError("finite_diff_gradient: step must be positive");
  }
  std::vector<double> grad(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double saved = x[k];
    x[k] = saved + h;
    const double fp = f(x);
    x[k] = saved - h;
    const double fm = f(x);
    x[k] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw Error("finite_diff_gradient: non-finite evaluation at coordinate " +
                  std::to_string(k));
    }
    grad[k] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

/// Score axis plus a non-negative density over it.
struct DensityCurve {
  std::vector<double> grid;
  std::vector<double> density;
};

/// Gaussian-kernel density estimate on the given grid:
/// density(x) = 1/(N h sqrt(2 pi)) * sum_i exp(-(x - s_i)^2 / (2 h^2)).
inline DensityCurve kde_density(std::span<const double> samples, double bandwidth,
                                std::vector<double> grid) {
  if (samples.empty()) {
    throw ValidationError("kde_density: no samples");
  }
  if (bandwidth <= 0.0 || !std::isfinite(bandwidth)) {
    throw ValidationError("kde_density: bandwidth must be positive");
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) {
      throw ValidationError("kde_density: grid must be strictly ascending");
    }
  }
  const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  const double scale = 1.0 / (static_cast<double>(samples.size()) * bandwidth *
                              std::sqrt(2.0 * 3.14159265358979323846));
  DensityCurve curve;
  curve.grid = std::move(grid);
  curve.density.resize(curve.grid.size());
  for (std::size_t g = 0; g < curve.grid.size(); ++g) {
    double s = 0.0;
    for (double sample : samples) {
      const double d = curve.grid[g] - sample;
      s += std::exp(-d * d * inv2h2);
    }
    curve.density[g] = scale * s;
  }
  return curve;
}

/// Silverman's rule of thumb: 1.06 * sigma * N^(-1/5). Sample standard
/// deviation; a small positive fallback keeps degenerate (near-constant)
/// samples usable.
inline double silverman_bandwidth(std::span<const double> samples) {
  if (samples.empty()) {
    throw ValidationError("silverman_bandwidth: no samples");
  }
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= n;
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  const double sigma = samples.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  const double h = 1.06 * sigma * std::pow(n, -0.2);
  return h > kZeroNormThreshold ? h : 0.05;
}

/// Trapezoidal integral of a density curve.
inline double trapezoid_integral(const DensityCurve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.grid.size(); ++i) {
    area += 0.5 * (curve.density[i] + curve.density[i - 1]) *
            (curve.grid[i] - curve.grid[i - 1]);
  }
  return area;
}

/// Evenly spaced grid of `points` values covering [lo, hi].
inline std::vector<double> linspace(double lo, double hi, std::size_t points) {
  if (points < 2 || !(hi > lo)) {
    throw ValidationError("linspace: need at least 2 points and hi > lo");
  }
  std::vector<double> grid(points);
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) grid[i] = lo + step * static_cast<double>(i);
  grid.back() = hi;
  return grid;
}

} // namespace causal
