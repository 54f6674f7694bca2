#pragma once

// Log-sum penalty g(w) = kappa * sum_i log(1 + |w_i|/nu): a separable,
// non-convex, (kappa/nu)*sqrt(d)-Lipschitz regularizer with an exact scalar
// proximal map, plus a brute-force grid oracle for checking it.

#include "nsopt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace nsopt {

template <typename Scalar = double>
struct LogSumRegularizer {
  Scalar kappa;
  Scalar nu;
  Eigen::Index dim;

  LogSumRegularizer(Scalar kappa_, Scalar nu_, Eigen::Index dim_)
      : kappa(kappa_), nu(nu_), dim(dim_) {
    if (!(kappa >= 0)) throw std::invalid_argument("log-sum: kappa must be >= 0");
    if (!(nu > 0)) throw std::invalid_argument("log-sum: nu must be > 0");
    if (dim < 1) throw std::invalid_argument("log-sum: dim must be >= 1");
  }

  Scalar value_scalar(Scalar wi) const { return kappa * std::log1p(std::abs(wi) / nu); }

  Scalar value(const DenseVector<Scalar>& w) const {
    Scalar acc = 0;
    for (Eigen::Index i = 0; i < w.size(); ++i) acc += value_scalar(w[i]);
    return acc;
  }

  // Global Lipschitz constant of g on R^d.
  Scalar lipschitz() const { return kappa / nu * std::sqrt(Scalar(dim)); }
};

// Exact scalar prox: argmin_x (x - wi)^2 / (2 lambda) + kappa log(1 + |x|/nu).
// By symmetry the minimizer has the sign of wi and magnitude in [0, |wi|];
// interior candidates are the positive roots of (x - a)(nu + x) + lambda kappa
// with a = |wi|.  Objective ties resolve to the smaller magnitude.
template <typename Scalar>
Scalar prox_scalar(const LogSumRegularizer<Scalar>& g, Scalar lambda, Scalar wi) {
  if (!(lambda > 0)) throw std::invalid_argument("prox_scalar: lambda must be > 0");
  if (g.kappa == 0) return wi;
  const Scalar a = std::abs(wi);
  if (a == 0) return 0;
  Scalar best_x = 0;
  Scalar best_phi = a * a / (2 * lambda);
  const Scalar disc = (a + g.nu) * (a + g.nu) - 4 * lambda * g.kappa;
  if (disc >= 0) {
    const Scalar root = std::sqrt(disc);
    const Scalar cand[2] = {((a - g.nu) - root) / 2, ((a - g.nu) + root) / 2};
    for (Scalar x : cand) {
      if (!(x > 0)) continue;
      x = std::min(x, a);
      const Scalar phi = (x - a) * (x - a) / (2 * lambda) + g.value_scalar(x);
      if (phi < best_phi) {
        best_phi = phi;
        best_x = x;
      }
    }
  }
  return wi < 0 ? -best_x : best_x;
}

template <typename Scalar = double>
struct ProxResult {
  DenseVector<Scalar> point;  // prox_{lambda g}(w)
  Scalar envelope_value;      // e_{lambda g}(w) = ||w - point||^2/(2 lambda) + g(point)
};

template <typename Scalar>
ProxResult<Scalar> prox_vector(const LogSumRegularizer<Scalar>& g, Scalar lambda,
                               const DenseVector<Scalar>& w) {
  ProxResult<Scalar> r;
  r.point.resize(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) r.point[i] = prox_scalar(g, lambda, w[i]);
  r.envelope_value = (w - r.point).squaredNorm() / (2 * lambda) + g.value(r.point);
  return r;
}

// Brute-force argmin of the scalar prox objective over the grid
// {0, +-grid_step, ...} intersected with [-|wi|, |wi|].  The objective has at
// most three monotone pieces on each side of zero, so for large grids a
// coarse scan plus fine rescans around every coarse local minimum (and the
// endpoints) recovers the same argmin as the full fine scan.  Evaluates the
// objective directly; shares nothing with prox_scalar's root formula.
template <typename Scalar>
Scalar prox_oracle_scalar(const LogSumRegularizer<Scalar>& g, Scalar lambda, Scalar wi,
                          Scalar grid_step) {
  if (!(lambda > 0)) throw std::invalid_argument("prox_oracle_scalar: lambda must be > 0");
  if (!(grid_step > 0)) throw std::invalid_argument("prox_oracle_scalar: grid_step must be > 0");
  const auto phi = [&](Scalar x) {
    return (x - wi) * (x - wi) / (2 * lambda) + g.value_scalar(x);
  };
  const std::int64_t kmax =
      static_cast<std::int64_t>(std::floor(std::abs(wi) / grid_step));
  std::int64_t best_k = 0;
  Scalar best_phi = phi(Scalar(0));
  const auto consider = [&](std::int64_t k) {
    const Scalar p = phi(Scalar(k) * grid_step);
    if (p < best_phi || (p == best_phi && std::llabs(k) < std::llabs(best_k))) {
      best_phi = p;
      best_k = k;
    }
  };

  if (kmax <= 200000) {
    for (std::int64_t k = -kmax; k <= kmax; ++k) consider(k);
    return Scalar(best_k) * grid_step;
  }

  // Coarse pass at a stride of whole grid steps.
  const std::int64_t stride = kmax / 20000 + 1;
  std::vector<std::int64_t> ks;
  std::vector<Scalar> vals;
  for (std::int64_t k = -kmax; k <= kmax; k += stride) {
    ks.push_back(k);
    vals.push_back(phi(Scalar(k) * grid_step));
  }
  if (ks.back() != kmax) {
    ks.push_back(kmax);
    vals.push_back(phi(Scalar(kmax) * grid_step));
  }
  const auto rescan = [&](std::int64_t center) {
    const std::int64_t lo = std::max(-kmax, center - stride);
    const std::int64_t hi = std::min(kmax, center + stride);
    for (std::int64_t k = lo; k <= hi; ++k) consider(k);
  };
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const bool left_ok = (i == 0) || vals[i] <= vals[i - 1];
    const bool right_ok = (i + 1 == ks.size()) || vals[i] <= vals[i + 1];
    if (left_ok && right_ok) rescan(ks[i]);
  }
  rescan(0);
  return Scalar(best_k) * grid_step;
}

}  // namespace nsopt
