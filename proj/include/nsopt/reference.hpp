#pragma once

// Implementation-independent reference computations backing the verification
// suites: central finite differences, dense 2-d grid minimization, and fixed
// deterministic synthetic instances.  Everything here works from function
// values only, so it cannot inherit a bug from the gradient or prox formulas
// it is used to check.

#include "nsopt/dataset.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace nsopt {

// Central difference gradient of an arbitrary scalar field.
template <typename Scalar, typename F>
DenseVector<Scalar> central_difference(const F& f, const DenseVector<Scalar>& w,
                                       Scalar step) {
  DenseVector<Scalar> grad(w.size());
  DenseVector<Scalar> x = w;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const Scalar wi = w[i];
    x[i] = wi + step;
    const Scalar up = f(x);
    x[i] = wi - step;
    const Scalar dn = f(x);
    x[i] = wi;
    grad[i] = (up - dn) / (2 * step);
  }
  return grad;
}

template <typename Scalar = double>
struct GridMin2d {
  DenseVector<Scalar> point;
  Scalar value;
  Scalar boundary_value;  // smallest value seen on the box edge
};

// Dense scan of f over the square [lo, hi]^2 with (steps+1)^2 points.
template <typename Scalar, typename F>
GridMin2d<Scalar> grid_min_2d(const F& f, Scalar lo, Scalar hi, Eigen::Index steps) {
  const Scalar hstep = (hi - lo) / Scalar(steps);
  GridMin2d<Scalar> best;
  best.point = DenseVector<Scalar>::Zero(2);
  best.value = std::numeric_limits<Scalar>::infinity();
  best.boundary_value = std::numeric_limits<Scalar>::infinity();
  DenseVector<Scalar> x(2);
  for (Eigen::Index i = 0; i <= steps; ++i) {
    x[0] = lo + Scalar(i) * hstep;
    for (Eigen::Index j = 0; j <= steps; ++j) {
      x[1] = lo + Scalar(j) * hstep;
      const Scalar v = f(x);
      if (v < best.value) {
        best.value = v;
        best.point = x;
      }
      if ((i == 0 || i == steps || j == 0 || j == steps) && v < best.boundary_value)
        best.boundary_value = v;
    }
  }
  return best;
}

// splitmix64; the deterministic base generator for synthetic data.
class MixRng {
 public:
  explicit MixRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  double uniform() { return double(next() >> 11) * 0x1.0p-53; }  // [0, 1)

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

  double normal() {
    const double u1 = std::max(uniform(), 1e-300);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::uint64_t state_;
};

// Dense-ish random instance with margins concentrated near zero; suits
// finite-difference and majorization sweeps.
template <typename Scalar = double>
SparseDataset<Scalar> synthetic_dense_instance(Eigen::Index n, Eigen::Index d,
                                               std::uint64_t seed) {
  MixRng rng(seed);
  std::vector<std::vector<std::pair<Eigen::Index, Scalar>>> rows(
      static_cast<std::size_t>(n));
  std::vector<Scalar> labels(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      if (rng.uniform() < 0.35) continue;  // keep some sparsity
      rows[static_cast<std::size_t>(j)].emplace_back(
          i, Scalar(rng.uniform(-1.0, 1.0)) * Scalar(0.7));
    }
    labels[static_cast<std::size_t>(j)] = rng.uniform() < 0.5 ? Scalar(-1) : Scalar(1);
  }
  return make_dataset<Scalar>(d, rows, labels);
}

// Planted linear classifier with unit-scale rows and a small fraction of
// flipped labels.
template <typename Scalar = double>
SparseDataset<Scalar> synthetic_separable_instance(Eigen::Index n, Eigen::Index d,
                                                   std::uint64_t seed,
                                                   double flip_fraction = 0.05) {
  MixRng rng(seed);
  DenseVector<Scalar> planted(d);
  for (Eigen::Index i = 0; i < d; ++i) planted[i] = Scalar(rng.normal());
  planted /= planted.norm();
  std::vector<std::vector<std::pair<Eigen::Index, Scalar>>> rows(
      static_cast<std::size_t>(n));
  std::vector<Scalar> labels(static_cast<std::size_t>(n));
  // Each sample sits at a signed distance in [2.4, 3.6] along the planted
  // direction plus isotropic noise small enough to keep the clean labels
  // linearly separable; flipped labels then supply the only inseparability.
  const Scalar noise = Scalar(0.3) / std::sqrt(Scalar(d));
  for (Eigen::Index j = 0; j < n; ++j) {
    const Scalar r = Scalar(rng.uniform(2.4, 3.6));
    const Scalar side = rng.uniform() < 0.5 ? Scalar(-1) : Scalar(1);
    Scalar dot = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const Scalar v = side * r * planted[i] + Scalar(rng.normal()) * noise;
      rows[static_cast<std::size_t>(j)].emplace_back(i, v);
      dot += v * planted[i];
    }
    Scalar y = dot >= 0 ? Scalar(1) : Scalar(-1);
    if (rng.uniform() < flip_fraction) y = -y;
    labels[static_cast<std::size_t>(j)] = y;
  }
  return make_dataset<Scalar>(d, rows, labels);
}

// Fixed four-sample planar instance used by the convergence-bound suite.
template <typename Scalar = double>
SparseDataset<Scalar> tiny_four_sample_instance() {
  std::vector<std::vector<std::pair<Eigen::Index, Scalar>>> rows = {
      {{0, Scalar(0.9)}, {1, Scalar(0.1)}},
      {{0, Scalar(-0.3)}, {1, Scalar(0.8)}},
      {{0, Scalar(0.5)}, {1, Scalar(-0.6)}},
      {{0, Scalar(-0.8)}, {1, Scalar(-0.4)}}};
  std::vector<Scalar> labels = {Scalar(1), Scalar(-1), Scalar(1), Scalar(-1)};
  return make_dataset<Scalar>(2, rows, labels);
}

// Fixed five-sample planar instance used by the variance suite.
template <typename Scalar = double>
SparseDataset<Scalar> tiny_five_sample_instance() {
  std::vector<std::vector<std::pair<Eigen::Index, Scalar>>> rows = {
      {{0, Scalar(1.0)}, {1, Scalar(0.2)}},
      {{0, Scalar(-0.4)}, {1, Scalar(0.9)}},
      {{1, Scalar(-1.1)}},
      {{0, Scalar(0.6)}, {1, Scalar(0.5)}},
      {{0, Scalar(-0.7)}, {1, Scalar(-0.3)}}};
  std::vector<Scalar> labels = {Scalar(1), Scalar(-1), Scalar(1), Scalar(-1), Scalar(1)};
  return make_dataset<Scalar>(2, rows, labels);
}

}  // namespace nsopt
