#pragma once

// Empirical risk f(w) = (1/n) sum_j L(y^j <x^j, w>) with the Lorenz loss,
// plus full / mini-batch gradients.  Both gradient paths share one
// accumulation routine that walks samples in ascending index order, so the
// full gradient and a mini-batch over the complete index multiset agree
// bit for bit.

#include "nsopt/dataset.hpp"
#include "nsopt/lorenz.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace nsopt {

template <typename Scalar = double>
class ErmObjective {
 public:
  using Vector = DenseVector<Scalar>;

  explicit ErmObjective(const SparseDataset<Scalar>& data)
      : data_(&data),
        l_mean_(Scalar(2) * mean_row_sq_norm(data)),
        l_max_(Scalar(2) * max_row_sq_norm(data)) {}

  const SparseDataset<Scalar>& data() const { return *data_; }
  Eigen::Index n() const { return data_->n(); }
  Eigen::Index dim() const { return data_->dim(); }

  // Smoothness constants of f: mean / max of 2||x^j||^2.
  Scalar l_mean() const { return l_mean_; }
  Scalar l_max() const { return l_max_; }

  // y^j <x^j, w>
  Scalar margin(const Vector& w, Eigen::Index j) const {
    Scalar dot = 0;
    for (typename SparseDataset<Scalar>::SpMat::InnerIterator it(data_->features, j); it; ++it)
      dot += it.value() * w[it.index()];
    return data_->labels[j] * dot;
  }

  Scalar value(const Vector& w) const {
    Scalar acc = 0;
    for (Eigen::Index j = 0; j < n(); ++j) acc += lorenz_value(margin(w, j));
    return acc / Scalar(n());
  }

 private:
  const SparseDataset<Scalar>* data_;
  Scalar l_mean_, l_max_;
};

namespace detail {

// (1/|idx|) sum_{j in idx} L'(y^j <x^j, w>) y^j x^j, accumulated in the order
// the indices appear.
template <typename Scalar>
DenseVector<Scalar> accumulate_mean_gradient(const ErmObjective<Scalar>& obj,
                                             const DenseVector<Scalar>& w,
                                             const std::vector<Eigen::Index>& idx) {
  DenseVector<Scalar> acc = DenseVector<Scalar>::Zero(obj.dim());
  for (const Eigen::Index j : idx) {
    const Scalar s = lorenz_deriv(obj.margin(w, j)) * obj.data().labels[j];
    for (typename SparseDataset<Scalar>::SpMat::InnerIterator it(obj.data().features, j); it; ++it)
      acc[it.index()] += s * it.value();
  }
  acc /= Scalar(idx.size());
  return acc;
}

}  // namespace detail

template <typename Scalar>
DenseVector<Scalar> full_gradient(const ErmObjective<Scalar>& obj,
                                  const DenseVector<Scalar>& w) {
  std::vector<Eigen::Index> all(static_cast<std::size_t>(obj.n()));
  std::iota(all.begin(), all.end(), Eigen::Index(0));
  return detail::accumulate_mean_gradient(obj, w, all);
}

// Mean per-sample gradient over the given multiset of sample indices; the
// list is sorted ascending before accumulation so results do not depend on
// draw order.
template <typename Scalar>
DenseVector<Scalar> minibatch_gradient(const ErmObjective<Scalar>& obj,
                                       const DenseVector<Scalar>& w,
                                       std::vector<Eigen::Index> idx) {
  if (idx.empty()) throw std::invalid_argument("minibatch_gradient: empty index list");
  for (const Eigen::Index j : idx)
    if (j < 0 || j >= obj.n())
      throw std::invalid_argument("minibatch_gradient: sample index out of range");
  std::sort(idx.begin(), idx.end());
  return detail::accumulate_mean_gradient(obj, w, idx);
}

template <typename Scalar>
DenseVector<Scalar> sample_gradient(const ErmObjective<Scalar>& obj,
                                    const DenseVector<Scalar>& w, Eigen::Index j) {
  return minibatch_gradient(obj, w, std::vector<Eigen::Index>{j});
}

// Census variance of the single-sample stochastic gradient at w:
// (1/n) sum_j ||grad f_j(w) - grad f(w)||^2.
template <typename Scalar>
Scalar census_sigma_sq(const ErmObjective<Scalar>& obj, const DenseVector<Scalar>& w) {
  const DenseVector<Scalar> mean = full_gradient(obj, w);
  Scalar acc = 0;
  for (Eigen::Index j = 0; j < obj.n(); ++j)
    acc += (sample_gradient(obj, w, j) - mean).squaredNorm();
  return acc / Scalar(obj.n());
}

}  // namespace nsopt
