#pragma once

// Anchored majorant machinery around the Moreau envelope of the regularizer.
//
// With e_{lg}(w) = min_x ||w - x||^2/(2l) + g(x) attained at zeta, the
// smoothed objective f + e_{lg} admits, at an anchor w^k, the majorant
//   E(w) = f(w) + ||w||^2/(2l) - D - <zeta, w - w^k>/l,
//   D    = <w^k, zeta>/l - ||zeta||^2/(2l) - g(zeta),
// which touches f + e_{lg} at w^k, dominates it everywhere, and is
// (L + 1/l)-smooth.

#include "nsopt/erm.hpp"
#include "nsopt/log_sum.hpp"

#include <utility>

namespace nsopt {

template <typename Scalar = double>
struct EnvelopeAnchor {
  DenseVector<Scalar> anchor;      // w^k
  DenseVector<Scalar> prox_point;  // zeta = prox_{lambda g}(w^k)
  Scalar lambda;
  Scalar g_at_prox;                // g(zeta)
};

template <typename Scalar>
EnvelopeAnchor<Scalar> make_envelope_anchor(const LogSumRegularizer<Scalar>& g,
                                            Scalar lambda,
                                            const DenseVector<Scalar>& w) {
  ProxResult<Scalar> pr = prox_vector(g, lambda, w);
  const Scalar g_at = g.value(pr.point);
  return {w, std::move(pr.point), lambda, g_at};
}

template <typename Scalar>
Scalar envelope_value(const EnvelopeAnchor<Scalar>& a, const ErmObjective<Scalar>& obj,
                      const DenseVector<Scalar>& w) {
  const Scalar l = a.lambda;
  const Scalar d_support = a.anchor.dot(a.prox_point) / l -
                           a.prox_point.squaredNorm() / (2 * l) - a.g_at_prox;
  return obj.value(w) + w.squaredNorm() / (2 * l) - d_support -
         a.prox_point.dot(w - a.anchor) / l;
}

template <typename Scalar>
DenseVector<Scalar> envelope_gradient(const EnvelopeAnchor<Scalar>& a,
                                      const ErmObjective<Scalar>& obj,
                                      const DenseVector<Scalar>& w) {
  return full_gradient(obj, w) + (w - a.prox_point) / a.lambda;
}

// Smoothed composite objective f(w) + e_{lambda g}(w).
template <typename Scalar>
Scalar aux_objective(const ErmObjective<Scalar>& obj, const LogSumRegularizer<Scalar>& g,
                     Scalar lambda, const DenseVector<Scalar>& w) {
  return obj.value(w) + prox_vector(g, lambda, w).envelope_value;
}

// ||grad E(w^k)|| + 2 l_g lambda L bounds the distance from zero to the
// limiting subdifferential of f + g at the prox point; L is the smoothness
// constant of f in play (mean- or max-based).
template <typename Scalar>
Scalar stationarity_bound(const EnvelopeAnchor<Scalar>& a, const ErmObjective<Scalar>& obj,
                          const LogSumRegularizer<Scalar>& g, Scalar L) {
  return envelope_gradient(a, obj, a.anchor).norm() + 2 * g.lipschitz() * a.lambda * L;
}

}  // namespace nsopt
