#pragma once

// Lorenz classification loss, a smooth non-convex margin loss:
//   L(v) = 0 for v > 1, log(1 + (v-1)^2) otherwise.
// Stateless scalar family: value, derivative, difference-of-convex split.

#include <cmath>
#include <utility>

namespace nsopt {

template <typename Scalar>
Scalar lorenz_value(Scalar v) {
  if (v > Scalar(1)) return Scalar(0);
  const Scalar u = v - Scalar(1);
  return std::log1p(u * u);
}

// Derivative; identically zero on [1, inf), magnitude never above 1.
template <typename Scalar>
Scalar lorenz_deriv(Scalar v) {
  if (v >= Scalar(1)) return Scalar(0);
  const Scalar u = v - Scalar(1);
  return Scalar(2) * u / (Scalar(1) + u * u);
}

// Convex pair (c1, c2) with c1 - c2 = lorenz_value; the quadratic shift
// v^2/8 dominates the loss curvature, which is bounded below by -1/4.
template <typename Scalar>
std::pair<Scalar, Scalar> lorenz_dc_parts(Scalar v) {
  const Scalar q = v * v / Scalar(8);
  return {q + lorenz_value(v), q};
}

}  // namespace nsopt
