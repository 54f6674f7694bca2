#pragma once

// Variance-reduced stochastic gradient descent on the anchored envelope
// majorant (finite-sum setting).  Outer iterations take a full-gradient
// snapshot; inner iterations combine a mini-batch control variate with the
// prox pull toward the current anchor:
//
//   m = ceil(n^alpha), b = m^2, S = ceil(N/m), lambda = (S m)^-theta,
//   gamma = 1/(6 L_E),  L_E = L + 1/lambda
//   V = (1/b) sum_{j in I} grad f_j(w) + [G - (1/b) sum_{j in I} grad f_j(w_snap)]
//       + (w - zeta)/lambda
//
// V is grouped as sampled-mean + (snapshot - sampled-snapshot-mean) so that
// when I enumerates every sample the correction cancels exactly and V equals
// the envelope gradient bit for bit.
//
// Output: either zeta(w^R_T) with R uniform on {1..S} (the loop runs R outer
// iterations) and T uniform on {1..m}, or the last iterate after S outer
// iterations with the closing prox omitted.

#include "nsopt/envelope.hpp"
#include "nsopt/erm.hpp"
#include "nsopt/log_sum.hpp"
#include "nsopt/mbsga.hpp"
#include "nsopt/rng.hpp"
#include "nsopt/trace.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace nsopt {

template <typename Scalar = double>
struct VrsgaConfig {
  // inputs
  std::int64_t N = 0;  // nominal inner-iteration budget
  Scalar alpha = Scalar(1) / 3;
  Scalar theta = Scalar(1) / 3;
  std::uint64_t seed = 1;
  OutputRule output_rule = OutputRule::random_R;
  // derived
  std::int64_t m = 0;  // inner iterations per outer
  std::int64_t b = 0;  // mini-batch size, m^2
  std::int64_t S = 0;  // outer iterations, ceil(N/m)
  Scalar lambda = 0;
  Scalar l_smooth = 0;
  Scalar l_envelope = 0;
  Scalar gamma = 0;
};

template <typename Scalar>
VrsgaConfig<Scalar> vrsga_derive_params(std::int64_t N, Scalar alpha, Scalar theta,
                                        Eigen::Index n, Scalar L, std::uint64_t seed = 1,
                                        OutputRule rule = OutputRule::random_R) {
  if (N < 1) throw std::invalid_argument("vrsga: N must be >= 1");
  if (n < 1) throw std::invalid_argument("vrsga: n must be >= 1");
  if (!(alpha > 0 && alpha < 1) || !(theta > 0 && theta < 1))
    throw std::invalid_argument("vrsga: alpha and theta must lie in (0, 1)");
  if (!(L > 0)) throw std::invalid_argument("vrsga: L must be > 0");
  VrsgaConfig<Scalar> cfg;
  cfg.N = N;
  cfg.alpha = alpha;
  cfg.theta = theta;
  cfg.seed = seed;
  cfg.output_rule = rule;
  cfg.m = ceil_pow(double(n), double(alpha));
  cfg.b = cfg.m * cfg.m;
  cfg.S = (N + cfg.m - 1) / cfg.m;
  cfg.lambda = std::pow(Scalar(cfg.S) * Scalar(cfg.m), -theta);
  cfg.l_smooth = L;
  cfg.l_envelope = L + 1 / cfg.lambda;
  cfg.gamma = 1 / (6 * cfg.l_envelope);
  return cfg;
}

// Test probe: snapshots every inner iterate, its step direction, and its prox
// point, in inner-iteration order.
template <typename Scalar = double>
struct VrsgaProbe {
  std::vector<DenseVector<Scalar>> iterates;
  std::vector<DenseVector<Scalar>> directions;
  std::vector<DenseVector<Scalar>> prox_points;
};

template <typename Scalar = double>
struct VrsgaOptions {
  DenseVector<Scalar> start;      // empty -> zero vector
  std::int64_t record_every = 1;  // over global inner-iteration index; 0 -> closing only
  bool record_grad_norm = false;
  bool exhaustive_inner = false;  // test hook: I enumerates all n samples
  VrsgaProbe<Scalar>* probe = nullptr;
};

template <typename Scalar>
RunTrace<Scalar> vrsga_run(const ErmObjective<Scalar>& obj,
                           const LogSumRegularizer<Scalar>& g,
                           const VrsgaConfig<Scalar>& cfg,
                           const VrsgaOptions<Scalar>& opts = {}) {
  if (cfg.m < 1 || cfg.S < 1 || !(cfg.lambda > 0) || !(cfg.gamma > 0))
    throw std::invalid_argument("vrsga: config not derived (use vrsga_derive_params)");
  const auto t0 = std::chrono::steady_clock::now();
  DenseVector<Scalar> snapshot = opts.start.size() > 0
                                     ? opts.start
                                     : DenseVector<Scalar>::Zero(obj.dim()).eval();
  if (snapshot.size() != obj.dim())
    throw std::invalid_argument("vrsga: start has wrong dimension");
  SampleRng rng(cfg.seed);
  const std::int64_t K = cfg.output_rule == OutputRule::random_R
                             ? rng.uniform_1_to(cfg.S)
                             : cfg.S;
  const auto h_at = [&](const DenseVector<Scalar>& x) {
    return obj.value(x) + g.value(x);
  };
  const Scalar h0 = h_at(snapshot);
  if (!std::isfinite(double(h0))) throw DivergenceError(0, "objective not finite at start");

  RunTrace<Scalar> trace;
  const auto record = [&](std::int64_t iter, const DenseVector<Scalar>& x,
                          double grad_e_norm) {
    const Scalar h = h_at(x);
    if (!std::isfinite(double(h)) || h > Scalar(1e6) * h0)
      throw DivergenceError(iter, "objective diverged");
    trace.records.push_back({iter, detail::seconds_since(t0), double(h), grad_e_norm,
                             trace.grad_calls, trace.prox_calls});
  };

  std::vector<Eigen::Index> batch(static_cast<std::size_t>(
      opts.exhaustive_inner ? obj.n() : cfg.b));
  std::vector<DenseVector<Scalar>> last_outer_iterates;  // w^K_t for the output draw
  const bool keep_inner = cfg.output_rule == OutputRule::random_R;
  std::int64_t giter = 0;
  DenseVector<Scalar> w;
  for (std::int64_t k = 1; k <= K; ++k) {
    const DenseVector<Scalar> snap_grad = full_gradient(obj, snapshot);
    trace.grad_calls += obj.n();
    w = snapshot;
    if (keep_inner && k == K) {
      last_outer_iterates.clear();
      last_outer_iterates.reserve(static_cast<std::size_t>(cfg.m));
    }
    for (std::int64_t t = 1; t <= cfg.m; ++t) {
      ++giter;
      if (keep_inner && k == K) last_outer_iterates.push_back(w);
      const ProxResult<Scalar> pr = prox_vector(g, cfg.lambda, w);
      trace.prox_calls += 1;
      if (opts.record_every > 0 && (giter - 1) % opts.record_every == 0) {
        double ge = std::nan("");
        if (opts.record_grad_norm)
          ge = double((full_gradient(obj, w) + (w - pr.point) / cfg.lambda).norm());
        record(giter, w, ge);
      }
      if (opts.exhaustive_inner) {
        for (std::size_t j = 0; j < batch.size(); ++j) batch[j] = Eigen::Index(j);
      } else {
        for (auto& j : batch) j = rng.uniform_index(obj.n());
      }
      trace.grad_calls += static_cast<std::int64_t>(batch.size());
      const DenseVector<Scalar> sampled = minibatch_gradient(obj, w, batch);
      const DenseVector<Scalar> sampled_snap = minibatch_gradient(obj, snapshot, batch);
      const DenseVector<Scalar> dir =
          sampled + (snap_grad - sampled_snap) + (w - pr.point) / cfg.lambda;
      if (opts.probe) {
        opts.probe->iterates.push_back(w);
        opts.probe->directions.push_back(dir);
        opts.probe->prox_points.push_back(pr.point);
      }
      w -= cfg.gamma * dir;
      if (!w.allFinite()) throw DivergenceError(giter, "iterate not finite");
    }
    snapshot = w;
  }

  trace.final_iterate = snapshot;
  if (cfg.output_rule == OutputRule::random_R) {
    const std::int64_t T = rng.uniform_1_to(cfg.m);
    trace.output_iterate =
        prox_vector(g, cfg.lambda, last_outer_iterates[static_cast<std::size_t>(T - 1)])
            .point;
    trace.prox_calls += 1;
  } else {
    trace.output_iterate = snapshot;
  }
  record(giter + 1, snapshot, std::nan(""));
  return trace;
}

}  // namespace nsopt
