#pragma once

// Mini-batch stochastic gradient descent on the anchored envelope majorant:
// each iteration re-anchors the majorant at the current iterate via one prox
// evaluation, then takes a step along a mini-batch estimate of its gradient.
//
//   M = ceil(N^alpha), lambda = N^-theta, L_E = L + 1/lambda,
//   gamma = min(1/L_E, 1/(sigma sqrt(N)))        (sigma = 0 -> 1/L_E)
//   w_{k+1} = w_k - gamma [ (1/M) sum_j grad F(w_k, xi_j) + (w_k - zeta_k)/lambda ]
//
// Output: either zeta(w_R) for R drawn uniformly from {1..N} (R - 1 steps are
// executed), or the last iterate after N steps with the closing prox omitted.

#include "nsopt/envelope.hpp"
#include "nsopt/erm.hpp"
#include "nsopt/log_sum.hpp"
#include "nsopt/rng.hpp"
#include "nsopt/trace.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace nsopt {

enum class OutputRule { random_R, last_iterate };

// ceil(base^expo), nudged so integer powers survive pow() rounding.
inline std::int64_t ceil_pow(double base, double expo) {
  const double x = std::pow(base, expo);
  const double r = std::nearbyint(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(r)))
    return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::ceil(x));
}

template <typename Scalar = double>
struct MbsgaConfig {
  // inputs
  std::int64_t N = 0;
  Scalar alpha = Scalar(0.25);
  Scalar theta = Scalar(0.25);
  Scalar sigma = 0;  // stochastic-gradient noise scale; 0 selects gamma = 1/L_E
  std::uint64_t seed = 1;
  OutputRule output_rule = OutputRule::random_R;
  // derived
  std::int64_t M = 0;
  Scalar lambda = 0;
  Scalar l_smooth = 0;    // L used for L_E
  Scalar l_envelope = 0;  // L + 1/lambda
  Scalar gamma = 0;
};

template <typename Scalar>
MbsgaConfig<Scalar> mbsga_derive_params(std::int64_t N, Scalar alpha, Scalar theta,
                                        Scalar L, Scalar sigma, std::uint64_t seed = 1,
                                        OutputRule rule = OutputRule::random_R) {
  if (N < 1) throw std::invalid_argument("mbsga: N must be >= 1");
  if (!(alpha > 0 && alpha < 1) || !(theta > 0 && theta < 1))
    throw std::invalid_argument("mbsga: alpha and theta must lie in (0, 1)");
  if (!(L > 0)) throw std::invalid_argument("mbsga: L must be > 0");
  if (!(sigma >= 0)) throw std::invalid_argument("mbsga: sigma must be >= 0");
  MbsgaConfig<Scalar> cfg;
  cfg.N = N;
  cfg.alpha = alpha;
  cfg.theta = theta;
  cfg.sigma = sigma;
  cfg.seed = seed;
  cfg.output_rule = rule;
  cfg.M = ceil_pow(double(N), double(alpha));
  cfg.lambda = std::pow(Scalar(N), -theta);
  cfg.l_smooth = L;
  cfg.l_envelope = L + 1 / cfg.lambda;
  cfg.gamma = sigma > 0
                  ? std::min(1 / cfg.l_envelope, 1 / (sigma * std::sqrt(Scalar(N))))
                  : 1 / cfg.l_envelope;
  return cfg;
}

template <typename Scalar = double>
struct MbsgaOptions {
  DenseVector<Scalar> start;       // empty -> zero vector
  std::int64_t record_every = 1;   // 0 -> closing record only
  bool record_grad_norm = false;
  // test hook: consume mini-batch indices from this list instead of the RNG
  const std::vector<Eigen::Index>* forced_samples = nullptr;
};

namespace detail {

template <typename Scalar>
void check_derived(const MbsgaConfig<Scalar>& cfg) {
  if (cfg.M < 1 || !(cfg.lambda > 0) || !(cfg.gamma > 0))
    throw std::invalid_argument("mbsga: config not derived (use mbsga_derive_params)");
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

template <typename Scalar>
RunTrace<Scalar> mbsga_run(const ErmObjective<Scalar>& obj,
                           const LogSumRegularizer<Scalar>& g,
                           const MbsgaConfig<Scalar>& cfg,
                           const MbsgaOptions<Scalar>& opts = {}) {
  detail::check_derived(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  DenseVector<Scalar> w = opts.start.size() > 0
                              ? opts.start
                              : DenseVector<Scalar>::Zero(obj.dim()).eval();
  if (w.size() != obj.dim()) throw std::invalid_argument("mbsga: start has wrong dimension");
  SampleRng rng(cfg.seed);
  const std::int64_t K = cfg.output_rule == OutputRule::random_R
                             ? rng.uniform_1_to(cfg.N) - 1
                             : cfg.N;
  const auto h_at = [&](const DenseVector<Scalar>& x) {
    return obj.value(x) + g.value(x);
  };
  const Scalar h0 = h_at(w);
  if (!std::isfinite(double(h0))) throw DivergenceError(0, "objective not finite at start");

  RunTrace<Scalar> trace;
  std::size_t forced_pos = 0;
  std::vector<Eigen::Index> batch(static_cast<std::size_t>(cfg.M));
  const auto record = [&](std::int64_t iter, const DenseVector<Scalar>& x,
                          double grad_e_norm) {
    const Scalar h = h_at(x);
    if (!std::isfinite(double(h)) || h > Scalar(1e6) * h0)
      throw DivergenceError(iter, "objective diverged");
    trace.records.push_back({iter, detail::seconds_since(t0), double(h), grad_e_norm,
                             trace.grad_calls, trace.prox_calls});
  };

  for (std::int64_t k = 1; k <= K; ++k) {
    const ProxResult<Scalar> pr = prox_vector(g, cfg.lambda, w);
    trace.prox_calls += 1;
    if (opts.record_every > 0 && (k - 1) % opts.record_every == 0) {
      double ge = std::nan("");
      if (opts.record_grad_norm)
        ge = double((full_gradient(obj, w) + (w - pr.point) / cfg.lambda).norm());
      record(k, w, ge);
    }
    if (opts.forced_samples) {
      if (forced_pos + batch.size() > opts.forced_samples->size())
        throw std::invalid_argument("mbsga: forced sample list exhausted");
      for (auto& j : batch) j = (*opts.forced_samples)[forced_pos++];
    } else {
      for (auto& j : batch) j = rng.uniform_index(obj.n());
    }
    trace.grad_calls += cfg.M;
    const DenseVector<Scalar> dir =
        minibatch_gradient(obj, w, batch) + (w - pr.point) / cfg.lambda;
    w -= cfg.gamma * dir;
    if (!w.allFinite()) throw DivergenceError(k, "iterate not finite");
  }

  trace.final_iterate = w;
  if (cfg.output_rule == OutputRule::random_R) {
    trace.output_iterate = prox_vector(g, cfg.lambda, w).point;
    trace.prox_calls += 1;
  } else {
    trace.output_iterate = w;
  }
  record(K + 1, w, std::nan(""));
  return trace;
}

template <typename Scalar = double>
struct SigmaEstimate {
  Scalar sigma_hat = 0;                 // max_k sigma_k
  std::vector<Scalar> per_iteration;    // sigma_k series
};

// Runs trial_iters iterations of the mini-batch scheme with gamma = 1/L_E
// (L = mean smoothness) and measures, per iteration,
//   sigma_k^2 = (1/M) sum_j ||grad F(w_k, xi_j) - grad f(w_k)||^2
// over that iteration's own mini-batch.  Callers should pass a seed distinct
// from the production run's.  The exhaustive hook replaces the mini-batch
// with a full census (M = n), making sigma_k^2 the exact population variance.
template <typename Scalar>
SigmaEstimate<Scalar> estimate_sigma(const ErmObjective<Scalar>& obj,
                                     const LogSumRegularizer<Scalar>& g,
                                     std::int64_t N, Scalar alpha, Scalar theta,
                                     int trial_iters, std::uint64_t seed,
                                     bool exhaustive = false) {
  if (trial_iters < 1) throw std::invalid_argument("estimate_sigma: trial_iters must be >= 1");
  const MbsgaConfig<Scalar> cfg =
      mbsga_derive_params<Scalar>(N, alpha, theta, obj.l_mean(), 0, seed);
  DenseVector<Scalar> w = DenseVector<Scalar>::Zero(obj.dim());
  SampleRng rng(seed);
  std::vector<Eigen::Index> batch;
  if (exhaustive) {
    batch.resize(static_cast<std::size_t>(obj.n()));
    for (std::size_t j = 0; j < batch.size(); ++j) batch[j] = Eigen::Index(j);
  } else {
    batch.resize(static_cast<std::size_t>(cfg.M));
  }
  SigmaEstimate<Scalar> est;
  for (int k = 1; k <= trial_iters; ++k) {
    const ProxResult<Scalar> pr = prox_vector(g, cfg.lambda, w);
    if (!exhaustive)
      for (auto& j : batch) j = rng.uniform_index(obj.n());
    const DenseVector<Scalar> mean = full_gradient(obj, w);
    Scalar acc = 0;
    for (const Eigen::Index j : batch) acc += (sample_gradient(obj, w, j) - mean).squaredNorm();
    est.per_iteration.push_back(std::sqrt(acc / Scalar(batch.size())));
    const DenseVector<Scalar> dir =
        minibatch_gradient(obj, w, batch) + (w - pr.point) / cfg.lambda;
    w -= cfg.gamma * dir;
    if (!w.allFinite()) throw DivergenceError(k, "iterate not finite");
  }
  for (const Scalar s : est.per_iteration) est.sigma_hat = std::max(est.sigma_hat, s);
  return est;
}

template <typename Scalar = double>
struct VarianceCheck {
  Scalar empirical = 0;  // mean over trials of ||grad A - grad E||^2
  Scalar bound = 0;      // sigma^2(w) / M with sigma^2(w) from the census
  Scalar std_error = 0;  // standard error of the empirical mean
  Scalar sigma_sq = 0;   // census sigma^2(w)
};

// Monte-Carlo check that the mini-batch envelope gradient deviates from the
// exact one with mean squared norm sigma^2(w)/M.  The exhaustive hook swaps
// the sampled batch for the full census, collapsing the deviation to zero.
template <typename Scalar>
VarianceCheck<Scalar> variance_bound_check(const ErmObjective<Scalar>& obj,
                                           const LogSumRegularizer<Scalar>& g,
                                           const DenseVector<Scalar>& w, Scalar lambda,
                                           std::int64_t M, std::int64_t trials,
                                           std::uint64_t seed, bool exhaustive = false) {
  if (M < 1 || trials < 1)
    throw std::invalid_argument("variance_bound_check: M and trials must be >= 1");
  const ProxResult<Scalar> pr = prox_vector(g, lambda, w);
  const DenseVector<Scalar> exact =
      full_gradient(obj, w) + (w - pr.point) / lambda;
  VarianceCheck<Scalar> out;
  out.sigma_sq = census_sigma_sq(obj, w);
  out.bound = out.sigma_sq / Scalar(M);
  SampleRng rng(seed);
  std::vector<Eigen::Index> batch(static_cast<std::size_t>(exhaustive ? obj.n() : M));
  Scalar mean = 0, m2 = 0;
  for (std::int64_t t = 1; t <= trials; ++t) {
    if (exhaustive) {
      for (std::size_t j = 0; j < batch.size(); ++j) batch[j] = Eigen::Index(j);
    } else {
      for (auto& j : batch) j = rng.uniform_index(obj.n());
    }
    const DenseVector<Scalar> approx =
        minibatch_gradient(obj, w, batch) + (w - pr.point) / lambda;
    const Scalar s = (approx - exact).squaredNorm();
    const Scalar delta = s - mean;
    mean += delta / Scalar(t);
    m2 += delta * (s - mean);
  }
  out.empirical = mean;
  out.std_error = trials > 1 ? std::sqrt(m2 / Scalar(trials - 1) / Scalar(trials)) : Scalar(0);
  return out;
}

}  // namespace nsopt
