#pragma once

// Named self-check suites behind the harness `verify` subcommand.  Each suite
// sweeps randomized cases against an independent reference (grid oracle,
// central differences, census enumeration, brute-force grid minimum) and
// returns one row per invariant with the measured value and its threshold.

#include "nsopt/envelope.hpp"
#include "nsopt/erm.hpp"
#include "nsopt/log_sum.hpp"
#include "nsopt/mbsga.hpp"
#include "nsopt/reference.hpp"
#include "nsopt/vrsga.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace nsopt {

struct VerifyCheck {
  std::string suite;
  std::string name;
  bool pass = false;
  double measured = 0;
  double threshold = 0;
  std::string note;
};

// --- prox suite: closed-form scalar prox vs grid oracle, plus the envelope
// --- gap, displacement, and Lipschitz bounds of the regularizer.

inline std::vector<VerifyCheck> verify_prox(std::uint64_t seed = 20260801,
                                            int cases = 1000,
                                            double grid_step = 1e-6,
                                            double objective_tol = 1e-8) {
  std::vector<VerifyCheck> out;
  MixRng rng(seed);

  double max_gap = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < cases; ++c) {
    const double kappa = rng.log_uniform(1e-3, 10.0);
    const double nu = rng.log_uniform(1e-2, 10.0);
    const double lambda = rng.log_uniform(1e-3, 10.0);
    const double w = rng.uniform(-20.0, 20.0);
    const LogSumRegularizer<double> g(kappa, nu, 1);
    const auto phi = [&](double x) {
      return (x - w) * (x - w) / (2 * lambda) + g.value_scalar(x);
    };
    const double closed = prox_scalar(g, lambda, w);
    const double oracle = prox_oracle_scalar(g, lambda, w, grid_step);
    max_gap = std::max(max_gap, phi(closed) - phi(oracle));
  }
  out.push_back({"prox", "closed_form_objective_vs_grid_oracle",
                 max_gap <= objective_tol, max_gap, objective_tol,
                 std::to_string(cases) + " cases, grid step " +
                     std::to_string(grid_step)});

  int gap_violations = 0, disp_violations = 0, lip_violations = 0,
      stat_violations = 0;
  double worst_gap_slack = std::numeric_limits<double>::infinity();
  const int draws = 10000;
  for (int c = 0; c < draws; ++c) {
    const double kappa = rng.log_uniform(1e-3, 5.0);
    const double nu = rng.log_uniform(5e-2, 5.0);
    const double lambda = rng.log_uniform(1e-2, 5.0);
    const Eigen::Index d = 1 + Eigen::Index(rng.next() % 8);
    const LogSumRegularizer<double> g(kappa, nu, d);
    DenseVector<double> w(d), z(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      w[i] = rng.uniform(-6.0, 6.0);
      z[i] = rng.uniform(-6.0, 6.0);
    }
    const double l = g.lipschitz();
    const ProxResult<double> pr = prox_vector(g, lambda, w);
    const double gap = g.value(w) - pr.envelope_value;
    if (gap < -1e-12 || gap > l * l * lambda / 2) ++gap_violations;
    worst_gap_slack = std::min(worst_gap_slack, l * l * lambda / 2 - gap);
    if ((w - pr.point).norm() > 2 * l * lambda) ++disp_violations;
    if (std::abs(g.value(z) - g.value(w)) > l * (z - w).norm()) ++lip_violations;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double zi = pr.point[i];
      if (zi == 0) continue;
      const double lhs = (w[i] - zi) / lambda;
      const double rhs = kappa * (zi > 0 ? 1.0 : -1.0) / (nu + std::abs(zi));
      if (std::abs(lhs - rhs) > 1e-8 * std::max(1.0, std::abs(rhs)))
        ++stat_violations;
    }
  }
  out.push_back({"prox", "moreau_gap_within_bounds", gap_violations == 0,
                 double(gap_violations), 0,
                 "0 <= g - e <= l^2 lambda / 2 over " + std::to_string(draws) +
                     " draws"});
  out.push_back({"prox", "prox_displacement_bound", disp_violations == 0,
                 double(disp_violations), 0, "||w - zeta|| <= 2 l lambda"});
  out.push_back({"prox", "regularizer_lipschitz_pairs", lip_violations == 0,
                 double(lip_violations), 0, "|g(z) - g(w)| <= l ||z - w||"});
  out.push_back({"prox", "interior_prox_stationarity", stat_violations == 0,
                 double(stat_violations), 0,
                 "(w - zeta)/lambda matches the penalty slope at zeta"});
  return out;
}

// --- gradient suite: central differences against the analytic gradients of
// --- f and of the anchored majorant E.

inline std::vector<VerifyCheck> verify_gradient(std::uint64_t seed = 20260802,
                                                int points = 100,
                                                double fd_step = 1e-5,
                                                double rel_tol = 1e-5) {
  std::vector<VerifyCheck> out;
  const SparseDataset<double> ds = synthetic_dense_instance<double>(50, 10, 424242);
  const ErmObjective<double> obj(ds);
  MixRng rng(seed);

  double worst_f = 0, worst_e = 0;
  for (int c = 0; c < points; ++c) {
    DenseVector<double> w(obj.dim());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = rng.normal() * 0.6;
    const auto f_val = [&](const DenseVector<double>& x) { return obj.value(x); };
    const DenseVector<double> fd = central_difference(f_val, w, fd_step);
    const DenseVector<double> an = full_gradient(obj, w);
    worst_f = std::max(worst_f, (fd - an).norm() / std::max(an.norm(), 1e-10));

    const double lambda = rng.log_uniform(0.1, 2.0);
    const LogSumRegularizer<double> g(0.1, 1.0, obj.dim());
    DenseVector<double> wk(obj.dim());
    for (Eigen::Index i = 0; i < wk.size(); ++i) wk[i] = rng.normal() * 0.6;
    const EnvelopeAnchor<double> anchor = make_envelope_anchor(g, lambda, wk);
    const auto e_val = [&](const DenseVector<double>& x) {
      return envelope_value(anchor, obj, x);
    };
    const DenseVector<double> fd_e = central_difference(e_val, w, fd_step);
    const DenseVector<double> an_e = envelope_gradient(anchor, obj, w);
    worst_e = std::max(worst_e, (fd_e - an_e).norm() / std::max(an_e.norm(), 1e-10));
  }
  out.push_back({"gradient", "erm_gradient_matches_central_difference",
                 worst_f <= rel_tol, worst_f, rel_tol,
                 std::to_string(points) + " points, step " + std::to_string(fd_step)});
  out.push_back({"gradient", "envelope_gradient_matches_central_difference",
                 worst_e <= rel_tol, worst_e, rel_tol, ""});
  return out;
}

// --- envelope suite: majorization, touching, and smoothness of the anchored
// --- majorant over random anchors and probe points.

inline std::vector<VerifyCheck> verify_envelope(std::uint64_t seed = 20260803,
                                                int draws = 10000,
                                                double value_tol = 1e-9,
                                                double smooth_slack = 1e-8) {
  std::vector<VerifyCheck> out;
  const SparseDataset<double> ds = synthetic_dense_instance<double>(50, 10, 424242);
  const ErmObjective<double> obj(ds);
  const LogSumRegularizer<double> g(0.1, 1.0, obj.dim());
  MixRng rng(seed);

  double min_gap = std::numeric_limits<double>::infinity();
  double worst_touch = 0;
  double worst_ratio_excess = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < draws; ++c) {
    const double lambda = rng.log_uniform(0.1, 2.0);
    DenseVector<double> wk(obj.dim()), w(obj.dim()), x(obj.dim());
    for (Eigen::Index i = 0; i < wk.size(); ++i) {
      wk[i] = rng.normal();
      w[i] = rng.normal() * 1.5;
      x[i] = rng.normal() * 1.5;
    }
    const EnvelopeAnchor<double> anchor = make_envelope_anchor(g, lambda, wk);
    min_gap = std::min(min_gap, envelope_value(anchor, obj, w) -
                                    aux_objective(obj, g, lambda, w));
    worst_touch = std::max(worst_touch,
                           std::abs(envelope_value(anchor, obj, wk) -
                                    aux_objective(obj, g, lambda, wk)));
    const double dist = (w - x).norm();
    if (dist > 1e-6) {
      const double ratio =
          (envelope_gradient(anchor, obj, w) - envelope_gradient(anchor, obj, x)).norm() /
          dist;
      const double bound = (obj.l_mean() + 1 / lambda) * (1 + smooth_slack);
      worst_ratio_excess = std::max(worst_ratio_excess, ratio - bound);
    }
  }
  out.push_back({"envelope", "majorant_dominates_smoothed_objective",
                 min_gap >= -value_tol, min_gap, -value_tol,
                 "min over " + std::to_string(draws) + " draws of E - (f + e)"});
  out.push_back({"envelope", "majorant_touches_at_anchor", worst_touch <= value_tol,
                 worst_touch, value_tol, ""});
  out.push_back({"envelope", "gradient_smoothness_ratio", worst_ratio_excess <= 0,
                 worst_ratio_excess, 0,
                 "||grad E(w) - grad E(x)|| / ||w - x|| minus (L + 1/lambda)(1 + slack)"});
  return out;
}

// --- variance suite: the mini-batch envelope gradient deviates from the
// --- exact one with mean squared norm sigma^2(w)/M (census sigma on a tiny
// --- instance).

inline std::vector<VerifyCheck> verify_variance(std::uint64_t seed = 20260804,
                                                std::int64_t trials = 100000) {
  std::vector<VerifyCheck> out;
  const SparseDataset<double> ds = tiny_five_sample_instance<double>();
  const ErmObjective<double> obj(ds);
  const LogSumRegularizer<double> g(0.3, 1.0, obj.dim());
  DenseVector<double> w(2);
  w << 0.3, -0.2;
  const double lambda = 0.5;
  for (const std::int64_t M : {std::int64_t(1), std::int64_t(2), std::int64_t(5)}) {
    const VarianceCheck<double> vc =
        variance_bound_check(obj, g, w, lambda, M, trials, seed + std::uint64_t(M));
    const double dev_se = std::abs(vc.empirical - vc.bound) /
                          std::max(vc.std_error, 1e-300);
    out.push_back({"variance", "matches_sigma_sq_over_M_" + std::to_string(M) + "_3se",
                   dev_se <= 3.0, dev_se, 3.0,
                   "empirical " + std::to_string(vc.empirical) + " vs bound " +
                       std::to_string(vc.bound)});
    out.push_back({"variance", "within_5pct_of_bound_M_" + std::to_string(M),
                   vc.empirical <= 1.05 * vc.bound, vc.empirical, 1.05 * vc.bound, ""});
  }
  return out;
}

// --- lemma suite: averaged envelope-gradient norms from seeded runs stay
// --- under the convergence bounds evaluated with a brute-force grid optimum
// --- and a closed-form variance constant.

struct LemmaReport {
  double lhs = 0;           // mean over runs and iterations of ||grad E||^2
  double rhs = 0;           // bound
  double grid_optimum = 0;  // brute-force min of f + e_lambda
  double grid_boundary = 0; // best value on the grid's border (sanity margin)
  double delta = 0;         // optimality gap term entering the bound
};

namespace detail {

template <typename Scalar>
double mean_sq_grad_norm(const RunTrace<Scalar>& trace) {
  double acc = 0;
  std::int64_t cnt = 0;
  for (const TraceRecord& r : trace.records) {
    if (std::isnan(r.grad_e_norm)) continue;
    acc += r.grad_e_norm * r.grad_e_norm;
    ++cnt;
  }
  return acc / double(cnt);
}

}  // namespace detail

inline LemmaReport lemma_mbsga_report(int runs = 50, std::int64_t N = 200,
                                      std::uint64_t seed0 = 500) {
  const SparseDataset<double> ds = tiny_four_sample_instance<double>();
  const ErmObjective<double> obj(ds);
  const LogSumRegularizer<double> g(0.25, 1.0, 2);
  const double alpha = 0.25, theta = 0.25;
  // Valid for every w since the loss slope never exceeds 1 in magnitude:
  // E||grad F - grad f||^2 <= (1/n) sum_j ||x^j||^2.
  const double sigma = std::sqrt(mean_row_sq_norm(ds));
  const MbsgaConfig<double> cfg0 =
      mbsga_derive_params<double>(N, alpha, theta, obj.l_mean(), sigma);
  const auto aux = [&](const DenseVector<double>& x) {
    return aux_objective(obj, g, cfg0.lambda, x);
  };
  const GridMin2d<double> gm = grid_min_2d(aux, -8.0, 8.0, 3200);
  LemmaReport rep;
  rep.grid_optimum = gm.value;
  rep.grid_boundary = gm.boundary_value;
  DenseVector<double> w1(2);
  w1 << 4.0, 4.0;  // start away from the optimum so the gap term is exercised
  rep.delta = 2 * (aux(w1) - gm.value);
  const double l_env = cfg0.l_envelope;  // L + N^theta
  rep.rhs = rep.delta / double(N) * l_env +
            sigma / std::sqrt(double(N)) * (rep.delta + l_env / double(cfg0.M));
  double acc = 0;
  for (int r = 0; r < runs; ++r) {
    MbsgaConfig<double> cfg = cfg0;
    cfg.seed = seed0 + std::uint64_t(r);
    cfg.output_rule = OutputRule::last_iterate;
    MbsgaOptions<double> opts;
    opts.start = w1;
    opts.record_every = 1;
    opts.record_grad_norm = true;
    acc += detail::mean_sq_grad_norm(mbsga_run(obj, g, cfg, opts));
  }
  rep.lhs = acc / double(runs);
  return rep;
}

inline LemmaReport lemma_vrsga_report(int runs = 50, std::int64_t N = 200,
                                      std::uint64_t seed0 = 900) {
  const SparseDataset<double> ds = tiny_four_sample_instance<double>();
  const ErmObjective<double> obj(ds);
  const LogSumRegularizer<double> g(0.25, 1.0, 2);
  const VrsgaConfig<double> cfg0 = vrsga_derive_params<double>(
      N, 1.0 / 3, 1.0 / 3, ds.n(), obj.l_max());
  const auto aux = [&](const DenseVector<double>& x) {
    return aux_objective(obj, g, cfg0.lambda, x);
  };
  const GridMin2d<double> gm = grid_min_2d(aux, -8.0, 8.0, 3200);
  LemmaReport rep;
  rep.grid_optimum = gm.value;
  rep.grid_boundary = gm.boundary_value;
  DenseVector<double> w1(2);
  w1 << 4.0, 4.0;
  rep.delta = 36 * (aux(w1) - gm.value);
  const double sm = double(cfg0.S) * double(cfg0.m);
  rep.rhs = rep.delta * cfg0.l_envelope / sm;
  double acc = 0;
  for (int r = 0; r < runs; ++r) {
    VrsgaConfig<double> cfg = cfg0;
    cfg.seed = seed0 + std::uint64_t(r);
    cfg.output_rule = OutputRule::last_iterate;
    VrsgaOptions<double> opts;
    opts.start = w1;
    opts.record_every = 1;
    opts.record_grad_norm = true;
    acc += detail::mean_sq_grad_norm(vrsga_run(obj, g, cfg, opts));
  }
  rep.lhs = acc / double(runs);
  return rep;
}

inline std::vector<VerifyCheck> verify_lemma(int runs = 50) {
  std::vector<VerifyCheck> out;
  {
    const LemmaReport rep = lemma_mbsga_report(runs);
    out.push_back({"lemma", "mbsga_mean_sq_grad_under_bound", rep.lhs <= rep.rhs,
                   rep.lhs, rep.rhs,
                   "grid optimum " + std::to_string(rep.grid_optimum) +
                       ", gap term " + std::to_string(rep.delta)});
  }
  {
    const LemmaReport rep = lemma_vrsga_report(runs);
    out.push_back({"lemma", "vrsga_mean_sq_grad_under_bound", rep.lhs <= rep.rhs,
                   rep.lhs, rep.rhs,
                   "grid optimum " + std::to_string(rep.grid_optimum) +
                       ", gap term " + std::to_string(rep.delta)});
  }
  return out;
}

inline std::vector<VerifyCheck> run_verify_suite(const std::string& suite) {
  if (suite == "prox") return verify_prox();
  if (suite == "gradient") return verify_gradient();
  if (suite == "envelope") return verify_envelope();
  if (suite == "variance") return verify_variance();
  if (suite == "lemma") return verify_lemma();
  if (suite == "all") {
    std::vector<VerifyCheck> out;
    for (const char* s : {"prox", "gradient", "envelope", "variance", "lemma"}) {
      auto part = run_verify_suite(s);
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }
  throw ConfigError("unknown verify suite '" + suite +
                    "' (expected prox|gradient|envelope|variance|lemma|all)");
}

}  // namespace nsopt
