#pragma once

// Experiment harness: dataset loading, pass-budget-to-iteration mapping,
// parameter derivation echo, and end-to-end runs that emit trace files.

#include "nsopt/dataset.hpp"
#include "nsopt/erm.hpp"
#include "nsopt/log_sum.hpp"
#include "nsopt/mbsga.hpp"
#include "nsopt/trace.hpp"
#include "nsopt/vrsga.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <utility>

namespace nsopt {

enum class Algo { mbsga, vrsga };
enum class DataFormat { libsvm, mnist_idx };

struct ExperimentConfig {
  std::string data_path;
  std::string labels_path;  // companion label file (idx format only)
  DataFormat format = DataFormat::libsvm;
  Eigen::Index dim_override = 0;  // 0 = infer from data
  int positive_class = 1;
  Algo algo = Algo::mbsga;
  // NaN means "use the algorithm's theory-backed default" (1/4 vs 1/3).
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double theta = std::numeric_limits<double>::quiet_NaN();
  double kappa = -1;  // negative means "use 1/d once the dimension is known"
  double nu = 1.0;
  double passes = 15.0;
  std::uint64_t seed = 1;
  OutputRule output_rule = OutputRule::last_iterate;
  bool sigma_estimate = false;
  double sigma_value = 0;
  std::int64_t sigma_trial_iters = 50;
  std::string out_path = "trace.tsv";
  std::int64_t record_every = 0;  // 0 = auto (about 1000 records per run)
  bool record_grad_norm = false;
};

// Derived quantities echoed to the caller so invocations are auditable.
struct ExperimentResult {
  Algo algo = Algo::mbsga;
  Eigen::Index n = 0;
  Eigen::Index dim = 0;
  double kappa = 0;
  double nu = 0;
  double sigma_used = 0;      // MBSGA only
  bool sigma_estimated = false;
  std::int64_t record_every = 1;
  std::optional<MbsgaConfig<double>> mbsga;
  std::optional<VrsgaConfig<double>> vrsga;
  RunTrace<double> trace;
  double h_initial = 0;
  double h_final = 0;  // at the output iterate
};

inline double effective_alpha(const ExperimentConfig& cfg) {
  if (!std::isnan(cfg.alpha)) return cfg.alpha;
  return cfg.algo == Algo::mbsga ? 0.25 : 1.0 / 3.0;
}

inline double effective_theta(const ExperimentConfig& cfg) {
  if (!std::isnan(cfg.theta)) return cfg.theta;
  return cfg.algo == Algo::mbsga ? 0.25 : 1.0 / 3.0;
}

// Largest N with N * ceil(N^alpha) <= passes * n (at least 1): the number of
// iterations a budget of `passes` effective passes affords MBSGA.
inline std::int64_t mbsga_budget_iterations(double passes, Eigen::Index n,
                                            double alpha) {
  if (!(passes > 0)) throw ConfigError("passes must be positive");
  const std::int64_t budget = std::int64_t(passes * double(n));
  const auto cost = [&](std::int64_t N) { return N * ceil_pow(double(N), alpha); };
  std::int64_t lo = 1, hi = std::max<std::int64_t>(budget, 1);
  if (cost(hi) <= budget) return hi;
  // invariant: cost(lo) <= budget < cost(hi), cost nondecreasing
  if (cost(lo) > budget) return 1;
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    (cost(mid) <= budget ? lo : hi) = mid;
  }
  return lo;
}

// Largest S with S*(n + m*b) <= passes * n (at least 1), and the nominal
// inner-iteration count N = S*m that the lambda formula consumes.
struct VrsgaBudget {
  std::int64_t S = 1;
  std::int64_t m = 1;
  std::int64_t b = 1;
  std::int64_t nominal_N = 1;
};

inline VrsgaBudget vrsga_budget_outer(double passes, Eigen::Index n, double alpha) {
  if (!(passes > 0)) throw ConfigError("passes must be positive");
  VrsgaBudget out;
  out.m = ceil_pow(double(n), alpha);
  out.b = out.m * out.m;
  const double per_outer = double(n) + double(out.m) * double(out.b);
  out.S = std::max<std::int64_t>(1, std::int64_t(passes * double(n) / per_outer));
  out.nominal_N = out.S * out.m;
  return out;
}

inline SparseDataset<double> load_dataset(const ExperimentConfig& cfg) {
  if (cfg.format == DataFormat::libsvm) {
    std::ifstream in(cfg.data_path);
    if (!in) throw ConfigError("cannot open data file '" + cfg.data_path + "'");
    std::optional<Eigen::Index> dim;
    if (cfg.dim_override > 0) dim = cfg.dim_override;
    return parse_libsvm<double>(in, dim);
  }
  std::ifstream images(cfg.data_path, std::ios::binary);
  if (!images) throw ConfigError("cannot open image file '" + cfg.data_path + "'");
  std::ifstream labels(cfg.labels_path, std::ios::binary);
  if (!labels)
    throw ConfigError("cannot open label file '" + cfg.labels_path + "'");
  return parse_mnist_idx<double>(images, labels, cfg.positive_class);
}

// Run on an already-loaded dataset (the file-path front end wraps this).
inline ExperimentResult run_experiment_on(const SparseDataset<double>& ds,
                                          const ExperimentConfig& cfg) {
  ExperimentResult res;
  res.algo = cfg.algo;
  res.n = ds.n();
  res.dim = ds.dim();
  res.kappa = cfg.kappa < 0 ? 1.0 / double(ds.dim()) : cfg.kappa;
  res.nu = cfg.nu;
  const LogSumRegularizer<double> g(res.kappa, res.nu, ds.dim());
  const ErmObjective<double> obj(ds);
  const double alpha = effective_alpha(cfg);
  const double theta = effective_theta(cfg);

  if (cfg.algo == Algo::mbsga) {
    const std::int64_t N = mbsga_budget_iterations(cfg.passes, ds.n(), alpha);
    double sigma = cfg.sigma_value;
    if (cfg.sigma_estimate) {
      // Pilot run on its own stream so the estimate never shares randomness
      // with the main run.
      const std::uint64_t pilot_seed = cfg.seed ^ 0x9e3779b97f4a7c15ull;
      sigma = estimate_sigma(obj, g, N, alpha, theta, cfg.sigma_trial_iters,
                             pilot_seed)
                  .sigma_hat;
      res.sigma_estimated = true;
    }
    res.sigma_used = sigma;
    MbsgaConfig<double> mc = mbsga_derive_params<double>(
        N, alpha, theta, obj.l_mean(), sigma, cfg.seed, cfg.output_rule);
    res.record_every =
        cfg.record_every > 0 ? cfg.record_every : std::max<std::int64_t>(1, N / 1000);
    MbsgaOptions<double> opts;
    opts.record_every = res.record_every;
    opts.record_grad_norm = cfg.record_grad_norm;
    res.trace = mbsga_run(obj, g, mc, opts);
    res.mbsga = std::move(mc);
  } else {
    const VrsgaBudget budget = vrsga_budget_outer(cfg.passes, ds.n(), alpha);
    VrsgaConfig<double> vc = vrsga_derive_params<double>(
        budget.nominal_N, alpha, theta, ds.n(), obj.l_max(), cfg.seed,
        cfg.output_rule);
    res.record_every = cfg.record_every > 0
                           ? cfg.record_every
                           : std::max<std::int64_t>(1, budget.nominal_N / 1000);
    VrsgaOptions<double> opts;
    opts.record_every = res.record_every;
    opts.record_grad_norm = cfg.record_grad_norm;
    res.trace = vrsga_run(obj, g, vc, opts);
    res.vrsga = std::move(vc);
  }

  res.h_initial = res.trace.records.empty()
                      ? obj.value(DenseVector<double>::Zero(ds.dim())) +
                            g.value(DenseVector<double>::Zero(ds.dim()))
                      : res.trace.records.front().h;
  res.h_final = obj.value(res.trace.output_iterate) + g.value(res.trace.output_iterate);
  return res;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const SparseDataset<double> ds = load_dataset(cfg);
  ExperimentResult res = run_experiment_on(ds, cfg);
  std::ofstream out(cfg.out_path);
  if (!out) throw ConfigError("cannot open trace output '" + cfg.out_path + "'");
  write_trace(out, res.trace);
  if (!out) throw ConfigError("failed writing trace to '" + cfg.out_path + "'");
  return res;
}

// estimate-sigma front end: derives (N, alpha, theta) from the pass budget the
// same way `run` does, so the printed sigma_hat is the one `run` would use.
inline SigmaEstimate<double> estimate_sigma_for(const SparseDataset<double>& ds,
                                                const ExperimentConfig& cfg) {
  ExperimentConfig c = cfg;
  c.algo = Algo::mbsga;
  const double alpha = effective_alpha(c);
  const double theta = effective_theta(c);
  const double kappa = c.kappa < 0 ? 1.0 / double(ds.dim()) : c.kappa;
  const LogSumRegularizer<double> g(kappa, c.nu, ds.dim());
  const ErmObjective<double> obj(ds);
  const std::int64_t N = mbsga_budget_iterations(c.passes, ds.n(), alpha);
  return estimate_sigma(obj, g, N, alpha, theta, c.sigma_trial_iters,
                        c.seed ^ 0x9e3779b97f4a7c15ull);
}

}  // namespace nsopt
