// Command-line front end: `run` executes an experiment and writes a trace
// file, `estimate-sigma` prints the pilot variance estimate, and `verify`
// runs the named self-check suite.  Configuration comes from flags or a JSON
// file (flags win).

#include "CLI11.hpp"
#include "json.hpp"

#include "nsopt/experiment.hpp"
#include "nsopt/verify.hpp"

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace {

using nlohmann::json;

nsopt::Algo parse_algo(const std::string& s) {
  if (s == "mbsga") return nsopt::Algo::mbsga;
  if (s == "vrsga") return nsopt::Algo::vrsga;
  throw nsopt::ConfigError("unknown algorithm '" + s + "' (expected mbsga|vrsga)");
}

nsopt::DataFormat parse_format(const std::string& s) {
  if (s == "libsvm") return nsopt::DataFormat::libsvm;
  if (s == "idx") return nsopt::DataFormat::mnist_idx;
  throw nsopt::ConfigError("unknown format '" + s + "' (expected libsvm|idx)");
}

nsopt::OutputRule parse_rule(const std::string& s) {
  if (s == "last_iterate") return nsopt::OutputRule::last_iterate;
  if (s == "random_R") return nsopt::OutputRule::random_R;
  throw nsopt::ConfigError("unknown output rule '" + s +
                           "' (expected last_iterate|random_R)");
}

// CLI-facing mirror of ExperimentConfig: enums and the sigma source are
// strings here and get normalized after flags and config file are merged.
struct RunFlags {
  nsopt::ExperimentConfig cfg;
  std::string format_str = "libsvm";
  std::string algo_str = "mbsga";
  std::string rule_str = "last_iterate";
  std::string sigma_str = "0";
  std::string config_path;
  std::int64_t dim = 0;
  int repeat = 1;
};

void add_data_options(CLI::App* sub, RunFlags& f) {
  sub->add_option("--data", f.cfg.data_path,
                  "dataset path (libsvm text or idx image file)");
  sub->add_option("--labels", f.cfg.labels_path, "idx label file path");
  sub->add_option("--format", f.format_str, "dataset format: libsvm|idx");
  sub->add_option("--dim", f.dim, "feature dimension override (0 = infer)");
  sub->add_option("--positive-class", f.cfg.positive_class,
                  "digit mapped to label +1 for idx data");
  sub->add_option("--alpha", f.cfg.alpha, "mini-batch exponent")
      ->default_str("algorithm default");
  sub->add_option("--theta", f.cfg.theta, "smoothing exponent")
      ->default_str("algorithm default");
  sub->add_option("--kappa", f.cfg.kappa, "penalty weight")->default_str("1/d");
  sub->add_option("--nu", f.cfg.nu, "penalty scale");
  sub->add_option("--passes", f.cfg.passes, "budget in effective data passes");
  sub->add_option("--seed", f.cfg.seed, "RNG seed");
  sub->add_option("--trial-iters", f.cfg.sigma_trial_iters,
                  "pilot iterations for sigma estimation");
  sub->add_option("--config", f.config_path,
                  "JSON config file (explicit flags override it)");
}

void add_run_options(CLI::App* sub, RunFlags& f) {
  add_data_options(sub, f);
  sub->add_option("--algo", f.algo_str, "algorithm: mbsga|vrsga");
  sub->add_option("--output-rule", f.rule_str,
                  "output iterate rule: last_iterate|random_R");
  sub->add_option("--sigma", f.sigma_str,
                  "variance constant: a number, or 'estimate'");
  sub->add_option("--out", f.cfg.out_path, "trace output path");
  sub->add_option("--record-every", f.cfg.record_every,
                  "record cadence in iterations (0 = auto)");
  sub->add_flag("--record-grad-norm", f.cfg.record_grad_norm,
                "sample the majorant gradient norm at each record");
  sub->add_option("--repeat", f.repeat, "run this many seeds concurrently")
      ->check(CLI::PositiveNumber);
}

void apply_sigma(RunFlags& f) {
  if (f.sigma_str == "estimate") {
    f.cfg.sigma_estimate = true;
    f.cfg.sigma_value = 0;
    return;
  }
  f.cfg.sigma_estimate = false;
  try {
    std::size_t pos = 0;
    f.cfg.sigma_value = std::stod(f.sigma_str, &pos);
    if (pos != f.sigma_str.size()) throw std::invalid_argument(f.sigma_str);
  } catch (const std::exception&) {
    throw nsopt::ConfigError("--sigma expects a number or 'estimate', got '" +
                             f.sigma_str + "'");
  }
  if (f.cfg.sigma_value < 0)
    throw nsopt::ConfigError("--sigma must be non-negative");
}

// Fill any value the user did not pass on the command line from the JSON
// config file.
void apply_config_file(CLI::App* sub, RunFlags& f) {
  if (f.config_path.empty()) return;
  std::ifstream in(f.config_path);
  if (!in)
    throw nsopt::ConfigError("cannot open config file '" + f.config_path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw nsopt::ConfigError("config file '" + f.config_path +
                             "' is not valid JSON: " + e.what());
  }
  const auto unset = [&](const std::string& flag) {
    return sub->get_option_no_throw(flag) != nullptr && sub->count(flag) == 0;
  };
  try {
    if (j.contains("data") && unset("--data"))
      f.cfg.data_path = j.at("data").get<std::string>();
    if (j.contains("labels") && unset("--labels"))
      f.cfg.labels_path = j.at("labels").get<std::string>();
    if (j.contains("format") && unset("--format"))
      f.format_str = j.at("format").get<std::string>();
    if (j.contains("dim") && unset("--dim"))
      f.dim = j.at("dim").get<std::int64_t>();
    if (j.contains("positive_class") && unset("--positive-class"))
      f.cfg.positive_class = j.at("positive_class").get<int>();
    if (j.contains("algo") && unset("--algo"))
      f.algo_str = j.at("algo").get<std::string>();
    if (j.contains("alpha") && unset("--alpha"))
      f.cfg.alpha = j.at("alpha").get<double>();
    if (j.contains("theta") && unset("--theta"))
      f.cfg.theta = j.at("theta").get<double>();
    if (j.contains("kappa") && unset("--kappa"))
      f.cfg.kappa = j.at("kappa").get<double>();
    if (j.contains("nu") && unset("--nu")) f.cfg.nu = j.at("nu").get<double>();
    if (j.contains("passes") && unset("--passes"))
      f.cfg.passes = j.at("passes").get<double>();
    if (j.contains("seed") && unset("--seed"))
      f.cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output_rule") && unset("--output-rule"))
      f.rule_str = j.at("output_rule").get<std::string>();
    if (j.contains("sigma") && unset("--sigma")) {
      if (j.at("sigma").is_number())
        f.sigma_str = json(j.at("sigma").get<double>()).dump();
      else
        f.sigma_str = j.at("sigma").get<std::string>();
    }
    if (j.contains("out") && unset("--out"))
      f.cfg.out_path = j.at("out").get<std::string>();
    if (j.contains("record_every") && unset("--record-every"))
      f.cfg.record_every = j.at("record_every").get<std::int64_t>();
    if (j.contains("record_grad_norm") && unset("--record-grad-norm"))
      f.cfg.record_grad_norm = j.at("record_grad_norm").get<bool>();
    if (j.contains("trial_iters") && unset("--trial-iters"))
      f.cfg.sigma_trial_iters = j.at("trial_iters").get<std::int64_t>();
    if (j.contains("repeat") && unset("--repeat"))
      f.repeat = j.at("repeat").get<int>();
  } catch (const json::exception& e) {
    throw nsopt::ConfigError("config file '" + f.config_path +
                             "': bad value type: " + e.what());
  }
}

void finalize(CLI::App* sub, RunFlags& f) {
  apply_config_file(sub, f);
  f.cfg.format = parse_format(f.format_str);
  f.cfg.algo = parse_algo(f.algo_str);
  f.cfg.output_rule = parse_rule(f.rule_str);
  f.cfg.dim_override = Eigen::Index(f.dim);
  apply_sigma(f);
  if (f.cfg.data_path.empty())
    throw nsopt::ConfigError("--data is required (flag or config file)");
  if (f.cfg.format == nsopt::DataFormat::mnist_idx && f.cfg.labels_path.empty())
    throw nsopt::ConfigError("--labels is required with --format idx");
  if (f.repeat < 1) throw nsopt::ConfigError("--repeat must be >= 1");
}

std::string seed_suffixed(const std::string& path, std::uint64_t seed) {
  const std::size_t dot = path.find_last_of('.');
  const std::size_t slash = path.find_last_of('/');
  const std::string tag = ".seed" + std::to_string(seed);
  if (dot == std::string::npos ||
      (slash != std::string::npos && dot < slash))
    return path + tag;
  return path.substr(0, dot) + tag + path.substr(dot);
}

json derived_json(const nsopt::ExperimentResult& r,
                  const nsopt::ExperimentConfig& cfg) {
  json j;
  j["algo"] = r.algo == nsopt::Algo::mbsga ? "mbsga" : "vrsga";
  j["n"] = std::int64_t(r.n);
  j["d"] = std::int64_t(r.dim);
  j["kappa"] = r.kappa;
  j["nu"] = r.nu;
  j["seed"] = cfg.seed;
  j["out"] = cfg.out_path;
  j["record_every"] = r.record_every;
  j["grad_calls"] = r.trace.grad_calls;
  j["prox_calls"] = r.trace.prox_calls;
  j["h_initial"] = r.h_initial;
  j["h_final"] = r.h_final;
  if (r.mbsga) {
    j["N"] = r.mbsga->N;
    j["M"] = r.mbsga->M;
    j["lambda"] = r.mbsga->lambda;
    j["gamma"] = r.mbsga->gamma;
    j["L"] = r.mbsga->l_smooth;
    j["sigma"] = r.sigma_used;
    j["sigma_estimated"] = r.sigma_estimated;
  } else if (r.vrsga) {
    j["N"] = r.vrsga->N;
    j["S"] = r.vrsga->S;
    j["m"] = r.vrsga->m;
    j["b"] = r.vrsga->b;
    j["lambda"] = r.vrsga->lambda;
    j["gamma"] = r.vrsga->gamma;
    j["L"] = r.vrsga->l_smooth;
  }
  return j;
}

int cmd_run(CLI::App* sub, RunFlags& f) {
  finalize(sub, f);
  const nsopt::SparseDataset<double> ds = nsopt::load_dataset(f.cfg);
  std::vector<nsopt::ExperimentConfig> cfgs;
  for (int i = 0; i < f.repeat; ++i) {
    nsopt::ExperimentConfig c = f.cfg;
    c.seed = f.cfg.seed + std::uint64_t(i);
    if (f.repeat > 1) c.out_path = seed_suffixed(f.cfg.out_path, c.seed);
    cfgs.push_back(std::move(c));
  }
  std::vector<std::optional<nsopt::ExperimentResult>> results(cfgs.size());
  std::vector<std::exception_ptr> errors(cfgs.size());
  const auto worker = [&](std::size_t i) {
    try {
      nsopt::ExperimentResult r = nsopt::run_experiment_on(ds, cfgs[i]);
      std::ofstream out(cfgs[i].out_path);
      if (!out)
        throw nsopt::ConfigError("cannot open trace output '" +
                                 cfgs[i].out_path + "'");
      nsopt::write_trace(out, r.trace);
      results[i] = std::move(r);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (cfgs.size() == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(cfgs.size());
    for (std::size_t i = 0; i < cfgs.size(); ++i)
      pool.emplace_back(worker, i);
    for (std::thread& t : pool) t.join();
  }
  for (std::size_t i = 0; i < cfgs.size(); ++i)
    if (errors[i]) std::rethrow_exception(errors[i]);
  if (results.size() == 1) {
    std::cout << derived_json(*results[0], cfgs[0]).dump(2) << "\n";
  } else {
    json arr = json::array();
    for (std::size_t i = 0; i < results.size(); ++i)
      arr.push_back(derived_json(*results[i], cfgs[i]));
    std::cout << arr.dump(2) << "\n";
  }
  return 0;
}

int cmd_estimate_sigma(CLI::App* sub, RunFlags& f) {
  f.algo_str = "mbsga";
  finalize(sub, f);
  const nsopt::SparseDataset<double> ds = nsopt::load_dataset(f.cfg);
  const nsopt::SigmaEstimate<double> est = nsopt::estimate_sigma_for(ds, f.cfg);
  json j;
  j["sigma_hat"] = est.sigma_hat;
  j["per_iteration"] = est.per_iteration;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_verify(const std::string& suite) {
  const std::vector<nsopt::VerifyCheck> checks = nsopt::run_verify_suite(suite);
  json arr = json::array();
  bool all_pass = true;
  for (const nsopt::VerifyCheck& c : checks) {
    json j;
    j["suite"] = c.suite;
    j["name"] = c.name;
    j["pass"] = c.pass;
    j["measured"] = c.measured;
    j["threshold"] = c.threshold;
    if (!c.note.empty()) j["note"] = c.note;
    arr.push_back(std::move(j));
    all_pass = all_pass && c.pass;
  }
  std::cout << arr.dump(2) << "\n";
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Stochastic composite optimization: mini-batch and variance-reduced "
      "proximal-style solvers for smooth loss + log-sum penalty"};
  app.require_subcommand(1);

  RunFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "run one experiment, write a trace");
  add_run_options(run, run_flags);

  RunFlags est_flags;
  CLI::App* est = app.add_subcommand(
      "estimate-sigma", "pilot-run variance estimate for the step size");
  add_data_options(est, est_flags);

  std::string suite = "all";
  CLI::App* ver = app.add_subcommand("verify", "run a self-check suite");
  ver->add_option("suite", suite,
                  "prox|gradient|envelope|variance|lemma|all (default all)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run, run_flags);
    if (est->parsed()) return cmd_estimate_sigma(est, est_flags);
    return cmd_verify(suite);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
