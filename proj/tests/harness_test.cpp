#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "nsopt/experiment.hpp"
#include "nsopt/reference.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using nsopt::Algo;
using nsopt::DenseVector;
using nsopt::ExperimentConfig;

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(bool(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Blank out the wall-clock column so byte comparisons see only deterministic
// fields.
std::string zero_time_column(const std::string& text) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    auto fields = split_tabs(line);
    if (!first && fields.size() > 1) fields[1] = "0";
    first = false;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out << '\t';
      out << fields[i];
    }
    out << '\n';
  }
  return out.str();
}

void write_smoke_file(const std::string& path) {
  std::ofstream out(path);
  REQUIRE(bool(out));
  out << "+1 1:0.9 2:0.1\n-1 1:-0.3 2:0.8\n+1 1:0.5 2:-0.6\n-1 1:-0.8 2:-0.4\n";
}

}  // namespace

TEST_CASE("pass budgets map to iteration counts") {
  CHECK(nsopt::mbsga_budget_iterations(15, 200, 0.25) == 600);
  CHECK(nsopt::mbsga_budget_iterations(15, 32561, 0.25) == 34886);
  CHECK(nsopt::mbsga_budget_iterations(15, 60000, 0.25) == 56250);
  CHECK(nsopt::mbsga_budget_iterations(1, 4, 0.25) == 2);
  CHECK_THROWS_AS(nsopt::mbsga_budget_iterations(0, 100, 0.25), nsopt::ConfigError);

  const auto b200 = nsopt::vrsga_budget_outer(15, 200, 1.0 / 3);
  CHECK(b200.S == 7);
  CHECK(b200.m == 6);
  CHECK(b200.b == 36);
  CHECK(b200.nominal_N == 42);
  const auto a9a = nsopt::vrsga_budget_outer(15, 32561, 1.0 / 3);
  CHECK(a9a.S == 7);
  CHECK(a9a.m == 32);
  CHECK(a9a.b == 1024);
  CHECK(a9a.nominal_N == 224);
  const auto mnist = nsopt::vrsga_budget_outer(15, 60000, 1.0 / 3);
  CHECK(mnist.S == 7);
  CHECK(mnist.m == 40);
  CHECK(mnist.b == 1600);
  CHECK(mnist.nominal_N == 280);
  const auto tiny = nsopt::vrsga_budget_outer(1, 4, 1.0 / 3);
  CHECK(tiny.S == 1);
  CHECK(tiny.m == 2);
  CHECK(tiny.b == 4);
  CHECK(tiny.nominal_N == 2);
  CHECK_THROWS_AS(nsopt::vrsga_budget_outer(-1, 100, 1.0 / 3), nsopt::ConfigError);
}

TEST_CASE("alpha and theta fall back to per-algorithm defaults") {
  ExperimentConfig cfg;
  cfg.algo = Algo::mbsga;
  CHECK(nsopt::effective_alpha(cfg) == 0.25);
  CHECK(nsopt::effective_theta(cfg) == 0.25);
  cfg.algo = Algo::vrsga;
  CHECK(nsopt::effective_alpha(cfg) == 1.0 / 3);
  CHECK(nsopt::effective_theta(cfg) == 1.0 / 3);
  cfg.alpha = 0.4;
  cfg.theta = 0.2;
  CHECK(nsopt::effective_alpha(cfg) == 0.4);
  CHECK(nsopt::effective_theta(cfg) == 0.2);
}

TEST_CASE("run_experiment_on derives and echoes MBSGA parameters") {
  const auto ds = nsopt::tiny_four_sample_instance<double>();
  ExperimentConfig cfg;
  cfg.algo = Algo::mbsga;
  cfg.passes = 5;
  cfg.seed = 3;
  const auto res = nsopt::run_experiment_on(ds, cfg);
  CHECK(res.n == 4);
  CHECK(res.dim == 2);
  CHECK(res.kappa == 0.5);  // defaults to 1/d
  CHECK(res.nu == 1.0);
  REQUIRE(res.mbsga.has_value());
  CHECK(!res.vrsga.has_value());
  CHECK(res.mbsga->N == nsopt::mbsga_budget_iterations(5, 4, 0.25));
  CHECK(res.record_every == 1);
  CHECK(res.trace.grad_calls == res.mbsga->N * res.mbsga->M);
  CHECK(res.trace.prox_calls == res.mbsga->N);
  CHECK(res.h_initial == res.trace.records.front().h);
  const nsopt::ErmObjective<double> obj(ds);
  const nsopt::LogSumRegularizer<double> g(res.kappa, res.nu, 2);
  CHECK(res.h_final ==
        obj.value(res.trace.output_iterate) + g.value(res.trace.output_iterate));

  ExperimentConfig bare = cfg;
  bare.kappa = 0;
  const auto res0 = nsopt::run_experiment_on(ds, bare);
  CHECK(res0.h_final == obj.value(res0.trace.output_iterate));
}

TEST_CASE("run_experiment_on derives and echoes VRSGA parameters") {
  const auto ds = nsopt::tiny_five_sample_instance<double>();
  ExperimentConfig cfg;
  cfg.algo = Algo::vrsga;
  cfg.passes = 15;
  cfg.seed = 8;
  const auto res = nsopt::run_experiment_on(ds, cfg);
  REQUIRE(res.vrsga.has_value());
  CHECK(!res.mbsga.has_value());
  const auto budget = nsopt::vrsga_budget_outer(15, 5, 1.0 / 3);
  CHECK(res.vrsga->m == budget.m);
  CHECK(res.vrsga->b == budget.b);
  CHECK(res.vrsga->S == budget.S);
  CHECK(res.trace.grad_calls ==
        res.vrsga->S * (5 + res.vrsga->m * res.vrsga->b));
  CHECK(res.trace.prox_calls == res.vrsga->S * res.vrsga->m);
}

TEST_CASE("sigma estimation front end") {
  const auto ds = nsopt::tiny_four_sample_instance<double>();
  ExperimentConfig cfg;
  cfg.sigma_trial_iters = 10;
  const auto est = nsopt::estimate_sigma_for(ds, cfg);
  CHECK(est.sigma_hat > 0);
  CHECK(std::isfinite(est.sigma_hat));
  CHECK(est.per_iteration.size() == 10);

  const auto same = nsopt::make_dataset<double>(
      2, {{{0, 0.5}, {1, -0.25}}, {{0, 0.5}, {1, -0.25}}}, {1.0, 1.0});
  CHECK(nsopt::estimate_sigma_for(same, cfg).sigma_hat == 0.0);

  // the pilot stream must differ from the main run's stream
  CHECK((cfg.seed ^ 0x9e3779b97f4a7c15ull) != cfg.seed);
}

TEST_CASE("sigma estimate feeds the derived step size") {
  const auto ds = nsopt::tiny_four_sample_instance<double>();
  ExperimentConfig cfg;
  cfg.passes = 5;
  cfg.sigma_estimate = true;
  const auto res = nsopt::run_experiment_on(ds, cfg);
  CHECK(res.sigma_estimated);
  CHECK(res.sigma_used > 0);
  REQUIRE(res.mbsga.has_value());
  CHECK(res.mbsga->gamma <= 1 / res.mbsga->l_envelope);
}

TEST_CASE("run_experiment writes a well-formed trace file") {
  const std::string data = "harness_smoke.libsvm";
  write_smoke_file(data);
  ExperimentConfig cfg;
  cfg.data_path = data;
  cfg.algo = Algo::mbsga;
  cfg.passes = 5;
  cfg.seed = 11;
  cfg.record_every = 1;
  cfg.out_path = "harness_trace_a.tsv";
  const auto res = nsopt::run_experiment(cfg);
  CHECK(res.n == 4);

  const std::string text = slurp(cfg.out_path);
  std::istringstream in(text);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "iter\ttime_s\th\tlog_h\tgrad_calls\tprox_calls\tgrad_E_norm");
  std::int64_t prev_iter = 0, prev_grad = -1, prev_prox = -1;
  double prev_time = -1;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto f = split_tabs(line);
    REQUIRE(f.size() == 7);
    const std::int64_t it = std::stoll(f[0]);
    const double t = std::stod(f[1]);
    const double h = std::stod(f[2]);
    CHECK(it > prev_iter);
    CHECK(t >= prev_time);
    CHECK(std::stoll(f[4]) >= prev_grad);
    CHECK(std::stoll(f[5]) >= prev_prox);
    if (f[3] == "NA") {
      CHECK(!(h > 0));
    } else {
      CHECK(std::stod(f[3]) == doctest::Approx(std::log(h)).epsilon(1e-12));
    }
    CHECK(f[6].empty());  // gradient norms were not requested
    prev_iter = it;
    prev_time = t;
    prev_grad = std::stoll(f[4]);
    prev_prox = std::stoll(f[5]);
    ++rows;
  }
  CHECK(rows == std::size_t(res.mbsga->N + 1));

  // identical seed, identical bytes (wall clock aside)
  cfg.out_path = "harness_trace_b.tsv";
  nsopt::run_experiment(cfg);
  CHECK(zero_time_column(text) == zero_time_column(slurp("harness_trace_b.tsv")));

  std::remove(data.c_str());
  std::remove("harness_trace_a.tsv");
  std::remove("harness_trace_b.tsv");
}

TEST_CASE("run_experiment surfaces I/O failures as config errors") {
  ExperimentConfig missing;
  missing.data_path = "definitely_missing_507.libsvm";
  CHECK_THROWS_AS(nsopt::run_experiment(missing), nsopt::ConfigError);

  const std::string data = "harness_smoke2.libsvm";
  write_smoke_file(data);
  ExperimentConfig bad_out;
  bad_out.data_path = data;
  bad_out.passes = 1;
  bad_out.out_path = "no_such_dir_507/trace.tsv";
  CHECK_THROWS_AS(nsopt::run_experiment(bad_out), nsopt::ConfigError);
  std::remove(data.c_str());
}

TEST_CASE("trace writer formats sentinel values") {
  CHECK(nsopt::format_log_h(1.0) == "0");
  CHECK(nsopt::format_log_h(0.0) == "NA");
  CHECK(nsopt::format_log_h(-3.0) == "NA");
  CHECK(nsopt::format_log_h(std::numeric_limits<double>::infinity()) == "NA");
  CHECK(nsopt::format_log_h(std::nan("")) == "NA");

  nsopt::RunTrace<double> trace;
  trace.records.push_back({1, 0.25, 1.0, 0.5, 2, 1});
  trace.records.push_back({2, 0.5, 0.0, std::nan(""), 4, 2});
  std::ostringstream out;
  nsopt::write_trace(out, trace);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);  // header
  std::getline(in, line);
  CHECK(line == "1\t0.250000\t1\t0\t2\t1\t0.5");
  std::getline(in, line);
  CHECK(line == "2\t0.500000\t0\tNA\t4\t2\t");
}
