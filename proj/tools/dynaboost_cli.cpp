// Command-line front end: run one YAML experiment or a built-in suite, or
// check the analytic gradients.
//
// Exit codes: 0 success, 1 configuration or I/O error, 2 the boosted
// controller diverged in some run, 3 a gradient check failed.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dynaboost/harness/config.hpp"
#include "dynaboost/harness/experiments.hpp"
#include "dynaboost/harness/gradcheck.hpp"

namespace {

using namespace dynaboost::harness;

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kDiverged = 2;
constexpr int kGradcheckFailed = 3;

struct RunFlags {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int runs = 0;
  int parallel = 1;
};

struct SuiteFlags {
  std::string out = "out";
  std::uint64_t seed = 1;
  int runs = 20;
  int parallel = 1;
  int T = 2000;
  int T_large = 1000;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, 0, "cannot open file");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int report(const ExperimentReport& r) {
  std::cout << summary_table(r) << "  wrote " << r.files.raw.string() << ", "
            << r.files.aggregate.string() << ", " << r.files.manifest.string();
  if (!r.files.svg.empty()) std::cout << ", " << r.files.svg.string();
  std::cout << "\n";
  if (r.boosted_diverged) {
    std::cerr << r.config.name << ": boosted controller diverged\n";
    return kDiverged;
  }
  return kOk;
}

int run_config(const RunFlags& f, const CLI::App& cmd) {
  const std::string text = read_file(f.config);
  ExperimentConfig c = parse_config(text, f.config);
  if (cmd.count("--seed") > 0) c.seed = f.seed;
  if (cmd.count("--runs") > 0) c.runs = f.runs;
  if (cmd.count("--out") > 0) c.output = f.out;
  validate(c, f.config);
  return report(run_and_write(c, text, c.output, f.parallel));
}

int run_suite(std::vector<ExperimentConfig> (*suite)(const SuiteOptions&), const SuiteFlags& f) {
  SuiteOptions opt{f.seed, f.runs, f.T, f.T_large, f.out};
  int code = kOk;
  for (const auto& c : suite(opt)) {
    validate(c, c.name);
    const int rc = report(run_and_write(c, "", c.output, f.parallel));
    if (rc != kOk) code = rc;
  }
  return code;
}

int gradcheck(std::uint64_t seed, int points) {
  bool ok = true;
  for (const auto& r : run_gradchecks(seed, points)) {
    std::printf("%s %-30s max rel error %.3e (tol %.0e, %d points)\n", r.passed() ? "ok  " : "FAIL",
                r.name.c_str(), r.max_rel_error, r.tolerance, r.points);
    ok = ok && r.passed();
  }
  return ok ? kOk : kGradcheckFailed;
}

void add_suite_flags(CLI::App* cmd, SuiteFlags& f, bool large) {
  cmd->add_option("--out", f.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", f.seed, "base seed")->capture_default_str();
  cmd->add_option("--runs", f.runs, "runs per experiment")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--parallel", f.parallel, "runs executed concurrently")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("-T,--horizon", f.T, "rounds per run")->check(CLI::PositiveNumber)->capture_default_str();
  if (large) {
    cmd->add_option("--large-horizon", f.T_large, "rounds for the d=100 system")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boosted online control experiments"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "run the experiment described by a YAML file");
  run->add_option("--config", run_flags.config, "experiment file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", run_flags.out, "output directory (overrides the file)");
  run->add_option("--seed", run_flags.seed, "base seed (overrides the file)");
  run->add_option("--runs", run_flags.runs, "number of runs (overrides the file)")->check(CLI::PositiveNumber);
  run->add_option("--parallel", run_flags.parallel, "runs executed concurrently")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  SuiteFlags sanity_flags, correlated_flags, pendulum_flags, overparam_flags;
  auto* sanity = app.add_subcommand("sanity", "i.i.d. Gaussian LDS at d = 1, 10, 100");
  add_suite_flags(sanity, sanity_flags, true);
  auto* correlated = app.add_subcommand("correlated", "random-walk and sinusoidal disturbances");
  add_suite_flags(correlated, correlated_flags, false);
  auto* pendulum = app.add_subcommand("pendulum", "inverted pendulum with random-walk disturbances");
  add_suite_flags(pendulum, pendulum_flags, false);
  auto* overparam = app.add_subcommand("overparam", "boosted RNNs against one large RNN");
  add_suite_flags(overparam, overparam_flags, false);

  std::uint64_t grad_seed = 7;
  int grad_points = 100;
  auto* grad = app.add_subcommand("gradcheck", "compare analytic gradients with finite differences");
  grad->add_option("--seed", grad_seed, "seed of the random points")->capture_default_str();
  grad->add_option("--points", grad_points, "points per check")->check(CLI::PositiveNumber)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return run_config(run_flags, *run);
    if (*sanity) return run_suite(sanity_suite, sanity_flags);
    if (*correlated) return run_suite(correlated_suite, correlated_flags);
    if (*pendulum) return run_suite(pendulum_suite, pendulum_flags);
    if (*overparam) return run_suite(overparam_suite, overparam_flags);
    if (*grad) return gradcheck(grad_seed, grad_points);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kOk;
}
