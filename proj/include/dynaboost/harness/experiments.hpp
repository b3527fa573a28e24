#pragma once

// Built-in experiment families and the run-then-write driver used by the CLI
// and the acceptance binary.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dynaboost/harness/config.hpp"
#include "dynaboost/harness/episode.hpp"
#include "dynaboost/harness/outputs.hpp"

namespace dynaboost::harness {

struct SuiteOptions {
  std::uint64_t seed = 1;
  int runs = 20;
  int T = 2000;
  // Horizon of the d = 100 sanity member.
  int T_large = 1000;
  std::string output = "out";
};

// i.i.d. Gaussian LDS at d in {1, 10, 100}, boosted GPC against LQR, a single
// GPC and the zero controller.
std::vector<ExperimentConfig> sanity_suite(const SuiteOptions& opt);
// Scalar LDS under a Gaussian random walk and a sinusoid with GPC learners,
// plus the random walk with recurrent learners.
std::vector<ExperimentConfig> correlated_suite(const SuiteOptions& opt);
std::vector<ExperimentConfig> pendulum_suite(const SuiteOptions& opt);
// Boosted small networks against one network with the same parameter count.
std::vector<ExperimentConfig> overparam_suite(const SuiteOptions& opt);

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<RunResult> runs;
  std::vector<AlgorithmSeries> series;
  OutputFiles files;
  bool boosted_diverged = false;
};

// Runs every seed, writes the four output files under `out_dir` and returns
// the summary. `config_text` is recorded verbatim in the manifest.
ExperimentReport run_and_write(const ExperimentConfig& config, const std::string& config_text,
                               const std::filesystem::path& out_dir, int parallel);

// Final running-average cost per algorithm, one line each.
std::string summary_table(const ExperimentReport& report);

}  // namespace dynaboost::harness
