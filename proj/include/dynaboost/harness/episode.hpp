#pragma once

// Seeded multi-run episodes. Each run pre-generates one disturbance sequence
// and replays it to every algorithm, so comparisons within a run are paired.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dynaboost/dynamics.hpp"
#include "dynaboost/harness/agents.hpp"
#include "dynaboost/harness/config.hpp"
#include "dynaboost/losses.hpp"

namespace dynaboost::harness {

// The plant, cost and derived constants shared by every run of a config.
struct Setup {
  SystemModel system;
  QuadraticCost cost;
  // The LDS itself, or the pendulum's upright linearization.
  LinearSystem linear;
  double disturbance_bound;
  // LQR gain of `linear`.
  Mat lqr_gain;
};

Setup make_setup(const ExperimentConfig& config);

std::uint64_t system_seed(const ExperimentConfig& config);
std::uint64_t run_seed(const ExperimentConfig& config, int run_index);

std::vector<Vec> generate_disturbances(const DisturbanceSpec& spec, Index dim, int rounds,
                                       RngStream rng);

// FNV-1a over the raw bytes of every coordinate.
std::uint64_t hash_disturbances(std::span<const Vec> w);

struct EpisodeResult {
  std::string algorithm;
  Trajectory trajectory;
  bool diverged = false;
  long diverged_round = 0;
  std::uint64_t w_hash = 0;
  std::size_t parameter_count = 0;
};

// Plays `agent` for w.size() rounds from x_0 = 0. Round t: observe x_t,
// infer w_{t-1}, act, pay c(x_t, u_t), transition with w_t, then learn from
// the proxy loss of round t. A non-finite or exploding state truncates the
// run and marks it diverged.
EpisodeResult run_agent(const SystemModel& system, const QuadraticCost& cost, int memory,
                        std::span<const Vec> w, Agent& agent, std::string algorithm);

// "boosted" followed by the configured baselines.
std::vector<std::string> algorithm_names(const ExperimentConfig& config);

std::unique_ptr<Agent> make_agent(const ExperimentConfig& config, const Setup& setup,
                                  const std::string& algorithm, std::uint64_t seed);

struct RunResult {
  int run_index = 0;
  std::uint64_t seed = 0;
  std::uint64_t w_hash = 0;
  std::vector<EpisodeResult> episodes;
};

RunResult run_episode(const ExperimentConfig& config, const Setup& setup, int run_index);

// All runs, `parallel` at a time, sorted by seed.
std::vector<RunResult> run_experiment(const ExperimentConfig& config, int parallel = 1);

}  // namespace dynaboost::harness
