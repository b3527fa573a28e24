#pragma once

// Experiment configuration: a YAML document mapped onto ExperimentConfig.
// Parsing is strict (unknown keys are errors) and every error carries the
// line of the offending node.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dynaboost/boosting.hpp"
#include "dynaboost/controllers.hpp"
#include "dynaboost/dynamics.hpp"

namespace dynaboost::harness {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

struct EnvConfig {
  enum class Kind { kLds, kPendulum };
  Kind kind = Kind::kLds;
  Index k = 1;
  Index d = 1;
  double rho = 0.9;
  // Seed of the random system; derived from the base seed when unset.
  std::optional<std::uint64_t> system_seed;

  friend bool operator==(const EnvConfig&, const EnvConfig&) = default;
};

struct BoosterConfig {
  BoostVariant variant = BoostVariant::kDynaBoost1;
  std::optional<double> alpha;
  std::optional<double> beta;

  friend bool operator==(const BoosterConfig&, const BoosterConfig&) = default;
};

enum class Feedback { kZero, kLqr };

struct GpcConfig {
  LearningRate::Kind schedule = LearningRate::Kind::kAdaptive;
  double lr = 0.05;
  double radius_m = 10.0;
  Feedback feedback = Feedback::kZero;

  friend bool operator==(const GpcConfig&, const GpcConfig&) = default;
};

struct RnnConfig {
  int hidden = 5;
  double lr = 0.01;
  double clip_norm = 5.0;
  double init_scale = 0.3;
  bool last_slot_only = false;

  friend bool operator==(const RnnConfig&, const RnnConfig&) = default;
};

struct ControllerConfig {
  enum class Kind { kGpc, kRnn };
  Kind kind = Kind::kGpc;
  GpcConfig gpc;
  RnnConfig rnn;

  friend bool operator==(const ControllerConfig&, const ControllerConfig&) = default;
};

enum class Baseline { kLqr, kSingle, kZero, kOverparam };

const char* baseline_name(Baseline b);

struct ExperimentConfig {
  std::string name = "experiment";
  EnvConfig env;
  DisturbanceSpec disturbance = IidGaussian{};
  int T = 2000;
  int H = 5;
  int N = 5;
  BoosterConfig booster;
  double action_radius = 5.0;
  ControllerConfig controller;
  std::vector<Baseline> baselines{Baseline::kLqr, Baseline::kSingle, Baseline::kZero};
  int runs = 20;
  std::uint64_t seed = 1;
  std::string output = "out";

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Checks the cross-field invariants (T >= H >= 1, N >= 1, runs >= 1, ...).
// Throws ConfigError with line 0 on violation.
void validate(const ExperimentConfig& config, const std::string& source = "<config>");

ExperimentConfig parse_config(std::string_view text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

// Normalized YAML with every field spelled out; parse_config(emit_config(c)) == c.
std::string emit_config(const ExperimentConfig& config);

}  // namespace dynaboost::harness
