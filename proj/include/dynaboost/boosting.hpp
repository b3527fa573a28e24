#pragma once

// Online boosting of weak controllers for the memory-H proxy loss.
//
// Both variants run N weak learners in sequence. Learner i maps the current
// observation to A_i, and the partial action is updated as
//   u^i = (1 - eta_i) u^{i-1} + eta_i A_i,   u^0 = 0.
// The booster plays u^N. After the round each learner is charged with a
// residual loss built from the proxy-loss gradient at the window of
// level-(i-1) partial actions.

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dynaboost/controllers.hpp"
#include "dynaboost/core.hpp"
#include "dynaboost/losses.hpp"

namespace dynaboost {

enum class BoostVariant {
  // eta_i = 2 / (i + 1), linear residual losses.
  kDynaBoost1,
  // eta_i = alpha / beta, quadratic residual losses.
  kDynaBoost2,
};

const char* variant_name(BoostVariant variant);

std::vector<double> step_lengths(BoostVariant variant, int n, double alpha = 0.0,
                                 double beta = 0.0);

// gamma_i = 2i / (N (N + 1)): the weight of learner i in the final action of
// a DynaBoost1 booster, i.e. u^N = sum_i gamma_i A_i.
std::vector<double> combination_weights(int n);

struct BoostAction {
  Vec action;                 // u^N
  std::vector<Vec> partials;  // u^0 .. u^N
};

class Booster {
 public:
  // `alpha` and `beta` are required for DynaBoost2 (they fix the step length
  // and the residual curvature) and ignored for DynaBoost1.
  Booster(BoostVariant variant, std::vector<std::unique_ptr<WeakController>> learners,
          int memory, Index action_dim, std::optional<double> alpha = std::nullopt,
          std::optional<double> beta = std::nullopt);

  // Queries every learner and records the partial actions for this round.
  BoostAction act(const Observation& obs);

  // Charges every learner with its residual loss for this round, in
  // increasing i. `history` describes the rounds covered by the window.
  void update(const ProxyLossContext& ctx, const LossHistory& history);

  // The residual loss learner i (1-based) would receive for `ctx`.
  ResidualLoss residual_loss(int i, const ProxyLossContext& ctx) const;

  // Partial actions of level `level` (0..N) for the last H rounds.
  const Window& level_window(int level) const;

  BoostVariant variant() const { return variant_; }
  int size() const { return static_cast<int>(learners_.size()); }
  int memory() const { return memory_; }
  std::span<const double> steps() const { return steps_; }
  const WeakController& learner(int i) const;
  std::size_t parameter_count() const;

 private:
  BoostVariant variant_;
  std::vector<std::unique_ptr<WeakController>> learners_;
  int memory_;
  std::vector<double> steps_;
  double beta_ = 0.0;
  std::vector<Window> levels_;
};

}  // namespace dynaboost
