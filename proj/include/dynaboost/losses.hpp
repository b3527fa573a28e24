#pragma once

// Stage costs, the memory-H proxy loss and the residual losses that the
// boosters hand to their weak learners.

#include <span>
#include <variant>
#include <vector>

#include "dynaboost/core.hpp"
#include "dynaboost/dynamics.hpp"

namespace dynaboost {

// c(x, u) = x'Qx + u'Ru with Q, R symmetric PSD.
class QuadraticCost {
 public:
  QuadraticCost(Mat q, Mat r);
  static QuadraticCost identity(Index k, Index d);

  const Mat& Q() const { return q_; }
  const Mat& R() const { return r_; }

 private:
  Mat q_;
  Mat r_;
};

double eval_cost(const QuadraticCost& cost, const Vec& x, const Vec& u);

// Everything the proxy loss of round t depends on besides the action window.
// Non-owning: the system, cost and disturbance storage must outlive it.
//
// `disturbances` holds w_{t-H+1} .. w_{t-1} (H-1 entries, zero-padded for
// early rounds). The truncated state x_hat_t starts from zero at round
// t-H+1 and is driven by the first H-1 window actions; the last action only
// enters through its own cost term.
class ProxyLossContext {
 public:
  ProxyLossContext(const SystemModel& system, const QuadraticCost& cost, int memory,
                   std::span<const Vec> disturbances, long round = 0);

  const SystemModel& system() const { return *system_; }
  const QuadraticCost& cost() const { return *cost_; }
  int memory() const { return memory_; }
  std::span<const Vec> disturbances() const { return disturbances_; }
  long round() const { return round_; }

 private:
  const SystemModel* system_;
  const QuadraticCost* cost_;
  int memory_;
  std::span<const Vec> disturbances_;
  long round_;
};

// l_t(0, u_{t-H+1}, ..., u_t) = c(x_hat_t, u_t). `actions` is oldest first.
double eval_proxy(const ProxyLossContext& ctx, std::span<const Vec> actions);

// Truncated state x_hat_t for the given action window.
Vec proxy_state(const ProxyLossContext& ctx, std::span<const Vec> actions);

// Gradient of eval_proxy with respect to each window action, oldest first.
// The state sensitivity is propagated backwards through the rollout
// Jacobians, so for an LDS entry j < H is (A^(H-1-j) B)' 2Q x_hat.
std::vector<Vec> proxy_window_grad(const ProxyLossContext& ctx, std::span<const Vec> actions);

// sum_j grad_j' u_j
class LinearResidualLoss {
 public:
  explicit LinearResidualLoss(std::vector<Vec> gradients);

  const std::vector<Vec>& gradients() const { return gradients_; }
  int memory() const { return static_cast<int>(gradients_.size()); }

 private:
  std::vector<Vec> gradients_;
};

// sum_j curvature |u_j - anchor_j|^2 + grad_j' (u_j - anchor_j),
// where curvature = eta_i * beta / 2.
class QuadraticResidualLoss {
 public:
  QuadraticResidualLoss(std::vector<Vec> gradients, std::vector<Vec> anchors, double curvature);

  const std::vector<Vec>& gradients() const { return gradients_; }
  const std::vector<Vec>& anchors() const { return anchors_; }
  double curvature() const { return curvature_; }
  int memory() const { return static_cast<int>(gradients_.size()); }

 private:
  std::vector<Vec> gradients_;
  std::vector<Vec> anchors_;
  double curvature_;
};

using ResidualLoss = std::variant<LinearResidualLoss, QuadraticResidualLoss>;

double eval_linear_residual(const LinearResidualLoss& loss, std::span<const Vec> actions);
double eval_quad_residual(const QuadraticResidualLoss& loss, std::span<const Vec> actions);
double eval_residual(const ResidualLoss& loss, std::span<const Vec> actions);

int residual_memory(const ResidualLoss& loss);

// Partial derivative of the residual loss with respect to slot `j`
// (0-based, oldest first) evaluated at u_j.
Vec residual_slot_gradient(const ResidualLoss& loss, int j, const Vec& u_j);

struct CurvatureBounds {
  double alpha;  // strong convexity along the newest action
  double beta;   // smoothness over the whole window
  double G;      // bound on |l_t| over the action and disturbance balls
};

// Conservative constants for the LDS proxy loss with memory H, in the
// convention l(u) - l(v) >= / <= grad'(u - v) + (c/2)|u - v|^2:
//   alpha = 2 lambda_min(R)      (along the newest action only)
//   beta  = 2 max(lambda_max(R), lambda_max(Q) (sum_{j=0}^{H-2} |A^j B|_2)^2)
//   G     = lambda_max(Q) (sum_{j=0}^{H-2} |A^j|_2 (|B|_2 R_u + W))^2 + lambda_max(R) R_u^2
// The window Hessian is block diagonal, diag(2 S'QS, 2R) with S the stacked
// A^j B blocks, which gives beta. Throws std::invalid_argument when R is
// singular (alpha would be zero).
CurvatureBounds derive_curvature_bounds(const LinearSystem& sys, const QuadraticCost& cost,
                                        int memory, double disturbance_bound,
                                        double action_radius);

}  // namespace dynaboost
