#pragma once

// Counterfactual comparators: the cost a fixed GPC policy would have paid on
// a recorded disturbance sequence, the best such policy in hindsight, and the
// bounded-memory error of a played trajectory.

#include <span>
#include <vector>

#include "dynaboost/dynamics.hpp"
#include "dynaboost/losses.hpp"

namespace dynaboost::harness {

// Total cost of u_t = sum_{i=1}^{H} M^i w_{t-i} (K = 0, w_s = 0 for s < 1)
// from x_1 = 0, with x_{t+1} = A x_t + B u_t + w_t over every recorded w_t.
double evaluate_fixed_gpc(std::span<const Vec> w, const std::vector<Mat>& m,
                          const LinearSystem& sys, const QuadraticCost& cost, int memory);

// Gradient of evaluate_fixed_gpc with respect to each M^i (adjoint sweep).
std::vector<Mat> fixed_gpc_gradient(std::span<const Vec> w, const std::vector<Mat>& m,
                                    const LinearSystem& sys, const QuadraticCost& cost,
                                    int memory);

enum class PgdMethod { kProjected, kAccelerated };

struct PgdOptions {
  PgdMethod method = PgdMethod::kAccelerated;
  int max_iter = 50000;
  // On the gradient mapping norm, relative to max(1, |grad at M = 0|).
  double tol = 1e-9;
};

struct FixedGpcResult {
  std::vector<Mat> m;
  double cost;
  int iterations;
};

// Minimizes evaluate_fixed_gpc over the Frobenius ball of `radius`. The
// objective is a convex quadratic, so the step is 1/L with L estimated by
// power iteration on Hessian-vector products. Throws std::runtime_error if
// the gradient mapping has not fallen below tolerance after max_iter.
FixedGpcResult best_fixed_gpc(std::span<const Vec> w, const LinearSystem& sys,
                              const QuadraticCost& cost, int memory, double radius,
                              PgdOptions options = {});

// |c(x_t, u_t) - c(x_hat_t, u_t)| for every round t > H of a trajectory,
// where x_hat_t replays the last H-1 actions and disturbances from zero.
std::vector<double> memory_errors(const SystemModel& sys, const QuadraticCost& cost,
                                  const Trajectory& trajectory, int memory);

}  // namespace dynaboost::harness
