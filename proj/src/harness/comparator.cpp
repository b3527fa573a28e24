#include "dynaboost/harness/comparator.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dynaboost::harness {

namespace {

void check_blocks(const std::vector<Mat>& m, const LinearSystem& sys, int memory) {
  if (memory < 1) throw std::invalid_argument("fixed GPC: memory must be >= 1");
  if (static_cast<int>(m.size()) != memory) {
    throw std::invalid_argument("fixed GPC: expected " + std::to_string(memory) + " M blocks, got " +
                                std::to_string(m.size()));
  }
  for (const auto& block : m) require_shape(block, sys.action_dim(), sys.state_dim(), "fixed GPC M");
}

Vec gpc_action(std::span<const Vec> w, const std::vector<Mat>& m, std::size_t t) {
  Vec u = Vec::Zero(m.front().rows());
  for (std::size_t i = 1; i <= m.size() && i <= t; ++i) u.noalias() += m[i - 1] * w[t - i];
  return u;
}

void check_disturbances(std::span<const Vec> w, const LinearSystem& sys) {
  for (const auto& v : w) require_dim(v, sys.state_dim(), "fixed GPC disturbance");
}

double frobenius_sq(const std::vector<Mat>& m) {
  double s = 0.0;
  for (const auto& b : m) s += b.squaredNorm();
  return s;
}

}  // namespace

double evaluate_fixed_gpc(std::span<const Vec> w, const std::vector<Mat>& m,
                          const LinearSystem& sys, const QuadraticCost& cost, int memory) {
  check_blocks(m, sys, memory);
  check_disturbances(w, sys);
  Vec x = Vec::Zero(sys.state_dim());
  double total = 0.0;
  for (std::size_t t = 0; t < w.size(); ++t) {
    const Vec u = gpc_action(w, m, t);
    total += eval_cost(cost, x, u);
    x = sys.A() * x + sys.B() * u + w[t];
  }
  return total;
}

std::vector<Mat> fixed_gpc_gradient(std::span<const Vec> w, const std::vector<Mat>& m,
                                    const LinearSystem& sys, const QuadraticCost& cost,
                                    int memory) {
  check_blocks(m, sys, memory);
  check_disturbances(w, sys);
  const std::size_t T = w.size();
  std::vector<Vec> xs(T), us(T);
  Vec x = Vec::Zero(sys.state_dim());
  for (std::size_t t = 0; t < T; ++t) {
    xs[t] = x;
    us[t] = gpc_action(w, m, t);
    x = sys.A() * x + sys.B() * us[t] + w[t];
  }

  std::vector<Mat> grad(m.size(), Mat::Zero(sys.action_dim(), sys.state_dim()));
  Vec adjoint = Vec::Zero(sys.state_dim());  // dJ/dx_{t+1}
  for (std::size_t t = T; t-- > 0;) {
    const Vec du = 2.0 * (cost.R() * us[t]) + sys.B().transpose() * adjoint;
    for (std::size_t i = 1; i <= m.size() && i <= t; ++i) grad[i - 1].noalias() += du * w[t - i].transpose();
    adjoint = 2.0 * (cost.Q() * xs[t]) + sys.A().transpose() * adjoint;
  }
  return grad;
}

FixedGpcResult best_fixed_gpc(std::span<const Vec> w, const LinearSystem& sys,
                              const QuadraticCost& cost, int memory, double radius,
                              PgdOptions options) {
  if (!(radius > 0.0)) throw std::invalid_argument("best_fixed_gpc: radius must be positive");
  const std::vector<Mat> zero(static_cast<std::size_t>(memory),
                              Mat::Zero(sys.action_dim(), sys.state_dim()));
  auto gradient = [&](const std::vector<Mat>& m) { return fixed_gpc_gradient(w, m, sys, cost, memory); };
  const std::vector<Mat> g0 = gradient(zero);
  const double g0_norm = std::sqrt(frobenius_sq(g0));
  if (g0_norm == 0.0) return FixedGpcResult{zero, evaluate_fixed_gpc(w, zero, sys, cost, memory), 0};

  // Power iteration on the (constant) Hessian: H v = grad(v) - grad(0).
  std::vector<Mat> v = g0;
  double lipschitz = 0.0;
  for (int it = 0; it < 100; ++it) {
    const double n = std::sqrt(frobenius_sq(v));
    for (auto& b : v) b /= n;
    std::vector<Mat> hv = gradient(v);
    for (std::size_t i = 0; i < hv.size(); ++i) hv[i] -= g0[i];
    const double next = std::sqrt(frobenius_sq(hv));
    v = std::move(hv);
    if (std::abs(next - lipschitz) <= 1e-6 * next) {
      lipschitz = next;
      break;
    }
    lipschitz = next;
  }
  if (!(lipschitz > 0.0)) throw std::runtime_error("best_fixed_gpc: degenerate objective");
  const double step = 1.0 / (1.05 * lipschitz);
  const double tol = options.tol * std::max(1.0, g0_norm);

  std::vector<Mat> m = zero, y = zero, prev = zero;
  double momentum = 1.0;
  for (int it = 1; it <= options.max_iter; ++it) {
    const std::vector<Mat> g = gradient(y);
    prev = m;
    m = y;
    for (std::size_t i = 0; i < m.size(); ++i) m[i] -= step * g[i];
    project_frobenius(m, radius);

    // Gradient mapping at y: (y - m) / step.
    double mapping_sq = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) mapping_sq += (y[i] - m[i]).squaredNorm();
    if (std::sqrt(mapping_sq) / step <= tol) {
      return FixedGpcResult{m, evaluate_fixed_gpc(w, m, sys, cost, memory), it};
    }

    if (options.method == PgdMethod::kAccelerated) {
      const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      const double beta = (momentum - 1.0) / next;
      momentum = next;
      y = m;
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += beta * (m[i] - prev[i]);
    } else {
      y = m;
    }
  }
  throw std::runtime_error("best_fixed_gpc: projected gradient descent did not converge in " +
                           std::to_string(options.max_iter) + " iterations");
}

std::vector<double> memory_errors(const SystemModel& sys, const QuadraticCost& cost,
                                  const Trajectory& trajectory, int memory) {
  if (memory < 1) throw std::invalid_argument("memory_errors: memory must be >= 1");
  const std::size_t T = trajectory.rounds();
  if (trajectory.states.size() < T || trajectory.disturbances.size() != T) {
    throw std::invalid_argument("memory_errors: inconsistent trajectory");
  }
  const auto h = static_cast<std::size_t>(memory);
  const std::span<const Vec> actions(trajectory.actions);
  const std::span<const Vec> disturbances(trajectory.disturbances);
  std::vector<double> errors;
  for (std::size_t t = h; t < T; ++t) {
    // Round t+1 (1-based); the replay starts from zero at round t+2-H.
    const std::size_t start = t + 1 - h;
    const Vec x_hat = counterfactual_state(sys, Vec::Zero(state_dim(sys)),
                                           actions.subspan(start, h - 1),
                                           disturbances.subspan(start, h - 1));
    const Vec& u = trajectory.actions[t];
    errors.push_back(std::abs(eval_cost(cost, trajectory.states[t], u) - eval_cost(cost, x_hat, u)));
  }
  return errors;
}

}  // namespace dynaboost::harness
