#include "dynaboost/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dynaboost {

namespace {

void require_symmetric_psd(const Mat& m, const char* what) {
  if (m.rows() < 1 || m.rows() != m.cols()) {
    throw std::invalid_argument(std::string(what) + " must be square and non-empty");
  }
  if (!m.allFinite()) throw std::invalid_argument(std::string(what) + " has non-finite entries");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw std::invalid_argument(std::string(what) + " must be symmetric");
  }
  Eigen::LDLT<Mat> ldlt(m);
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() < -1e-12 * scale).any()) {
    throw std::invalid_argument(std::string(what) + " must be positive semidefinite");
  }
}

double lambda_max(const Mat& sym) {
  return Eigen::SelfAdjointEigenSolver<Mat>(sym, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}

double lambda_min(const Mat& sym) {
  return Eigen::SelfAdjointEigenSolver<Mat>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

double operator_norm(const Mat& m) {
  return Eigen::JacobiSVD<Mat>(m).singularValues()(0);
}

void check_window(const ProxyLossContext& ctx, std::span<const Vec> actions) {
  if (static_cast<int>(actions.size()) != ctx.memory()) {
    throw std::invalid_argument("proxy loss: expected " + std::to_string(ctx.memory()) +
                                " window actions, got " + std::to_string(actions.size()));
  }
  const Index d = action_dim(ctx.system());
  for (const auto& u : actions) require_dim(u, d, "proxy loss action");
}

}  // namespace

QuadraticCost::QuadraticCost(Mat q, Mat r) : q_(std::move(q)), r_(std::move(r)) {
  require_symmetric_psd(q_, "Q");
  require_symmetric_psd(r_, "R");
}

QuadraticCost QuadraticCost::identity(Index k, Index d) {
  return QuadraticCost(Mat::Identity(k, k), Mat::Identity(d, d));
}

double eval_cost(const QuadraticCost& cost, const Vec& x, const Vec& u) {
  require_dim(x, cost.Q().rows(), "eval_cost state");
  require_dim(u, cost.R().rows(), "eval_cost action");
  return x.dot(cost.Q() * x) + u.dot(cost.R() * u);
}

ProxyLossContext::ProxyLossContext(const SystemModel& system, const QuadraticCost& cost,
                                   int memory, std::span<const Vec> disturbances, long round)
    : system_(&system), cost_(&cost), memory_(memory), disturbances_(disturbances),
      round_(round) {
  if (memory < 1) throw std::invalid_argument("ProxyLossContext: memory must be >= 1");
  if (static_cast<int>(disturbances.size()) != memory - 1) {
    throw std::invalid_argument("ProxyLossContext: expected " + std::to_string(memory - 1) +
                                " disturbances, got " + std::to_string(disturbances.size()));
  }
  const Index k = state_dim(system);
  for (const auto& w : disturbances) require_dim(w, k, "ProxyLossContext disturbance");
  if (cost.Q().rows() != k || cost.R().rows() != action_dim(system)) {
    throw std::invalid_argument("ProxyLossContext: cost dimensions do not match the system");
  }
}

Vec proxy_state(const ProxyLossContext& ctx, std::span<const Vec> actions) {
  check_window(ctx, actions);
  return counterfactual_state(ctx.system(), Vec::Zero(state_dim(ctx.system())),
                              actions.first(actions.size() - 1), ctx.disturbances());
}

double eval_proxy(const ProxyLossContext& ctx, std::span<const Vec> actions) {
  const Vec x_hat = proxy_state(ctx, actions);
  return eval_cost(ctx.cost(), x_hat, actions.back());
}

std::vector<Vec> proxy_window_grad(const ProxyLossContext& ctx, std::span<const Vec> actions) {
  check_window(ctx, actions);
  const auto& sys = ctx.system();
  const std::size_t steps = actions.size() - 1;

  std::vector<StepJacobians> jacobians;
  jacobians.reserve(steps);
  Vec x = Vec::Zero(state_dim(sys));
  for (std::size_t s = 0; s < steps; ++s) {
    jacobians.push_back(step_jacobians(sys, x, actions[s]));
    x = step(sys, x, actions[s], ctx.disturbances()[s]);
  }

  std::vector<Vec> grads(actions.size());
  grads.back() = 2.0 * (ctx.cost().R() * actions.back());
  Vec adjoint = 2.0 * (ctx.cost().Q() * x);
  for (std::size_t s = steps; s-- > 0;) {
    grads[s] = jacobians[s].wrt_action.transpose() * adjoint;
    adjoint = jacobians[s].wrt_state.transpose() * adjoint;
  }
  return grads;
}

namespace {

void check_gradients(const std::vector<Vec>& gradients, const char* what) {
  if (gradients.empty()) throw std::invalid_argument(std::string(what) + ": no gradients");
  for (const auto& g : gradients) {
    require_dim(g, gradients.front().size(), what);
    require_finite(g, what);
  }
}

void check_actions(std::span<const Vec> actions, const std::vector<Vec>& gradients,
                   const char* what) {
  if (actions.size() != gradients.size()) {
    throw std::invalid_argument(std::string(what) + ": expected " +
                                std::to_string(gradients.size()) + " actions, got " +
                                std::to_string(actions.size()));
  }
  for (const auto& u : actions) require_dim(u, gradients.front().size(), what);
}

}  // namespace

LinearResidualLoss::LinearResidualLoss(std::vector<Vec> gradients)
    : gradients_(std::move(gradients)) {
  check_gradients(gradients_, "LinearResidualLoss");
}

QuadraticResidualLoss::QuadraticResidualLoss(std::vector<Vec> gradients,
                                             std::vector<Vec> anchors, double curvature)
    : gradients_(std::move(gradients)), anchors_(std::move(anchors)), curvature_(curvature) {
  check_gradients(gradients_, "QuadraticResidualLoss");
  if (anchors_.size() != gradients_.size()) {
    throw std::invalid_argument("QuadraticResidualLoss: anchor count differs from gradient count");
  }
  for (const auto& a : anchors_) {
    require_dim(a, gradients_.front().size(), "QuadraticResidualLoss anchor");
    require_finite(a, "QuadraticResidualLoss anchor");
  }
  if (!(curvature_ > 0.0) || !std::isfinite(curvature_)) {
    throw std::invalid_argument("QuadraticResidualLoss: curvature must be positive");
  }
}

double eval_linear_residual(const LinearResidualLoss& loss, std::span<const Vec> actions) {
  check_actions(actions, loss.gradients(), "eval_linear_residual");
  double total = 0.0;
  for (std::size_t j = 0; j < actions.size(); ++j) total += loss.gradients()[j].dot(actions[j]);
  return total;
}

double eval_quad_residual(const QuadraticResidualLoss& loss, std::span<const Vec> actions) {
  check_actions(actions, loss.gradients(), "eval_quad_residual");
  double total = 0.0;
  for (std::size_t j = 0; j < actions.size(); ++j) {
    const Vec delta = actions[j] - loss.anchors()[j];
    total += loss.curvature() * delta.squaredNorm() + loss.gradients()[j].dot(delta);
  }
  return total;
}

double eval_residual(const ResidualLoss& loss, std::span<const Vec> actions) {
  return std::visit(
      [&](const auto& l) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(l)>, LinearResidualLoss>) {
          return eval_linear_residual(l, actions);
        } else {
          return eval_quad_residual(l, actions);
        }
      },
      loss);
}

int residual_memory(const ResidualLoss& loss) {
  return std::visit([](const auto& l) { return l.memory(); }, loss);
}

Vec residual_slot_gradient(const ResidualLoss& loss, int j, const Vec& u_j) {
  if (j < 0 || j >= residual_memory(loss)) throw std::out_of_range("residual_slot_gradient");
  const auto slot = static_cast<std::size_t>(j);
  if (const auto* linear = std::get_if<LinearResidualLoss>(&loss)) {
    return linear->gradients()[slot];
  }
  const auto& quad = std::get<QuadraticResidualLoss>(loss);
  require_dim(u_j, quad.anchors()[slot].size(), "residual_slot_gradient action");
  return 2.0 * quad.curvature() * (u_j - quad.anchors()[slot]) + quad.gradients()[slot];
}

CurvatureBounds derive_curvature_bounds(const LinearSystem& sys, const QuadraticCost& cost,
                                        int memory, double disturbance_bound,
                                        double action_radius) {
  if (memory < 1) throw std::invalid_argument("derive_curvature_bounds: memory must be >= 1");
  if (!(disturbance_bound >= 0.0) || !(action_radius > 0.0)) {
    throw std::invalid_argument("derive_curvature_bounds: need W >= 0 and R_u > 0");
  }
  if (cost.Q().rows() != sys.state_dim() || cost.R().rows() != sys.action_dim()) {
    throw std::invalid_argument("derive_curvature_bounds: cost does not match the system");
  }
  const double r_min = lambda_min(cost.R());
  const double r_max = lambda_max(cost.R());
  const double q_max = lambda_max(cost.Q());
  if (!(r_min > 1e-12 * std::max(1.0, r_max))) {
    throw std::invalid_argument("derive_curvature_bounds: R is singular, no strong convexity");
  }

  double gain_sum = 0.0;   // sum_j |A^j B|
  double power_sum = 0.0;  // sum_j |A^j|
  Mat power = Mat::Identity(sys.state_dim(), sys.state_dim());
  for (int j = 0; j + 2 <= memory; ++j) {
    gain_sum += operator_norm(power * sys.B());
    power_sum += operator_norm(power);
    power = sys.A() * power;
  }
  const double b_norm = operator_norm(sys.B());

  CurvatureBounds bounds{};
  bounds.alpha = 2.0 * r_min;
  bounds.beta = 2.0 * std::max(r_max, q_max * gain_sum * gain_sum);
  const double state_bound = power_sum * (b_norm * action_radius + disturbance_bound);
  bounds.G = q_max * state_bound * state_bound + r_max * action_radius * action_radius;
  return bounds;
}

}  // namespace dynaboost
