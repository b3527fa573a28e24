#include "dynaboost/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace dynaboost {

double spectral_radius(const Mat& a, int max_squarings) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw std::invalid_argument("spectral_radius: need a non-empty square matrix");
  }
  if (!a.allFinite()) throw std::invalid_argument("spectral_radius: non-finite entry");
  if (a.rows() == 1) return std::abs(a(0, 0));

  // Invariant: a^(2^m) == power * exp(log_scale).
  Mat power = a;
  double log_scale = 0.0;
  double exponent = 1.0;
  double previous = -1.0;
  for (int m = 0; m <= max_squarings; ++m) {
    const double norm = power.norm();
    if (norm == 0.0) return 0.0;
    if (!std::isfinite(norm)) break;
    power /= norm;
    log_scale += std::log(norm);
    const double estimate = std::exp(log_scale / exponent);
    if (previous >= 0.0 && std::abs(estimate - previous) <= 1e-12 * estimate) {
      return estimate;
    }
    previous = estimate;
    power = power * power;
    log_scale *= 2.0;
    exponent *= 2.0;
  }
  throw std::runtime_error("spectral_radius: power iteration did not converge");
}

LinearSystem::LinearSystem(Mat a, Mat b) : a_(std::move(a)), b_(std::move(b)) {
  if (a_.rows() < 1 || a_.rows() != a_.cols()) {
    throw std::invalid_argument("LinearSystem: A must be square and non-empty");
  }
  if (b_.rows() != a_.rows() || b_.cols() < 1) {
    throw std::invalid_argument("LinearSystem: B must be k x d with d >= 1");
  }
  if (!a_.allFinite() || !b_.allFinite()) {
    throw std::invalid_argument("LinearSystem: non-finite entry");
  }
  spectral_radius_ = dynaboost::spectral_radius(a_);
  if (spectral_radius_ >= 1.0) {
    std::cerr << "warning: LinearSystem has spectral radius " << spectral_radius_
              << " >= 1; zero feedback leaves the open loop unstable\n";
  }
}

PendulumSystem::PendulumSystem(PendulumParams params) : params_(params) {
  const auto& p = params_;
  if (!(p.dt > 0.0) || !(p.max_torque > 0.0) || !(p.max_speed > 0.0) ||
      !(p.mass > 0.0) || !(p.length > 0.0) || !std::isfinite(p.gravity)) {
    throw std::invalid_argument("PendulumSystem: dt, mass, length, caps must be positive");
  }
}

Index state_dim(const SystemModel& sys) {
  return std::visit([](const auto& s) { return s.state_dim(); }, sys);
}

Index action_dim(const SystemModel& sys) {
  return std::visit([](const auto& s) { return s.action_dim(); }, sys);
}

double wrap_angle(double theta) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double r = std::fmod(theta + std::numbers::pi, kTwoPi);
  if (r <= 0.0) r += kTwoPi;
  return r - std::numbers::pi;
}

Vec lds_step(const LinearSystem& sys, const Vec& x, const Vec& u, const Vec& w) {
  require_dim(x, sys.state_dim(), "lds_step state");
  require_dim(u, sys.action_dim(), "lds_step action");
  require_dim(w, sys.state_dim(), "lds_step disturbance");
  return sys.A() * x + sys.B() * u + w;
}

namespace {

struct PendulumTerms {
  double torque;
  double speed;
  bool torque_saturated;
  bool speed_saturated;
};

PendulumTerms pendulum_terms(const PendulumParams& p, double theta, double theta_dot,
                             double u) {
  PendulumTerms terms{};
  terms.torque_saturated = std::abs(u) >= p.max_torque;
  terms.torque = std::clamp(u, -p.max_torque, p.max_torque);
  const double accel = 3.0 * p.gravity / (2.0 * p.length) * std::sin(theta) +
                       3.0 / (p.mass * p.length * p.length) * terms.torque;
  const double raw_speed = theta_dot + accel * p.dt;
  terms.speed_saturated = std::abs(raw_speed) >= p.max_speed;
  terms.speed = std::clamp(raw_speed, -p.max_speed, p.max_speed);
  return terms;
}

void check_pendulum_inputs(const Vec& x, const Vec& u) {
  require_dim(x, 2, "pendulum state");
  require_dim(u, 1, "pendulum action");
  if (!x.allFinite() || !u.allFinite()) {
    throw std::invalid_argument("pendulum_step: non-finite input");
  }
}

}  // namespace

Vec pendulum_step(const PendulumSystem& sys, const Vec& x, const Vec& u, const Vec& w) {
  check_pendulum_inputs(x, u);
  require_dim(w, 2, "pendulum disturbance");
  const auto& p = sys.params();
  const PendulumTerms terms = pendulum_terms(p, x[0], x[1], u[0]);
  Vec next(2);
  next[0] = wrap_angle(x[0] + terms.speed * p.dt) + w[0];
  next[1] = terms.speed + w[1];
  return next;
}

Vec step(const SystemModel& sys, const Vec& x, const Vec& u, const Vec& w) {
  return std::visit(
      [&](const auto& s) -> Vec {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, LinearSystem>) {
          return lds_step(s, x, u, w);
        } else {
          return pendulum_step(s, x, u, w);
        }
      },
      sys);
}

Vec nominal_step(const SystemModel& sys, const Vec& x, const Vec& u) {
  return step(sys, x, u, Vec::Zero(state_dim(sys)));
}

StepJacobians step_jacobians(const SystemModel& sys, const Vec& x, const Vec& u) {
  if (const auto* lds = std::get_if<LinearSystem>(&sys)) {
    require_dim(x, lds->state_dim(), "step_jacobians state");
    require_dim(u, lds->action_dim(), "step_jacobians action");
    return {lds->A(), lds->B()};
  }
  const auto& p = std::get<PendulumSystem>(sys).params();
  check_pendulum_inputs(x, u);
  const PendulumTerms terms = pendulum_terms(p, x[0], x[1], u[0]);
  const double pass = terms.speed_saturated ? 0.0 : 1.0;
  const double torque_pass = terms.torque_saturated ? 0.0 : 1.0;
  const double dspeed_dtheta = pass * 3.0 * p.gravity / (2.0 * p.length) * std::cos(x[0]) * p.dt;
  const double dspeed_dspeed = pass;
  const double dspeed_du = pass * torque_pass * 3.0 / (p.mass * p.length * p.length) * p.dt;

  StepJacobians j{Mat(2, 2), Mat(2, 1)};
  j.wrt_state << 1.0 + p.dt * dspeed_dtheta, p.dt * dspeed_dspeed,
                 dspeed_dtheta, dspeed_dspeed;
  j.wrt_action << p.dt * dspeed_du, dspeed_du;
  return j;
}

LinearSystem linearize_upright(const PendulumSystem& sys) {
  StepJacobians j = step_jacobians(SystemModel(sys), Vec::Zero(2), Vec::Zero(1));
  return LinearSystem(std::move(j.wrt_state), std::move(j.wrt_action));
}

LinearSystem random_lds(RngStream& rng, Index k, Index d, double rho_target) {
  if (k < 1 || d < 1) throw std::invalid_argument("random_lds: k and d must be >= 1");
  if (!(rho_target > 0.0 && rho_target < 1.0)) {
    throw std::invalid_argument("random_lds: rho_target must lie in (0, 1)");
  }
  Mat a(k, k);
  for (Index r = 0; r < k; ++r) {
    for (Index c = 0; c < k; ++c) a(r, c) = rng.normal();
  }
  Mat b(k, d);
  const double b_scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (Index r = 0; r < k; ++r) {
    for (Index c = 0; c < d; ++c) b(r, c) = rng.normal() * b_scale;
  }
  if (k == 1) {
    a(0, 0) = std::copysign(rho_target, a(0, 0));
  } else {
    const double rho = spectral_radius(a);
    if (rho == 0.0) throw std::runtime_error("random_lds: drew a nilpotent A");
    a *= rho_target / rho;
  }
  return LinearSystem(std::move(a), std::move(b));
}

Vec random_walk_update(const Vec& prev, const Vec& increment, double lo, double hi) {
  if (prev.size() != increment.size()) {
    throw std::invalid_argument("random_walk_update: dimension mismatch");
  }
  return clip_componentwise(prev + increment, lo, hi);
}

DisturbanceGenerator::DisturbanceGenerator(DisturbanceSpec spec, Index dim, RngStream rng)
    : spec_(spec), dim_(dim), rng_(rng), previous_(Vec::Zero(dim)) {
  if (dim < 1) throw std::invalid_argument("DisturbanceGenerator: dim must be >= 1");
  if (auto* iid = std::get_if<IidGaussian>(&spec_)) {
    if (!(iid->std >= 0.0)) throw std::invalid_argument("iid disturbance: std must be >= 0");
    if (iid->cap < 0.0) throw std::invalid_argument("iid disturbance: cap must be >= 0");
    if (iid->cap == 0.0) iid->cap = 5.0 * iid->std * std::sqrt(static_cast<double>(dim));
  } else if (const auto* walk = std::get_if<RandomWalk>(&spec_)) {
    if (!(walk->std >= 0.0)) throw std::invalid_argument("random walk: std must be >= 0");
    if (!(walk->lo < walk->hi)) throw std::invalid_argument("random walk: need lo < hi");
    previous_ = clip_componentwise(previous_, walk->lo, walk->hi);
  }
}

Vec DisturbanceGenerator::next(long t) {
  if (t < 0 || t <= last_round_) {
    throw std::invalid_argument("DisturbanceGenerator::next: rounds must strictly increase (got " +
                                std::to_string(t) + " after " + std::to_string(last_round_) + ")");
  }
  last_round_ = t;
  return std::visit(
      [&](const auto& s) -> Vec {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, IidGaussian>) {
          Vec w = gaussian(rng_, Vec::Zero(dim_), s.std);
          if (s.cap > 0.0) w = project_to_ball(w, BallSet(s.cap, dim_));
          return w;
        } else if constexpr (std::is_same_v<S, RandomWalk>) {
          Vec increment = gaussian(rng_, Vec::Zero(dim_), s.std);
          previous_ = random_walk_update(previous_, increment, s.lo, s.hi);
          return previous_;
        } else {
          const double value = std::sin(static_cast<double>(t)) / (2.0 * std::numbers::pi);
          return Vec::Constant(dim_, value);
        }
      },
      spec_);
}

double DisturbanceGenerator::bound() const {
  const double root_dim = std::sqrt(static_cast<double>(dim_));
  return std::visit(
      [&](const auto& s) -> double {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, IidGaussian>) {
          return s.cap;
        } else if constexpr (std::is_same_v<S, RandomWalk>) {
          return std::max(std::abs(s.lo), std::abs(s.hi)) * root_dim;
        } else {
          return root_dim / (2.0 * std::numbers::pi);
        }
      },
      spec_);
}

Vec infer_disturbance(const SystemModel& sys, const Vec& x, const Vec& u, const Vec& x_next) {
  require_dim(x_next, state_dim(sys), "infer_disturbance next state");
  return x_next - nominal_step(sys, x, u);
}

Vec counterfactual_state(const SystemModel& sys, const Vec& x_start,
                         std::span<const Vec> actions,
                         std::span<const Vec> disturbances) {
  if (actions.size() != disturbances.size()) {
    throw std::invalid_argument("counterfactual_state: " + std::to_string(actions.size()) +
                                " actions vs " + std::to_string(disturbances.size()) +
                                " disturbances");
  }
  require_dim(x_start, state_dim(sys), "counterfactual_state start");
  Vec x = x_start;
  for (std::size_t s = 0; s < actions.size(); ++s) x = step(sys, x, actions[s], disturbances[s]);
  return x;
}

std::vector<Vec> replay_states(const SystemModel& sys, const Trajectory& trajectory) {
  if (trajectory.states.empty()) throw std::invalid_argument("replay_states: no initial state");
  if (trajectory.actions.size() != trajectory.disturbances.size()) {
    throw std::invalid_argument("replay_states: actions and disturbances differ in length");
  }
  std::vector<Vec> states{trajectory.states.front()};
  states.reserve(trajectory.rounds() + 1);
  for (std::size_t t = 0; t < trajectory.rounds(); ++t) {
    states.push_back(step(sys, states.back(), trajectory.actions[t], trajectory.disturbances[t]));
  }
  return states;
}

}  // namespace dynaboost
