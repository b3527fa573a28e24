#pragma once

// Simulated plants x_{t+1} = f(x_t, u_t) + w_t, the disturbance sequences
// that drive them, and counterfactual replay helpers.

#include <span>
#include <variant>
#include <vector>

#include "dynaboost/core.hpp"

namespace dynaboost {

// Spectral radius estimated from the growth rate of repeated squares,
// rho(A) = lim |A^(2^m)|^(1/2^m). Handles complex dominant pairs, where
// vector power iteration does not settle. Throws std::runtime_error if the
// estimate does not converge within `max_squarings`.
double spectral_radius(const Mat& a, int max_squarings = 64);

class LinearSystem {
 public:
  // Validates shapes and finiteness. Warns on stderr when rho(A) >= 1, since
  // a zero feedback gain then leaves an unstable open loop.
  LinearSystem(Mat a, Mat b);

  const Mat& A() const { return a_; }
  const Mat& B() const { return b_; }
  Index state_dim() const { return a_.rows(); }
  Index action_dim() const { return b_.cols(); }
  double spectral_radius() const { return spectral_radius_; }
  bool stable() const { return spectral_radius_ < 1.0; }

 private:
  Mat a_;
  Mat b_;
  double spectral_radius_;
};

// Torque-driven pendulum; theta is measured from upright.
struct PendulumParams {
  double gravity = 10.0;
  double mass = 1.0;
  double length = 1.0;
  double dt = 0.05;
  double max_torque = 2.0;
  double max_speed = 8.0;

  friend bool operator==(const PendulumParams&, const PendulumParams&) = default;
};

class PendulumSystem {
 public:
  explicit PendulumSystem(PendulumParams params = {});

  const PendulumParams& params() const { return params_; }
  static constexpr Index state_dim() { return 2; }
  static constexpr Index action_dim() { return 1; }

 private:
  PendulumParams params_;
};

using SystemModel = std::variant<LinearSystem, PendulumSystem>;

Index state_dim(const SystemModel& sys);
Index action_dim(const SystemModel& sys);

// Maps an angle to (-pi, pi].
double wrap_angle(double theta);

Vec lds_step(const LinearSystem& sys, const Vec& x, const Vec& u, const Vec& w);

// Semi-implicit Euler step: the clipped torque updates the (speed-capped)
// angular velocity, which then advances the wrapped angle. The disturbance is
// added to both coordinates afterwards.
Vec pendulum_step(const PendulumSystem& sys, const Vec& x, const Vec& u, const Vec& w);

Vec step(const SystemModel& sys, const Vec& x, const Vec& u, const Vec& w);

// f(x, u): the step without disturbance.
Vec nominal_step(const SystemModel& sys, const Vec& x, const Vec& u);

struct StepJacobians {
  Mat wrt_state;   // df/dx, k x k
  Mat wrt_action;  // df/du, k x d
};

// Jacobians of f at (x, u). For the pendulum, saturated torque or speed
// contribute zero derivative.
StepJacobians step_jacobians(const SystemModel& sys, const Vec& x, const Vec& u);

// Discrete-time linearization of the pendulum about the upright equilibrium.
LinearSystem linearize_upright(const PendulumSystem& sys);

// A with i.i.d. standard normal entries rescaled so rho(A) == rho_target;
// B with i.i.d. N(0, 1/d) entries.
LinearSystem random_lds(RngStream& rng, Index k, Index d, double rho_target);

struct IidGaussian {
  double std = 0.1;
  // Norm cap on each draw; 0 selects 5 * std * sqrt(k).
  double cap = 0.0;

  friend bool operator==(const IidGaussian&, const IidGaussian&) = default;
};

struct RandomWalk {
  double std = 0.3;
  double lo = -1.0;
  double hi = 1.0;

  friend bool operator==(const RandomWalk&, const RandomWalk&) = default;
};

// Every coordinate equals sin(t) / (2 pi).
struct Sinusoidal {
  friend bool operator==(const Sinusoidal&, const Sinusoidal&) = default;
};

using DisturbanceSpec = std::variant<IidGaussian, RandomWalk, Sinusoidal>;

// clip(prev + increment, lo, hi): one random-walk transition.
Vec random_walk_update(const Vec& prev, const Vec& increment, double lo, double hi);

class DisturbanceGenerator {
 public:
  DisturbanceGenerator(DisturbanceSpec spec, Index dim, RngStream rng);

  // Disturbance for round t. Rounds must strictly increase across calls.
  Vec next(long t);

  // W such that every emitted w satisfies |w|_2 <= W.
  double bound() const;

  const DisturbanceSpec& spec() const { return spec_; }
  Index dim() const { return dim_; }

 private:
  DisturbanceSpec spec_;
  Index dim_;
  RngStream rng_;
  Vec previous_;
  long last_round_ = -1;
};

// x_next - f(x, u).
Vec infer_disturbance(const SystemModel& sys, const Vec& x, const Vec& u, const Vec& x_next);

// Folds the dynamics over aligned (action, disturbance) pairs starting at
// x_start. With x_start = 0 and the pairs for rounds t-H+1 .. t-1 this is
// the truncated state x_hat_t.
Vec counterfactual_state(const SystemModel& sys, const Vec& x_start,
                         std::span<const Vec> actions,
                         std::span<const Vec> disturbances);

// Per-round record of one closed-loop run. states[0] is the initial state;
// round t (1-based) applies actions[t-1] and disturbances[t-1] to
// states[t-1], incurring costs[t-1].
struct Trajectory {
  std::vector<Vec> states;
  std::vector<Vec> actions;
  std::vector<Vec> disturbances;
  std::vector<double> costs;

  std::size_t rounds() const { return actions.size(); }
};

// Re-simulates states from states[0], actions and disturbances.
std::vector<Vec> replay_states(const SystemModel& sys, const Trajectory& trajectory);

}  // namespace dynaboost
