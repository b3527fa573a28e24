#pragma once

// Weak controllers behind one act/receive_loss contract, plus the LQR
// baseline and its Riccati solver.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "dynaboost/core.hpp"
#include "dynaboost/losses.hpp"

namespace dynaboost {

// What a controller sees at round t. Non-owning.
struct Observation {
  const Vec& state;
  // w_{t-H} .. w_{t-1}, oldest first, zero-padded before round H+1.
  std::span<const Vec> disturbances;

  // lag(i) == w_{t-i}.
  const Vec& lag(int i) const { return disturbances[disturbances.size() - static_cast<std::size_t>(i)]; }
};

// Histories covering the H rounds a residual loss refers to. Non-owning.
class LossHistory {
 public:
  // disturbances: w_{t-2H+1} .. w_{t-1} (2H-1 entries).
  // states: x_{t-H+1} .. x_t (H entries).
  LossHistory(int memory, std::span<const Vec> disturbances, std::span<const Vec> states);

  int memory() const { return memory_; }

  // The observation that produced the window action in `slot` (0 is the
  // oldest, round t-H+1; memory()-1 is round t).
  Observation observation(int slot) const;

 private:
  int memory_;
  std::span<const Vec> disturbances_;
  std::span<const Vec> states_;
};

class WeakController {
 public:
  explicit WeakController(BallSet action_set) : action_set_(action_set) {}
  virtual ~WeakController() = default;

  // Always lands in action_set().
  virtual Vec act(const Observation& obs) const = 0;
  virtual void receive_loss(const ResidualLoss& loss, const LossHistory& history) = 0;
  virtual std::size_t parameter_count() const = 0;

  const BallSet& action_set() const { return action_set_; }

 private:
  BallSet action_set_;
};

class LearningRate {
 public:
  enum class Kind {
    kConstant,     // scale
    kInverseSqrt,  // scale / sqrt(t)
    kAdaptive,     // scale * D / sqrt(sum_s |G_s|^2), i.e. D / (G_rms sqrt(t))
  };

  LearningRate(Kind kind, double scale);

  // Step for update number `update` (1-based) given the running sum of
  // squared gradient norms, including this update's.
  double at(long update, double grad_sq_sum, double diameter) const;

  Kind kind() const { return kind_; }
  double scale() const { return scale_; }

 private:
  Kind kind_;
  double scale_;
};

struct GpcOptions {
  int memory = 5;
  double radius_m = 10.0;
  LearningRate learning_rate{LearningRate::Kind::kAdaptive, 1.0};
};

// Gradient perturbation controller u = -K x + sum_i M^i w_{t-i}. K is fixed;
// the stacked M is learned by projected online gradient descent.
class GpcController : public WeakController {
 public:
  GpcController(Index state_dim, Index action_dim, BallSet action_set, GpcOptions options);
  GpcController(Mat feedback, BallSet action_set, GpcOptions options);

  Vec act(const Observation& obs) const override;
  void receive_loss(const ResidualLoss& loss, const LossHistory& history) override;
  std::size_t parameter_count() const override;

  // G_k = sum_j g_j w_{t-H+j-k}', where g_j is the residual slot gradient at
  // the action the current parameters produce for slot j.
  std::vector<Mat> parameter_gradient(const ResidualLoss& loss, const LossHistory& history) const;

  const std::vector<Mat>& M() const { return m_; }
  // Replaces M, projecting onto the Frobenius ball of radius_m.
  void set_M(std::vector<Mat> m);
  const Mat& K() const { return k_; }
  const GpcOptions& options() const { return options_; }
  double last_step_size() const { return last_step_; }

 private:
  Mat k_;
  std::vector<Mat> m_;
  GpcOptions options_;
  long updates_ = 0;
  double grad_sq_sum_ = 0.0;
  double last_step_ = 0.0;
};

struct ElmanWeights {
  Mat w_h;  // hidden x hidden
  Mat w_x;  // hidden x input
  Vec b_h;  // hidden
  Mat w_o;  // output x hidden
  Vec b_o;  // output

  static ElmanWeights zeros(Index input_dim, Index hidden, Index output_dim);
  std::size_t size() const;
  Vec flatten() const;
  // Inverse of flatten(), taking shapes from *this.
  ElmanWeights unflatten(const Vec& flat) const;
};

struct ElmanCache {
  std::vector<Vec> hidden;  // h_0 .. h_H
  Vec output;               // W_o h_H + b_o, before projection
};

struct RecurrentOptions {
  int memory = 5;
  int hidden = 5;
  double learning_rate = 0.01;
  double clip_norm = 5.0;
  double init_scale = 0.3;
  // Credit only the newest window slot instead of all H.
  bool last_slot_only = false;
};

// Elman network over the disturbance window:
//   h_s = tanh(W_h h_{s-1} + W_x w_s + b_h),  u = proj(W_o h_H + b_o).
class RecurrentController : public WeakController {
 public:
  RecurrentController(Index input_dim, Index action_dim, BallSet action_set,
                      RecurrentOptions options, RngStream& init_rng);

  Vec act(const Observation& obs) const override;
  void receive_loss(const ResidualLoss& loss, const LossHistory& history) override;
  std::size_t parameter_count() const override { return weights_.size(); }

  // Forward pass over a window of disturbances, oldest first.
  std::pair<Vec, ElmanCache> forward(std::span<const Vec> window) const;

  // Backpropagation through time of sum_j g_j' u_j(theta). The projection
  // onto the action ball is passed straight through.
  ElmanWeights gradient(const ResidualLoss& loss, const LossHistory& history) const;

  const ElmanWeights& weights() const { return weights_; }
  void set_weights(ElmanWeights weights);
  const RecurrentOptions& options() const { return options_; }
  long skipped_updates() const { return skipped_updates_; }

  // Parameter count of an Elman network with these sizes.
  static std::size_t parameter_count_for(Index input_dim, Index hidden, Index output_dim);

 private:
  ElmanWeights weights_;
  RecurrentOptions options_;
  long skipped_updates_ = 0;
};

struct DareSolution {
  Mat P;
  Mat K;
  int iterations;
  double residual;  // max-abs DARE residual at P
};

// Fixed-point iteration
//   P <- Q + A'PA - A'PB (R + B'PB)^{-1} B'PA,  P_0 = Q,
// until successive iterates differ by at most tol (max-abs), then
// K = (R + B'PB)^{-1} B'PA. Throws std::runtime_error on non-convergence,
// which usually means (A, B) is not stabilizable, and std::invalid_argument
// for B == 0 or R not positive definite.
DareSolution solve_dare(const Mat& A, const Mat& B, const Mat& Q, const Mat& R,
                        double tol = 1e-12, int max_iter = 100000);

double dare_residual(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, const Mat& P);

class LqrController : public WeakController {
 public:
  LqrController(Mat gain, BallSet action_set);
  static LqrController from_system(const LinearSystem& sys, const QuadraticCost& cost,
                                   BallSet action_set);

  Vec act(const Observation& obs) const override;
  void receive_loss(const ResidualLoss&, const LossHistory&) override {}
  std::size_t parameter_count() const override { return static_cast<std::size_t>(gain_.size()); }

  const Mat& gain() const { return gain_; }

 private:
  Mat gain_;
};

Vec zero_act(Index action_dim);

class ZeroController : public WeakController {
 public:
  explicit ZeroController(BallSet action_set) : WeakController(action_set) {}

  Vec act(const Observation&) const override { return zero_act(action_set().dim()); }
  void receive_loss(const ResidualLoss&, const LossHistory&) override {}
  std::size_t parameter_count() const override { return 0; }
};

}  // namespace dynaboost
