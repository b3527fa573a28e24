#include "dynaboost/controllers.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>
#include <string>

namespace dynaboost {

LossHistory::LossHistory(int memory, std::span<const Vec> disturbances,
                         std::span<const Vec> states)
    : memory_(memory), disturbances_(disturbances), states_(states) {
  if (memory < 1) throw std::invalid_argument("LossHistory: memory must be >= 1");
  if (static_cast<int>(disturbances.size()) != 2 * memory - 1) {
    throw std::invalid_argument("LossHistory: expected " + std::to_string(2 * memory - 1) +
                                " disturbances, got " + std::to_string(disturbances.size()));
  }
  if (static_cast<int>(states.size()) != memory) {
    throw std::invalid_argument("LossHistory: expected " + std::to_string(memory) +
                                " states, got " + std::to_string(states.size()));
  }
}

Observation LossHistory::observation(int slot) const {
  if (slot < 0 || slot >= memory_) throw std::out_of_range("LossHistory::observation");
  // Slot j is round t-H+1+j, which saw w_{t-2H+1+j} .. w_{t-H+j}.
  const auto j = static_cast<std::size_t>(slot);
  return Observation{states_[j], disturbances_.subspan(j, static_cast<std::size_t>(memory_))};
}

LearningRate::LearningRate(Kind kind, double scale) : kind_(kind), scale_(scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::invalid_argument("learning rate scale must be positive");
  }
}

double LearningRate::at(long update, double grad_sq_sum, double diameter) const {
  switch (kind_) {
    case Kind::kConstant:
      return scale_;
    case Kind::kInverseSqrt:
      return scale_ / std::sqrt(static_cast<double>(std::max(update, 1L)));
    case Kind::kAdaptive:
      return grad_sq_sum > 0.0 ? scale_ * diameter / std::sqrt(grad_sq_sum) : 0.0;
  }
  return scale_;
}

namespace {

void check_gpc_options(const GpcOptions& options) {
  if (options.memory < 1) throw std::invalid_argument("GPC memory must be >= 1");
  if (!(options.radius_m > 0.0)) throw std::invalid_argument("GPC radius_m must be positive");
}

}  // namespace

GpcController::GpcController(Index state_dim, Index action_dim, BallSet action_set,
                             GpcOptions options)
    : GpcController(Mat::Zero(action_dim, state_dim), action_set, options) {}

GpcController::GpcController(Mat feedback, BallSet action_set, GpcOptions options)
    : WeakController(action_set), k_(std::move(feedback)), options_(options) {
  check_gpc_options(options_);
  if (k_.rows() != action_set.dim()) {
    throw std::invalid_argument("GPC feedback rows must match the action dimension");
  }
  if (!all_finite(k_)) throw std::invalid_argument("GPC feedback has non-finite entries");
  m_.assign(static_cast<std::size_t>(options_.memory), Mat::Zero(k_.rows(), k_.cols()));
}

Vec GpcController::act(const Observation& obs) const {
  require_dim(obs.state, k_.cols(), "GPC state");
  if (static_cast<int>(obs.disturbances.size()) != options_.memory) {
    throw std::invalid_argument("GPC: observation window does not match memory");
  }
  Vec u = -(k_ * obs.state);
  for (int i = 1; i <= options_.memory; ++i) u.noalias() += m_[static_cast<std::size_t>(i - 1)] * obs.lag(i);
  return project_to_ball(u, action_set());
}

std::vector<Mat> GpcController::parameter_gradient(const ResidualLoss& loss,
                                                   const LossHistory& history) const {
  const int h = options_.memory;
  if (residual_memory(loss) != h || history.memory() != h) {
    throw std::invalid_argument("GPC: loss or history memory does not match");
  }
  const bool quadratic = std::holds_alternative<QuadraticResidualLoss>(loss);
  std::vector<Mat> grad(static_cast<std::size_t>(h), Mat::Zero(k_.rows(), k_.cols()));
  for (int j = 0; j < h; ++j) {
    const Observation obs = history.observation(j);
    const Vec g = residual_slot_gradient(loss, j, quadratic ? act(obs) : Vec());
    for (int k = 1; k <= h; ++k) grad[static_cast<std::size_t>(k - 1)].noalias() += g * obs.lag(k).transpose();
  }
  return grad;
}

void GpcController::receive_loss(const ResidualLoss& loss, const LossHistory& history) {
  std::vector<Mat> grad = parameter_gradient(loss, history);
  double sq = 0.0;
  for (const auto& g : grad) sq += g.squaredNorm();
  ++updates_;
  grad_sq_sum_ += sq;
  last_step_ = options_.learning_rate.at(updates_, grad_sq_sum_, 2.0 * options_.radius_m);
  for (std::size_t i = 0; i < m_.size(); ++i) m_[i] -= last_step_ * grad[i];
  project_frobenius(m_, options_.radius_m);
}

std::size_t GpcController::parameter_count() const {
  return m_.size() * static_cast<std::size_t>(k_.size());
}

void GpcController::set_M(std::vector<Mat> m) {
  if (m.size() != m_.size()) throw std::invalid_argument("GPC set_M: wrong number of blocks");
  for (const auto& block : m) require_shape(block, k_.rows(), k_.cols(), "GPC M block");
  m_ = std::move(m);
  project_frobenius(m_, options_.radius_m);
}

ElmanWeights ElmanWeights::zeros(Index input_dim, Index hidden, Index output_dim) {
  return ElmanWeights{Mat::Zero(hidden, hidden), Mat::Zero(hidden, input_dim), Vec::Zero(hidden),
                      Mat::Zero(output_dim, hidden), Vec::Zero(output_dim)};
}

std::size_t ElmanWeights::size() const {
  return static_cast<std::size_t>(w_h.size() + w_x.size() + b_h.size() + w_o.size() + b_o.size());
}

Vec ElmanWeights::flatten() const {
  Vec flat(static_cast<Index>(size()));
  Index at = 0;
  auto put = [&](const auto& m) {
    flat.segment(at, m.size()) = m.reshaped();
    at += m.size();
  };
  put(w_h);
  put(w_x);
  put(b_h);
  put(w_o);
  put(b_o);
  return flat;
}

ElmanWeights ElmanWeights::unflatten(const Vec& flat) const {
  if (flat.size() != static_cast<Index>(size())) {
    throw std::invalid_argument("ElmanWeights::unflatten: size mismatch");
  }
  ElmanWeights out = *this;
  Index at = 0;
  auto take = [&](auto& m) {
    m.reshaped() = flat.segment(at, m.size());
    at += m.size();
  };
  take(out.w_h);
  take(out.w_x);
  take(out.b_h);
  take(out.w_o);
  take(out.b_o);
  return out;
}

std::size_t RecurrentController::parameter_count_for(Index input_dim, Index hidden,
                                                     Index output_dim) {
  return static_cast<std::size_t>(hidden * hidden + hidden * input_dim + hidden +
                                  output_dim * hidden + output_dim);
}

RecurrentController::RecurrentController(Index input_dim, Index action_dim, BallSet action_set,
                                         RecurrentOptions options, RngStream& init_rng)
    : WeakController(action_set), options_(options) {
  if (options.memory < 1 || options.hidden < 1) {
    throw std::invalid_argument("RNN memory and hidden size must be >= 1");
  }
  if (!(options.learning_rate > 0.0) || !(options.clip_norm > 0.0) || !(options.init_scale >= 0.0)) {
    throw std::invalid_argument("RNN learning_rate and clip_norm must be positive");
  }
  if (action_dim != action_set.dim()) {
    throw std::invalid_argument("RNN output size must match the action dimension");
  }
  weights_ = ElmanWeights::zeros(input_dim, options.hidden, action_dim);
  auto fill = [&](Mat& m) {
    const double s = options_.init_scale / std::sqrt(static_cast<double>(m.cols()));
    for (Index c = 0; c < m.cols(); ++c) {
      for (Index r = 0; r < m.rows(); ++r) m(r, c) = s * init_rng.normal();
    }
  };
  fill(weights_.w_h);
  fill(weights_.w_x);
  fill(weights_.w_o);
}

std::pair<Vec, ElmanCache> RecurrentController::forward(std::span<const Vec> window) const {
  ElmanCache cache;
  cache.hidden.reserve(window.size() + 1);
  cache.hidden.push_back(Vec::Zero(weights_.w_h.rows()));
  for (const auto& w : window) {
    require_dim(w, weights_.w_x.cols(), "RNN input");
    Vec pre = weights_.w_h * cache.hidden.back() + weights_.w_x * w + weights_.b_h;
    cache.hidden.push_back(pre.array().tanh().matrix());
  }
  cache.output = weights_.w_o * cache.hidden.back() + weights_.b_o;
  Vec u = project_to_ball(cache.output, action_set());
  return {std::move(u), std::move(cache)};
}

Vec RecurrentController::act(const Observation& obs) const {
  if (static_cast<int>(obs.disturbances.size()) != options_.memory) {
    throw std::invalid_argument("RNN: observation window does not match memory");
  }
  return forward(obs.disturbances).first;
}

ElmanWeights RecurrentController::gradient(const ResidualLoss& loss,
                                           const LossHistory& history) const {
  const int h = options_.memory;
  if (residual_memory(loss) != h || history.memory() != h) {
    throw std::invalid_argument("RNN: loss or history memory does not match");
  }
  ElmanWeights grad = ElmanWeights::zeros(weights_.w_x.cols(), weights_.w_h.rows(),
                                          weights_.w_o.rows());
  for (int j = options_.last_slot_only ? h - 1 : 0; j < h; ++j) {
    const Observation obs = history.observation(j);
    auto [u, cache] = forward(obs.disturbances);
    const Vec g = residual_slot_gradient(loss, j, u);

    grad.w_o.noalias() += g * cache.hidden.back().transpose();
    grad.b_o += g;
    Vec dh = weights_.w_o.transpose() * g;
    for (std::size_t s = obs.disturbances.size(); s > 0; --s) {
      const Vec& hs = cache.hidden[s];
      const Vec dpre = dh.array() * (1.0 - hs.array().square());
      grad.w_h.noalias() += dpre * cache.hidden[s - 1].transpose();
      grad.w_x.noalias() += dpre * obs.disturbances[s - 1].transpose();
      grad.b_h += dpre;
      dh = weights_.w_h.transpose() * dpre;
    }
  }
  return grad;
}

void RecurrentController::receive_loss(const ResidualLoss& loss, const LossHistory& history) {
  Vec g = gradient(loss, history).flatten();
  if (!g.allFinite()) {
    ++skipped_updates_;
    std::cerr << "warning: RNN gradient is not finite, update skipped\n";
    return;
  }
  const double norm = g.norm();
  if (norm > options_.clip_norm) g *= options_.clip_norm / norm;
  weights_ = weights_.unflatten(weights_.flatten() - options_.learning_rate * g);
}

void RecurrentController::set_weights(ElmanWeights weights) {
  if (weights.size() != weights_.size() || weights.w_h.rows() != weights_.w_h.rows() ||
      weights.w_x.cols() != weights_.w_x.cols() || weights.w_o.rows() != weights_.w_o.rows()) {
    throw std::invalid_argument("RNN set_weights: shape mismatch");
  }
  weights_ = std::move(weights);
}

namespace {

Mat riccati_map(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, const Mat& P) {
  const Mat bp_a = B.transpose() * P * A;
  const Mat s = R + B.transpose() * P * B;
  return Q + A.transpose() * P * A - bp_a.transpose() * s.ldlt().solve(bp_a);
}

}  // namespace

double dare_residual(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, const Mat& P) {
  return (riccati_map(A, B, Q, R, P) - P).cwiseAbs().maxCoeff();
}

DareSolution solve_dare(const Mat& A, const Mat& B, const Mat& Q, const Mat& R, double tol,
                        int max_iter) {
  const Index k = A.rows();
  const Index d = B.cols();
  require_shape(A, k, k, "DARE A");
  require_shape(B, k, d, "DARE B");
  require_shape(Q, k, k, "DARE Q");
  require_shape(R, d, d, "DARE R");
  if (!all_finite(A) || !all_finite(B) || !all_finite(Q) || !all_finite(R)) {
    throw std::invalid_argument("DARE: non-finite input");
  }
  if (B.cwiseAbs().maxCoeff() == 0.0) {
    throw std::invalid_argument("DARE: B is zero, the control problem is degenerate");
  }
  Eigen::LLT<Mat> r_chol(R);
  if (r_chol.info() != Eigen::Success) {
    throw std::invalid_argument("DARE: R must be positive definite");
  }

  Mat P = Q;
  for (int it = 1; it <= max_iter; ++it) {
    Mat next = riccati_map(A, B, Q, R, P);
    next = 0.5 * (next + next.transpose());
    if (!next.allFinite()) break;
    const double diff = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    if (diff <= tol * std::max(1.0, P.cwiseAbs().maxCoeff())) {
      const Mat s = R + B.transpose() * P * B;
      Mat K = s.ldlt().solve(B.transpose() * P * A);
      return DareSolution{P, std::move(K), it, dare_residual(A, B, Q, R, P)};
    }
  }
  throw std::runtime_error("DARE: Riccati iteration did not converge; check that (A, B) is "
                           "stabilizable");
}

LqrController::LqrController(Mat gain, BallSet action_set)
    : WeakController(action_set), gain_(std::move(gain)) {
  if (gain_.rows() != action_set.dim()) {
    throw std::invalid_argument("LQR gain rows must match the action dimension");
  }
  if (!all_finite(gain_)) throw std::invalid_argument("LQR gain has non-finite entries");
}

LqrController LqrController::from_system(const LinearSystem& sys, const QuadraticCost& cost,
                                         BallSet action_set) {
  return LqrController(solve_dare(sys.A(), sys.B(), cost.Q(), cost.R()).K, action_set);
}

Vec LqrController::act(const Observation& obs) const {
  require_dim(obs.state, gain_.cols(), "LQR state");
  return project_to_ball(-(gain_ * obs.state), action_set());
}

Vec zero_act(Index action_dim) { return Vec::Zero(action_dim); }

}  // namespace dynaboost
