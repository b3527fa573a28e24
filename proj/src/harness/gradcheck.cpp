#include "dynaboost/harness/gradcheck.hpp"

#include <algorithm>
#include <functional>

#include "dynaboost/controllers.hpp"
#include "dynaboost/dynamics.hpp"
#include "dynaboost/losses.hpp"

namespace dynaboost::harness {

namespace {

constexpr double kStep = 1e-5;
constexpr int kMemory = 5;

Vec central_difference(const std::function<double(const Vec&)>& f, const Vec& at) {
  Vec g(at.size());
  Vec probe = at;
  for (Index i = 0; i < at.size(); ++i) {
    probe[i] = at[i] + kStep;
    const double up = f(probe);
    probe[i] = at[i] - kStep;
    const double down = f(probe);
    probe[i] = at[i];
    g[i] = (up - down) / (2.0 * kStep);
  }
  return g;
}

double rel_error(const Vec& analytic, const Vec& numeric) {
  return (analytic - numeric).norm() / std::max(numeric.norm(), 1e-8);
}

Vec normal_vec(RngStream& rng, Index n, double scale) { return gaussian(rng, Vec::Zero(n), scale); }

std::vector<Vec> normal_vecs(RngStream& rng, std::size_t count, Index n, double scale) {
  std::vector<Vec> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(normal_vec(rng, n, scale));
  return out;
}

Mat random_spd(RngStream& rng, Index n) {
  Mat l(n, n);
  for (Index i = 0; i < l.size(); ++i) l.data()[i] = rng.normal();
  return l * l.transpose() + 0.1 * Mat::Identity(n, n);
}

Vec stack(const std::vector<Vec>& parts) {
  Index n = 0;
  for (const auto& p : parts) n += p.size();
  Vec out(n);
  Index at = 0;
  for (const auto& p : parts) {
    out.segment(at, p.size()) = p;
    at += p.size();
  }
  return out;
}

std::vector<Vec> unstack(const Vec& flat, std::size_t count, Index n) {
  std::vector<Vec> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(flat.segment(static_cast<Index>(i) * n, n));
  return out;
}

Vec stack_blocks(const std::vector<Mat>& blocks) {
  std::vector<Vec> parts;
  for (const auto& b : blocks) parts.push_back(Eigen::Map<const Vec>(b.data(), b.size()));
  return stack(parts);
}

std::vector<Mat> unstack_blocks(const Vec& flat, std::size_t count, Index rows, Index cols) {
  std::vector<Mat> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(Eigen::Map<const Mat>(flat.data() + static_cast<Index>(i) * rows * cols, rows, cols));
  }
  return out;
}

ResidualLoss random_residual(RngStream& rng, Index d, bool quadratic) {
  auto grads = normal_vecs(rng, kMemory, d, 1.0);
  if (!quadratic) return LinearResidualLoss(std::move(grads));
  return QuadraticResidualLoss(std::move(grads), normal_vecs(rng, kMemory, d, 0.5), 0.3 + rng.uniform());
}

template <class Controller>
double residual_of(const Controller& c, const ResidualLoss& loss, const LossHistory& history) {
  std::vector<Vec> actions;
  for (int j = 0; j < kMemory; ++j) actions.push_back(c.act(history.observation(j)));
  return eval_residual(loss, actions);
}

GradcheckResult proxy_lds(RngStream& rng, int points) {
  GradcheckResult r{"proxy_window_grad (lds)", points, 0.0, 1e-5};
  const Index k = 3, d = 2;
  for (int p = 0; p < points; ++p) {
    const SystemModel sys = random_lds(rng, k, d, 0.9);
    const QuadraticCost cost(random_spd(rng, k), random_spd(rng, d));
    const auto w = normal_vecs(rng, kMemory - 1, k, 0.5);
    const ProxyLossContext ctx(sys, cost, kMemory, w);
    const Vec at = stack(normal_vecs(rng, kMemory, d, 1.0));
    const auto f = [&](const Vec& v) { return eval_proxy(ctx, unstack(v, kMemory, d)); };
    const Vec analytic = stack(proxy_window_grad(ctx, unstack(at, kMemory, d)));
    r.max_rel_error = std::max(r.max_rel_error, rel_error(analytic, central_difference(f, at)));
  }
  return r;
}

GradcheckResult proxy_pendulum(RngStream& rng, int points) {
  GradcheckResult r{"proxy_window_grad (pendulum)", points, 0.0, 1e-5};
  const SystemModel sys = PendulumSystem{};
  const QuadraticCost cost = QuadraticCost::identity(2, 1);
  for (int p = 0; p < points; ++p) {
    // Small torques and disturbances keep the rollout away from the clips.
    const auto w = normal_vecs(rng, kMemory - 1, 2, 0.05);
    const ProxyLossContext ctx(sys, cost, kMemory, w);
    Vec at(kMemory);
    for (Index i = 0; i < at.size(); ++i) at[i] = 2.0 * rng.uniform() - 1.0;
    const auto f = [&](const Vec& v) { return eval_proxy(ctx, unstack(v, kMemory, 1)); };
    const Vec analytic = stack(proxy_window_grad(ctx, unstack(at, kMemory, 1)));
    r.max_rel_error = std::max(r.max_rel_error, rel_error(analytic, central_difference(f, at)));
  }
  return r;
}

GradcheckResult gpc(RngStream& rng, int points) {
  GradcheckResult r{"gpc parameter gradient", points, 0.0, 1e-5};
  const Index k = 3, d = 2;
  const BallSet wide(1e6, d);
  for (int p = 0; p < points; ++p) {
    Mat feedback(d, k);
    for (Index i = 0; i < feedback.size(); ++i) feedback.data()[i] = 0.3 * rng.normal();
    GpcController c(feedback, wide, GpcOptions{kMemory, 1e6, {LearningRate::Kind::kConstant, 0.1}});
    std::vector<Mat> m;
    for (int i = 0; i < kMemory; ++i) {
      Mat b(d, k);
      for (Index j = 0; j < b.size(); ++j) b.data()[j] = 0.3 * rng.normal();
      m.push_back(b);
    }
    c.set_M(m);
    const auto w = normal_vecs(rng, 2 * kMemory - 1, k, 1.0);
    const auto x = normal_vecs(rng, kMemory, k, 1.0);
    const LossHistory history(kMemory, w, x);
    const ResidualLoss loss = random_residual(rng, d, p % 2 == 1);

    GpcController probe = c;
    const auto f = [&](const Vec& v) {
      probe.set_M(unstack_blocks(v, kMemory, d, k));
      return residual_of(probe, loss, history);
    };
    const Vec analytic = stack_blocks(c.parameter_gradient(loss, history));
    const Vec numeric = central_difference(f, stack_blocks(c.M()));
    r.max_rel_error = std::max(r.max_rel_error, rel_error(analytic, numeric));
  }
  return r;
}

GradcheckResult rnn(RngStream& rng, int points) {
  GradcheckResult r{"rnn bptt gradient", points, 0.0, 1e-4};
  const Index k = 3, d = 2;
  const BallSet wide(1e6, d);
  for (int p = 0; p < points; ++p) {
    RecurrentOptions opt;
    opt.memory = kMemory;
    opt.hidden = 4;
    opt.init_scale = 1.0;
    RecurrentController c(k, d, wide, opt, rng);
    ElmanWeights w0 = c.weights();
    w0.b_h = normal_vec(rng, w0.b_h.size(), 0.3);
    w0.b_o = normal_vec(rng, w0.b_o.size(), 0.3);
    c.set_weights(w0);
    const auto w = normal_vecs(rng, 2 * kMemory - 1, k, 1.0);
    const auto x = normal_vecs(rng, kMemory, k, 1.0);
    const LossHistory history(kMemory, w, x);
    const ResidualLoss loss = random_residual(rng, d, p % 2 == 1);

    RecurrentController probe = c;
    const auto f = [&](const Vec& v) {
      probe.set_weights(w0.unflatten(v));
      return residual_of(probe, loss, history);
    };
    const Vec analytic = c.gradient(loss, history).flatten();
    r.max_rel_error = std::max(r.max_rel_error, rel_error(analytic, central_difference(f, w0.flatten())));
  }
  return r;
}

}  // namespace

std::vector<GradcheckResult> run_gradchecks(std::uint64_t seed, int points) {
  RngStream rng(seed);
  return {proxy_lds(rng, points), proxy_pendulum(rng, points), gpc(rng, points), rnn(rng, points)};
}

}  // namespace dynaboost::harness
