#include <gtest/gtest.h>

#include <cmath>

#include "dynaboost/losses.hpp"

namespace dynaboost {
namespace {

Vec s(double a) { return Vec::Constant(1, a); }
LinearSystem scalar(double a, double b) { return LinearSystem(Mat::Constant(1, 1, a), Mat::Constant(1, 1, b)); }

std::vector<Vec> normals(RngStream& rng, int n, Index dim) {
  std::vector<Vec> out;
  for (int i = 0; i < n; ++i) out.push_back(gaussian(rng, Vec::Zero(dim), 1.0));
  return out;
}

double window_dot(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) out += a[i].dot(b[i]);
  return out;
}

double window_sq(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) out += (a[i] - b[i]).squaredNorm();
  return out;
}

TEST(Cost, HandValues) {
  const QuadraticCost id = QuadraticCost::identity(2, 1);
  EXPECT_EQ(eval_cost(id, Vec::Zero(2), Vec::Zero(1)), 0.0);
  Vec x(2);
  x << 1, 2;
  EXPECT_DOUBLE_EQ(eval_cost(id, x, s(3)), 14.0);
  const QuadraticCost q2(Mat::Constant(1, 1, 2.0), Mat::Identity(1, 1));
  EXPECT_DOUBLE_EQ(eval_cost(q2, s(2), s(1)), 9.0);
  EXPECT_THROW(eval_cost(id, s(1), s(1)), std::invalid_argument);
}

TEST(Cost, RejectsIndefinite) {
  EXPECT_THROW(QuadraticCost(Mat::Constant(1, 1, -1.0), Mat::Identity(1, 1)), std::invalid_argument);
  Mat asym(2, 2);
  asym << 1, 2, 0, 1;
  EXPECT_THROW(QuadraticCost(asym, Mat::Identity(1, 1)), std::invalid_argument);
}

TEST(Proxy, ZeroInputsZeroLoss) {
  const SystemModel sys = scalar(0.5, 1);
  const QuadraticCost c = QuadraticCost::identity(1, 1);
  const std::vector<Vec> w(2, s(0));
  const ProxyLossContext ctx(sys, c, 3, w);
  const std::vector<Vec> u(3, s(0));
  EXPECT_EQ(eval_proxy(ctx, u), 0.0);
  for (const auto& g : proxy_window_grad(ctx, u)) EXPECT_EQ(g, s(0));
}

TEST(Proxy, TwoStepHandValue) {
  const SystemModel sys = scalar(0.5, 1);
  const QuadraticCost c = QuadraticCost::identity(1, 1);
  const std::vector<Vec> w{s(0.5)};
  const ProxyLossContext ctx(sys, c, 2, w);
  const std::vector<Vec> u{s(1), s(2)};
  EXPECT_DOUBLE_EQ(proxy_state(ctx, u)[0], 1.5);
  EXPECT_DOUBLE_EQ(eval_proxy(ctx, u), 6.25);
}

TEST(Proxy, MemoryOneIsActionCost) {
  const SystemModel sys = scalar(0.5, 1);
  const QuadraticCost c(Mat::Identity(1, 1), Mat::Constant(1, 1, 3.0));
  const ProxyLossContext ctx(sys, c, 1, {});
  const std::vector<Vec> u{s(2)};
  EXPECT_DOUBLE_EQ(eval_proxy(ctx, u), 12.0);
}

TEST(Proxy, HandGradient) {
  const SystemModel sys = scalar(0.5, 1);
  const QuadraticCost c = QuadraticCost::identity(1, 1);
  const std::vector<Vec> w{s(0)};
  const ProxyLossContext ctx(sys, c, 2, w);
  const auto g = proxy_window_grad(ctx, std::vector<Vec>{s(1), s(2)});
  ASSERT_EQ(g.size(), 2u);
  EXPECT_DOUBLE_EQ(g[0][0], 2.0);
  EXPECT_DOUBLE_EQ(g[1][0], 4.0);
}

TEST(Proxy, LdsGradientClosedForm) {
  // For an LDS the gradient of slot j < H is (A^(H-1-j) B)' 2 Q x_hat.
  RngStream rng(21);
  const LinearSystem lin = random_lds(rng, 3, 2, 0.8);
  const SystemModel sys = lin;
  const QuadraticCost c = QuadraticCost::identity(3, 2);
  const int h = 4;
  const auto w = normals(rng, h - 1, 3);
  const auto u = normals(rng, h, 2);
  const ProxyLossContext ctx(sys, c, h, w);
  const Vec x_hat = proxy_state(ctx, u);
  const auto g = proxy_window_grad(ctx, u);
  Mat power = Mat::Identity(3, 3);
  for (int j = h - 2; j >= 0; --j) {
    const Vec expected = (power * lin.B()).transpose() * (2.0 * x_hat);
    EXPECT_LT((g[static_cast<std::size_t>(j)] - expected).norm(), 1e-12);
    power = power * lin.A();
  }
  EXPECT_LT((g.back() - 2.0 * u.back()).norm(), 1e-12);
}

TEST(Proxy, ResidualIsFirstOrderTerm) {
  RngStream rng(5);
  const SystemModel sys = random_lds(rng, 2, 2, 0.9);
  const QuadraticCost c = QuadraticCost::identity(2, 2);
  const auto w = normals(rng, 4, 2);
  const ProxyLossContext ctx(sys, c, 5, w);
  const auto anchor = normals(rng, 5, 2);
  const auto dir = normals(rng, 5, 2);
  const LinearResidualLoss lin(proxy_window_grad(ctx, anchor));
  double prev = 0.0;
  for (double scale : {1e-1, 1e-2, 1e-3}) {
    std::vector<Vec> delta, moved;
    for (std::size_t j = 0; j < dir.size(); ++j) {
      delta.push_back(scale * dir[j]);
      moved.push_back(anchor[j] + delta.back());
    }
    const double rem = std::abs(eval_proxy(ctx, moved) - eval_proxy(ctx, anchor) - eval_linear_residual(lin, delta));
    if (prev > 0.0) EXPECT_NEAR(rem / prev, 0.01, 1e-3);  // quadratic in the step
    prev = rem;
  }
}

TEST(Residual, LinearValues) {
  const LinearResidualLoss l({s(2), s(4)});
  EXPECT_EQ(eval_linear_residual(l, std::vector<Vec>{s(0), s(0)}), 0.0);
  EXPECT_DOUBLE_EQ(eval_linear_residual(l, std::vector<Vec>{s(1), s(0.5)}), 4.0);
  EXPECT_THROW(eval_linear_residual(l, std::vector<Vec>{s(1)}), std::invalid_argument);
}

TEST(Residual, LinearIsLinear) {
  RngStream rng(7);
  const LinearResidualLoss l(normals(rng, 5, 3));
  for (int i = 0; i < 100; ++i) {
    const auto u = normals(rng, 5, 3), v = normals(rng, 5, 3);
    const double a = rng.normal(), b = rng.normal();
    std::vector<Vec> mix;
    for (int j = 0; j < 5; ++j) mix.push_back(a * u[j] + b * v[j]);
    EXPECT_NEAR(eval_linear_residual(l, mix), a * eval_linear_residual(l, u) + b * eval_linear_residual(l, v), 1e-12);
  }
}

TEST(Residual, QuadraticValues) {
  RngStream rng(8);
  const auto anchors = normals(rng, 3, 2);
  const QuadraticResidualLoss at(normals(rng, 3, 2), anchors, 0.7);
  EXPECT_EQ(eval_quad_residual(at, anchors), 0.0);
  const QuadraticResidualLoss one({s(2)}, {s(0)}, 1.0);
  EXPECT_DOUBLE_EQ(eval_quad_residual(one, std::vector<Vec>{s(1)}), 3.0);
  EXPECT_THROW(QuadraticResidualLoss({s(2)}, {s(0), s(1)}, 1.0), std::invalid_argument);
}

TEST(Residual, QuadraticStronglyConvex) {
  RngStream rng(10);
  const double curvature = 0.6;  // eta * beta / 2
  const QuadraticResidualLoss l(normals(rng, 4, 2), normals(rng, 4, 2), curvature);
  for (int i = 0; i < 200; ++i) {
    const auto u = normals(rng, 4, 2), v = normals(rng, 4, 2);
    std::vector<Vec> mid;
    for (int j = 0; j < 4; ++j) mid.push_back(0.5 * (u[j] + v[j]));
    // eta * beta / 8 = curvature / 4
    const double bound = 0.5 * eval_quad_residual(l, u) + 0.5 * eval_quad_residual(l, v) - curvature / 4 * window_sq(u, v);
    EXPECT_LE(eval_quad_residual(l, mid), bound + 1e-12);
  }
}

TEST(Residual, SlotGradients) {
  const LinearResidualLoss lin({s(2), s(4)});
  EXPECT_EQ(residual_slot_gradient(lin, 1, s(9)), s(4));
  const QuadraticResidualLoss quad({s(2)}, {s(1)}, 1.5);
  EXPECT_DOUBLE_EQ(residual_slot_gradient(quad, 0, s(3))[0], 2 + 2 * 1.5 * 2);
}

TEST(Curvature, MemorylessSystem) {
  const LinearSystem sys(Mat::Zero(2, 2), Mat::Zero(2, 2));
  const auto b = derive_curvature_bounds(sys, QuadraticCost::identity(2, 2), 5, 1.0, 1.0);
  // c = |u|^2 has Hessian 2I, so both constants equal 2 and alpha / beta = 1.
  EXPECT_DOUBLE_EQ(b.alpha, 2.0);
  EXPECT_DOUBLE_EQ(b.beta, 2.0);
  EXPECT_GT(b.G, 0.0);
}

TEST(Curvature, ScalarTwoStepWithinHandBound) {
  const auto b = derive_curvature_bounds(scalar(0.5, 1), QuadraticCost::identity(1, 1), 2, 1.0, 1.0);
  EXPECT_LE(b.beta / 2, 3.25);
  EXPECT_LE(b.alpha, b.beta);
}

TEST(Curvature, SingularRRejected) {
  EXPECT_THROW(derive_curvature_bounds(scalar(0.5, 1), QuadraticCost(Mat::Identity(1, 1), Mat::Zero(1, 1)), 2, 1, 1),
               std::invalid_argument);
}

TEST(Curvature, SmoothnessAndConvexityCertificates) {
  RngStream rng(13);
  const int h = 5;
  for (int trial = 0; trial < 20; ++trial) {
    const LinearSystem lin = random_lds(rng, 3, 2, 0.9);
    const SystemModel sys = lin;
    const QuadraticCost c = QuadraticCost::identity(3, 2);
    const auto b = derive_curvature_bounds(lin, c, h, 1.0, 1.0);
    const auto w = normals(rng, h - 1, 3);
    const ProxyLossContext ctx(sys, c, h, w);
    for (int i = 0; i < 20; ++i) {
      const auto u = normals(rng, h, 2), v = normals(rng, h, 2);
      const auto g = proxy_window_grad(ctx, v);
      const double gap = eval_proxy(ctx, u) - eval_proxy(ctx, v) - window_dot(g, u) + window_dot(g, v);
      EXPECT_LE(gap, b.beta / 2 * window_sq(u, v) + 1e-9);
      EXPECT_GE(gap, b.alpha / 2 * (u.back() - v.back()).squaredNorm() - 1e-9);
    }
  }
}

TEST(Curvature, GBoundsTheLoss) {
  RngStream rng(14);
  const LinearSystem lin = random_lds(rng, 2, 2, 0.9);
  const SystemModel sys = lin;
  const QuadraticCost c = QuadraticCost::identity(2, 2);
  const double W = 0.5, Ru = 2.0;
  const auto b = derive_curvature_bounds(lin, c, 5, W, Ru);
  const BallSet actions(Ru, 2), dist(W, 2);
  for (int i = 0; i < 500; ++i) {
    std::vector<Vec> u, w;
    for (int j = 0; j < 5; ++j) u.push_back(project_to_ball(gaussian(rng, Vec::Zero(2), 3.0), actions));
    for (int j = 0; j < 4; ++j) w.push_back(project_to_ball(gaussian(rng, Vec::Zero(2), 3.0), dist));
    EXPECT_LE(eval_proxy(ProxyLossContext(sys, c, 5, w), u), b.G);
  }
}

}  // namespace
}  // namespace dynaboost
