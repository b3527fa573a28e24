#include "dynaboost/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dynaboost {

const char* variant_name(BoostVariant variant) {
  return variant == BoostVariant::kDynaBoost1 ? "dynaboost1" : "dynaboost2";
}

std::vector<double> step_lengths(BoostVariant variant, int n, double alpha, double beta) {
  if (n < 1) throw std::invalid_argument("booster needs at least one learner");
  std::vector<double> eta(static_cast<std::size_t>(n));
  if (variant == BoostVariant::kDynaBoost1) {
    for (int i = 1; i <= n; ++i) eta[static_cast<std::size_t>(i - 1)] = 2.0 / (i + 1.0);
    return eta;
  }
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw std::invalid_argument("dynaboost2 needs positive, finite alpha and beta");
  }
  if (alpha > beta) throw std::invalid_argument("dynaboost2 needs alpha <= beta");
  std::fill(eta.begin(), eta.end(), alpha / beta);
  return eta;
}

std::vector<double> combination_weights(int n) {
  if (n < 1) throw std::invalid_argument("booster needs at least one learner");
  std::vector<double> gamma(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) {
    gamma[static_cast<std::size_t>(i - 1)] = 2.0 * i / (static_cast<double>(n) * (n + 1.0));
  }
  return gamma;
}

Booster::Booster(BoostVariant variant, std::vector<std::unique_ptr<WeakController>> learners,
                 int memory, Index action_dim, std::optional<double> alpha,
                 std::optional<double> beta)
    : variant_(variant), learners_(std::move(learners)), memory_(memory) {
  if (learners_.empty()) throw std::invalid_argument("booster needs at least one learner");
  if (memory < 1) throw std::invalid_argument("booster memory must be >= 1");
  for (const auto& l : learners_) {
    if (!l) throw std::invalid_argument("booster: null learner");
    if (l->action_set().dim() != action_dim) {
      throw std::invalid_argument("booster: learner action dimension mismatch");
    }
  }
  if (variant == BoostVariant::kDynaBoost2) {
    if (!alpha || !beta) {
      throw std::invalid_argument("dynaboost2 requires alpha and beta curvature inputs");
    }
    steps_ = step_lengths(variant, size(), *alpha, *beta);
    beta_ = *beta;
  } else {
    steps_ = step_lengths(variant, size());
  }
  levels_.assign(learners_.size() + 1, Window(memory, action_dim));
}

BoostAction Booster::act(const Observation& obs) {
  BoostAction out;
  out.partials.reserve(learners_.size() + 1);
  out.partials.push_back(zero_act(levels_.front().dim()));
  for (std::size_t i = 0; i < learners_.size(); ++i) {
    const Vec a = learners_[i]->act(obs);
    out.partials.push_back((1.0 - steps_[i]) * out.partials.back() + steps_[i] * a);
  }
  for (std::size_t level = 0; level < levels_.size(); ++level) levels_[level].push(out.partials[level]);
  out.action = out.partials.back();
  return out;
}

ResidualLoss Booster::residual_loss(int i, const ProxyLossContext& ctx) const {
  if (i < 1 || i > size()) throw std::out_of_range("Booster::residual_loss");
  if (ctx.memory() != memory_) throw std::invalid_argument("booster: proxy memory mismatch");
  const auto anchors = levels_[static_cast<std::size_t>(i - 1)].items();
  std::vector<Vec> grad = proxy_window_grad(ctx, anchors);
  if (variant_ == BoostVariant::kDynaBoost1) return LinearResidualLoss(std::move(grad));
  const double curvature = steps_[static_cast<std::size_t>(i - 1)] * beta_ / 2.0;
  return QuadraticResidualLoss(std::move(grad), std::vector<Vec>(anchors.begin(), anchors.end()),
                               curvature);
}

void Booster::update(const ProxyLossContext& ctx, const LossHistory& history) {
  for (int i = 1; i <= size(); ++i) {
    learners_[static_cast<std::size_t>(i - 1)]->receive_loss(residual_loss(i, ctx), history);
  }
}

const Window& Booster::level_window(int level) const {
  if (level < 0 || level > size()) throw std::out_of_range("Booster::level_window");
  return levels_[static_cast<std::size_t>(level)];
}

const WeakController& Booster::learner(int i) const {
  if (i < 1 || i > size()) throw std::out_of_range("Booster::learner");
  return *learners_[static_cast<std::size_t>(i - 1)];
}

std::size_t Booster::parameter_count() const {
  std::size_t total = 0;
  for (const auto& l : learners_) total += l->parameter_count();
  return total;
}

}  // namespace dynaboost
