#pragma once

// Closed-loop agents: one interface over the booster, a standalone learning
// controller and fixed policies, so episodes treat them alike.

#include <memory>

#include "dynaboost/boosting.hpp"
#include "dynaboost/controllers.hpp"

namespace dynaboost::harness {

class Agent {
 public:
  virtual ~Agent() = default;
  virtual Vec act(const Observation& obs) = 0;
  // Called once per round after the transition.
  virtual void learn(const ProxyLossContext&, const LossHistory&) {}
  virtual std::size_t parameter_count() const = 0;
};

class BoostedAgent : public Agent {
 public:
  explicit BoostedAgent(Booster booster) : booster_(std::move(booster)) {}

  Vec act(const Observation& obs) override { return booster_.act(obs).action; }
  void learn(const ProxyLossContext& ctx, const LossHistory& history) override {
    booster_.update(ctx, history);
  }
  std::size_t parameter_count() const override { return booster_.parameter_count(); }

  const Booster& booster() const { return booster_; }

 private:
  Booster booster_;
};

// A weak controller trained on its own proxy loss: the linear loss built from
// the proxy gradient at its own played actions.
class LearningAgent : public Agent {
 public:
  LearningAgent(std::unique_ptr<WeakController> controller, int memory);

  Vec act(const Observation& obs) override;
  void learn(const ProxyLossContext& ctx, const LossHistory& history) override;
  std::size_t parameter_count() const override { return controller_->parameter_count(); }

  const WeakController& controller() const { return *controller_; }

 private:
  std::unique_ptr<WeakController> controller_;
  Window played_;
};

class FixedAgent : public Agent {
 public:
  explicit FixedAgent(std::unique_ptr<WeakController> controller)
      : controller_(std::move(controller)) {}

  Vec act(const Observation& obs) override { return controller_->act(obs); }
  std::size_t parameter_count() const override { return controller_->parameter_count(); }

 private:
  std::unique_ptr<WeakController> controller_;
};

}  // namespace dynaboost::harness
