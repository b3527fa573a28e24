#include "dynaboost/harness/agents.hpp"

#include <stdexcept>

namespace dynaboost::harness {

LearningAgent::LearningAgent(std::unique_ptr<WeakController> controller, int memory)
    : controller_(std::move(controller)),
      played_(memory, controller_ ? controller_->action_set().dim() : 0) {
  if (!controller_) throw std::invalid_argument("LearningAgent: null controller");
}

Vec LearningAgent::act(const Observation& obs) {
  Vec u = controller_->act(obs);
  played_.push(u);
  return u;
}

void LearningAgent::learn(const ProxyLossContext& ctx, const LossHistory& history) {
  controller_->receive_loss(LinearResidualLoss(proxy_window_grad(ctx, played_.items())), history);
}

}  // namespace dynaboost::harness
