#include "caer/train/optim.hpp"

namespace caer::train {

double StepSchedule::multiplier(int epoch) const {
  double m = 1.0;
  for (int d : decay_epochs) {
    if (d <= epoch) m *= factor;
  }
  return m;
}

Sgd::Sgd(std::map<std::string, std::vector<model::ParamRef>> groups, double momentum, double weight_decay)
    : groups_(std::move(groups)), momentum_(momentum), weight_decay_(weight_decay) {}

void Sgd::step(const std::map<std::string, double>& lr) {
  for (const auto& [name, params] : groups_) {
    auto it = lr.find(name);
    if (it == lr.end()) continue;
    const double rate = it->second;
    for (const auto& p : params) {
      model::Node& n = *p.var;
      if (!n.requires_grad || n.grad.size() == 0) continue;
      model::Mat g = n.grad;
      if (weight_decay_ != 0.0) g += weight_decay_ * n.value;
      if (momentum_ != 0.0) {
        auto [v, fresh] = velocity_.try_emplace(&n, g);
        if (!fresh) {
          v->second = momentum_ * v->second + g;
        }
        n.value -= rate * v->second;
      } else {
        n.value -= rate * g;
      }
    }
  }
}

void Sgd::zero_grad() {
  for (const auto& [name, params] : groups_) model::zero_grad(params);
}

}  // namespace caer::train
