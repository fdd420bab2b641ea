#pragma once

#include <map>
#include <string>
#include <vector>

#include "caer/model/tensor.hpp"

namespace caer::train {

// Step decay: base * factor^(number of decay epochs <= epoch). Epochs are
// 1-based.
struct StepSchedule {
  std::vector<int> decay_epochs{10, 15};
  double factor = 0.1;

  double multiplier(int epoch) const;
};

// SGD with optional momentum and L2 weight decay, one learning rate per
// named parameter group.
class Sgd {
 public:
  Sgd(std::map<std::string, std::vector<model::ParamRef>> groups, double momentum = 0.0, double weight_decay = 0.0);

  // Applies p -= lr[group] * (g + wd p) (with momentum buffer if enabled)
  // to every parameter that holds a gradient. Groups absent from `lr` are
  // left untouched.
  void step(const std::map<std::string, double>& lr);
  void zero_grad();

  const std::map<std::string, std::vector<model::ParamRef>>& groups() const { return groups_; }

 private:
  std::map<std::string, std::vector<model::ParamRef>> groups_;
  double momentum_;
  double weight_decay_;
  std::map<const model::Node*, model::Mat> velocity_;
};

}  // namespace caer::train
