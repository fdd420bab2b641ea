#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace caer::model {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

// Node of the reverse-mode graph. Leaves with requires_grad are parameters;
// interior nodes keep their parents and a closure that pushes this node's
// gradient into them.
struct Node {
  Mat value;
  Mat grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  long rows() const { return value.rows(); }
  long cols() const { return value.cols(); }
  // Adds g into grad, allocating on first use.
  void accumulate(const Mat& g);
};

using Var = std::shared_ptr<Node>;

// Constant input (no gradient).
Var constant(Mat value);
// Trainable leaf.
Var parameter(Mat value);

// While alive, ops record no graph on this thread.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Seeds d(root)/d(root) = 1 (root must be 1x1) and propagates to every
// ancestor that requires a gradient. Interior graph links are released
// afterwards, so a graph can be walked only once.
void backward(const Var& root);

// A named trainable tensor.
struct ParamRef {
  std::string name;
  Var var;
};

void zero_grad(const std::vector<ParamRef>& params);

}  // namespace caer::model
