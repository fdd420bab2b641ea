#include "caer/model/tensor.hpp"

#include <unordered_set>

#include "caer/error.hpp"

namespace caer::model {

namespace {
thread_local bool g_grad_enabled = true;
}

void Node::accumulate(const Mat& g) {
  if (grad.size() == 0) {
    grad = g;
  } else {
    grad += g;
  }
}

Var constant(Mat value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return n;
}

Var parameter(Mat value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  return n;
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

void backward(const Var& root) {
  if (root->rows() != 1 || root->cols() != 1) {
    throw Error(ErrorCode::shape, "backward() needs a scalar root");
  }
  if (!root->requires_grad) return;

  // Iterative post-order DFS -> reverse topological order. `order` owns the
  // nodes so releasing graph links below cannot free one still to be visited.
  std::vector<Var> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Var, std::size_t>> stack{{root, 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Var p = node->parents[next++];
      if (p->requires_grad && seen.insert(p.get()).second) stack.emplace_back(std::move(p), 0);
    } else {
      order.push_back(std::move(node));
      stack.pop_back();
    }
  }

  root->accumulate(Mat::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = it->get();
    if (n->backward && n->grad.size() != 0) n->backward(*n);
    if (!n->parents.empty()) {
      n->parents.clear();
      n->backward = nullptr;
      if (n != root.get()) n->grad.resize(0, 0);
    }
  }
}

void zero_grad(const std::vector<ParamRef>& params) {
  for (const auto& p : params) p.var->grad.resize(0, 0);
}

}  // namespace caer::model
