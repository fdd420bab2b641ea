#include "caer/model/ops.hpp"

#include <cmath>

#include <fmt/format.h>

#include "caer/error.hpp"

namespace caer::model {

namespace {

[[noreturn]] void shape_error(const char* op, const Mat& a, const Mat& b) {
  throw Error(ErrorCode::shape, fmt::format("{}: incompatible shapes {}x{} and {}x{}", op, a.rows(), a.cols(),
                                            b.rows(), b.cols()));
}

Var make(Mat value, std::vector<Var> parents, std::function<void(Node&)> fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  if (grad_enabled()) {
    for (const auto& p : parents) n->requires_grad = n->requires_grad || p->requires_grad;
    if (n->requires_grad) {
      n->parents = std::move(parents);
      n->backward = std::move(fn);
    }
  }
  return n;
}

void push(const Var& p, const Mat& g) {
  if (p->requires_grad) p->accumulate(g);
}

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

}  // namespace

Var matmul(const Var& a, const Var& b) {
  if (a->cols() != b->rows()) shape_error("matmul", a->value, b->value);
  Mat v = a->value * b->value;
  return make(std::move(v), {a, b}, [a, b](Node& n) {
    if (a->requires_grad) a->accumulate(n.grad * b->value.transpose());
    if (b->requires_grad) b->accumulate(a->value.transpose() * n.grad);
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  if (a->cols() != b->cols()) shape_error("matmul_nt", a->value, b->value);
  Mat v = a->value * b->value.transpose();
  return make(std::move(v), {a, b}, [a, b](Node& n) {
    if (a->requires_grad) a->accumulate(n.grad * b->value);
    if (b->requires_grad) b->accumulate(n.grad.transpose() * a->value);
  });
}

Var add(const Var& a, const Var& b) {
  if (a->rows() != b->rows() || a->cols() != b->cols()) shape_error("add", a->value, b->value);
  return make(a->value + b->value, {a, b}, [a, b](Node& n) {
    push(a, n.grad);
    push(b, n.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  if (a->rows() != b->rows() || a->cols() != b->cols()) shape_error("sub", a->value, b->value);
  return make(a->value - b->value, {a, b}, [a, b](Node& n) {
    push(a, n.grad);
    if (b->requires_grad) b->accumulate(-n.grad);
  });
}

Var mul(const Var& a, const Var& b) {
  if (a->rows() != b->rows() || a->cols() != b->cols()) shape_error("mul", a->value, b->value);
  return make(a->value.cwiseProduct(b->value), {a, b}, [a, b](Node& n) {
    if (a->requires_grad) a->accumulate(n.grad.cwiseProduct(b->value));
    if (b->requires_grad) b->accumulate(n.grad.cwiseProduct(a->value));
  });
}

Var scale(const Var& a, double s) {
  return make(a->value * s, {a}, [a, s](Node& n) { a->accumulate(n.grad * s); });
}

Var add_row(const Var& a, const Var& row) {
  if (row->rows() != 1 || row->cols() != a->cols()) shape_error("add_row", a->value, row->value);
  Mat v = a->value.rowwise() + row->value.row(0);
  return make(std::move(v), {a, row}, [a, row](Node& n) {
    push(a, n.grad);
    if (row->requires_grad) row->accumulate(n.grad.colwise().sum());
  });
}

Var sum(const Var& a) {
  Mat v(1, 1);
  v(0, 0) = a->value.sum();
  return make(std::move(v), {a}, [a](Node& n) {
    a->accumulate(Mat::Constant(a->rows(), a->cols(), n.grad(0, 0)));
  });
}

Var gelu(const Var& a) {
  Mat v = a->value.unaryExpr([](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); });
  return make(std::move(v), {a}, [a](Node& n) {
    Mat d = a->value.unaryExpr([](double x) {
      return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
    });
    a->accumulate(n.grad.cwiseProduct(d));
  });
}

Var quick_gelu(const Var& a) {
  Mat s = a->value.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-1.702 * x)); });
  Mat v = a->value.cwiseProduct(s);
  return make(std::move(v), {a}, [a, s = std::move(s)](Node& n) {
    Mat d = s.array() + 1.702 * a->value.array() * s.array() * (1.0 - s.array());
    a->accumulate(n.grad.cwiseProduct(d));
  });
}

Mat softmax_rows(const Mat& a) {
  Mat y = a.colwise() - a.rowwise().maxCoeff();
  y = y.array().exp();
  y.array().colwise() /= y.rowwise().sum().array();
  return y;
}

Var softmax_rows(const Var& a, bool causal) {
  Mat x = a->value;
  if (causal) {
    if (x.rows() != x.cols()) shape_error("softmax_rows(causal)", x, x);
    for (long i = 0; i < x.rows(); ++i)
      for (long j = i + 1; j < x.cols(); ++j) x(i, j) = -std::numeric_limits<double>::infinity();
  }
  Mat y = softmax_rows(x);
  return make(y, {a}, [a, y](Node& n) {
    Eigen::VectorXd dot = n.grad.cwiseProduct(y).rowwise().sum();
    Mat g = y.cwiseProduct(n.grad.colwise() - dot);
    a->accumulate(g);
  });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const long d = x->cols();
  if (gamma->rows() != 1 || gamma->cols() != d || beta->rows() != 1 || beta->cols() != d) {
    shape_error("layer_norm", x->value, gamma->value);
  }
  Eigen::VectorXd mean = x->value.rowwise().mean();
  Mat xc = x->value.colwise() - mean;
  Eigen::VectorXd inv = ((xc.array().square().rowwise().sum() / static_cast<double>(d)) + eps).rsqrt();
  Mat xhat = xc.array().colwise() * inv.array();
  Mat v = (xhat.array().rowwise() * gamma->value.row(0).array()).rowwise() + beta->value.row(0).array();
  return make(std::move(v), {x, gamma, beta}, [x, gamma, beta, xhat, inv, d](Node& n) {
    if (gamma->requires_grad) gamma->accumulate(n.grad.cwiseProduct(xhat).colwise().sum());
    if (beta->requires_grad) beta->accumulate(n.grad.colwise().sum());
    if (x->requires_grad) {
      Mat gx = n.grad.array().rowwise() * gamma->value.row(0).array();
      Eigen::VectorXd m1 = gx.rowwise().mean();
      Eigen::VectorXd m2 = gx.cwiseProduct(xhat).rowwise().mean();
      Mat dx = (gx.array() - xhat.array().colwise() * m2.array()).matrix();
      dx = dx.colwise() - m1;
      dx.array().colwise() *= inv.array();
      x->accumulate(dx);
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw Error(ErrorCode::shape, "concat_rows: nothing to concatenate");
  long rows = 0;
  const long cols = parts[0]->cols();
  for (const auto& p : parts) {
    if (p->cols() != cols) shape_error("concat_rows", parts[0]->value, p->value);
    rows += p->rows();
  }
  Mat v(rows, cols);
  long r = 0;
  for (const auto& p : parts) {
    v.middleRows(r, p->rows()) = p->value;
    r += p->rows();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return make(std::move(v), ps, [ps](Node& n) {
    long r = 0;
    for (const auto& p : ps) {
      if (p->requires_grad) p->accumulate(n.grad.middleRows(r, p->rows()));
      r += p->rows();
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw Error(ErrorCode::shape, "concat_cols: nothing to concatenate");
  long cols = 0;
  const long rows = parts[0]->rows();
  for (const auto& p : parts) {
    if (p->rows() != rows) shape_error("concat_cols", parts[0]->value, p->value);
    cols += p->cols();
  }
  Mat v(rows, cols);
  long c = 0;
  for (const auto& p : parts) {
    v.middleCols(c, p->cols()) = p->value;
    c += p->cols();
  }
  std::vector<Var> ps(parts.begin(), parts.end());
  return make(std::move(v), ps, [ps](Node& n) {
    long c = 0;
    for (const auto& p : ps) {
      if (p->requires_grad) p->accumulate(n.grad.middleCols(c, p->cols()));
      c += p->cols();
    }
  });
}

Var slice_rows(const Var& a, long start, long count) {
  if (start < 0 || count < 0 || start + count > a->rows()) {
    throw Error(ErrorCode::shape, fmt::format("slice_rows [{}, {}) of {} rows", start, start + count, a->rows()));
  }
  return make(a->value.middleRows(start, count), {a}, [a, start, count](Node& n) {
    Mat g = Mat::Zero(a->rows(), a->cols());
    g.middleRows(start, count) = n.grad;
    a->accumulate(g);
  });
}

Var slice_cols(const Var& a, long start, long count) {
  if (start < 0 || count < 0 || start + count > a->cols()) {
    throw Error(ErrorCode::shape, fmt::format("slice_cols [{}, {}) of {} cols", start, start + count, a->cols()));
  }
  return make(a->value.middleCols(start, count), {a}, [a, start, count](Node& n) {
    Mat g = Mat::Zero(a->rows(), a->cols());
    g.middleCols(start, count) = n.grad;
    a->accumulate(g);
  });
}

Var l2_normalize_rows(const Var& a) {
  Eigen::VectorXd norms = a->value.rowwise().norm();
  for (long i = 0; i < norms.size(); ++i) {
    if (!(norms[i] > 0.0) || !std::isfinite(norms[i])) {
      throw Error(ErrorCode::degenerate_input, fmt::format("row {} has zero or non-finite norm", i));
    }
  }
  Mat y = a->value.array().colwise() / norms.array();
  return make(y, {a}, [a, y, norms](Node& n) {
    Eigen::VectorXd dot = n.grad.cwiseProduct(y).rowwise().sum();
    Mat g = n.grad - (y.array().colwise() * dot.array()).matrix();
    g.array().colwise() /= norms.array();
    a->accumulate(g);
  });
}

Var cross_entropy_logits(const Var& logits, std::span<const int> labels) {
  const long b = logits->rows();
  const long k = logits->cols();
  if (static_cast<long>(labels.size()) != b || b == 0) {
    throw Error(ErrorCode::shape, fmt::format("cross_entropy: {} labels for {} rows", labels.size(), b));
  }
  for (int y : labels) {
    if (y < 0 || y >= k) throw Error(ErrorCode::shape, fmt::format("cross_entropy: label {} outside [0, {})", y, k));
  }
  Mat p = softmax_rows(logits->value);
  double loss = 0.0;
  for (long i = 0; i < b; ++i) {
    const double m = logits->value.row(i).maxCoeff();
    const double lse = m + std::log((logits->value.row(i).array() - m).exp().sum());
    loss += lse - logits->value(i, labels[i]);
  }
  Mat v(1, 1);
  v(0, 0) = loss / static_cast<double>(b);
  std::vector<int> ys(labels.begin(), labels.end());
  return make(std::move(v), {logits}, [logits, p, ys, b](Node& n) {
    Mat g = p;
    for (long i = 0; i < b; ++i) g(i, ys[i]) -= 1.0;
    logits->accumulate(g * (n.grad(0, 0) / static_cast<double>(b)));
  });
}

}  // namespace caer::model
